#include "cdqaoa/harness.hpp"
#include "cdqaoa/symmetry.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace cdqaoa;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kNumerical = 3, kIo = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
    std::string model;
    int sites = 0;
    std::vector<double> T;
    std::string protocol;
    bool resume = false;
};

ExperimentConfig resolve(const Options& o)
{
    ExperimentConfig c = o.config.empty() ? config_from_json("{}") : load_config(o.config);
    if (!o.model.empty() || o.sites > 0) {
        const ModelKind kind = o.model.empty() ? c.model.kind : parse_model(o.model);
        const int n = o.sites > 0 ? o.sites : c.model.n_sites;
        c.model = kind == c.model.kind ? ModelSpec::make(kind, n, c.model.couplings) : ModelSpec::make(kind, n);
    }
    if (!o.T.empty()) {
        for (std::size_t i = 1; i < o.T.size(); ++i)
            if (o.T[i] <= o.T[i - 1]) throw InputError("--T values must be strictly increasing");
        c.T_grid = o.T;
    }
    if (o.seed) {
        c.seed = *o.seed;
        c.solver.rng_seed = c.qsl.solver.rng_seed = *o.seed;
    }
    if (o.workers) {
        if (*o.workers < 1) throw InputError("--workers must be at least one");
        c.workers = c.qsl.workers = *o.workers;
    }
    if (!o.out.empty()) c.out = o.out;
    if (!o.protocol.empty()) c.protocol_path = o.protocol;
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
    return c;
}

std::string path_in(const ExperimentConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

std::string tag(double T) { return "T" + format_double(T); }

std::string joined(const std::vector<std::string>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
    return s;
}

std::string joined(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
}

std::vector<std::string> labels_of(const ExperimentConfig& c)
{
    auto l = c.labels.empty() ? default_labels(c.model) : c.labels;
    for (const char* h : {"H1", "H2"})
        if (std::find(l.begin(), l.end(), h) == l.end()) l.push_back(h);
    return l;
}

void write_scan(const ExperimentConfig& c)
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : scaling_scan(c))
        rows.push_back({std::to_string(s.n_sites), std::to_string(s.q), format_double(s.T),
                        format_double(s.energy_density), format_double(s.energy_ratio), joined(s.protocol.tau),
                        joined(s.protocol.alphas)});
    write_csv(path_in(c, "scan.csv"), {"N", "q", "T", "energy_density", "energy_ratio", "tau", "alphas"}, rows);
}

int cmd_basis(const ExperimentConfig& c)
{
    const SectorBasis b = default_basis(c.model, c.full_basis);
    const char* kind = b.kind == BasisKind::Full ? "full" : b.kind == BasisKind::LmgTotalSpin ? "lmg_totalspin" : "translation_parity";
    write_csv(path_in(c, "basis.csv"), {"model", "N", "kind", "dim"},
              {{model_name(c.model.kind), std::to_string(c.model.n_sites), kind, std::to_string(b.dim())}});
    std::cout << model_name(c.model.kind) << " N=" << c.model.n_sites << " " << kind << " dim=" << b.dim() << '\n';
    return kOk;
}

int cmd_evolve(const ExperimentConfig& c)
{
    if (c.protocol_path.empty()) throw InputError("evolve needs a protocol table (--protocol or config 'protocol')");
    const ProtocolSequence seq = read_protocol_table(c.protocol_path).sequence();
    const ControlProblem p = make_problem(c.model, seq.tau, c.full_basis);
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : evolve_trace(p, seq, c.samples_per_piece))
        rows.push_back({format_double(t.t), format_double(t.energy_ratio), format_double(t.fidelity),
                        format_double(t.entropy_density)});
    write_csv(path_in(c, "trace.csv"), {"t", "energy_ratio", "fidelity", "entropy_density"}, rows);
    std::cout << "final E/E_GS=" << rows.back()[1] << " F=" << rows.back()[2] << '\n';
    return kOk;
}

int cmd_protocol_method(ExperimentConfig c, const std::string& method, bool resume)
{
    if (!c.sizes.empty() || !c.depths.empty()) {
        c.method = method;
        write_scan(c);
        return kOk;
    }
    const ControlProblem p = make_problem(c.model, labels_of(c), c.full_basis);
    std::vector<std::vector<std::string>> rows;
    const std::string records = path_in(c, method + "_records.jsonl");
    fs::remove(records);
    for (double T : c.T_grid) {
        EvalRecord best;
        if (method == "qaoa") {
            best = run_qaoa(p, c.q, T, c.solver, c.workers);
        } else {
            TrainConfig tc = c.train_config(T);
            tc.log_path = path_in(c, "train_" + tag(T) + ".jsonl");
            tc.checkpoint_path = path_in(c, "checkpoint_" + tag(T) + ".json");
            std::optional<TrainState> state;
            if (resume && fs::exists(tc.checkpoint_path)) state = load_checkpoint(tc, tc.checkpoint_path);
            best = train(tc, make_evaluator(p, T, c.solver, c.workers), std::move(state)).best;
        }
        append_line(records, record_json(best));
        write_protocol_table(path_in(c, method + "_protocol_" + tag(T) + ".csv"), ProtocolTable::from_sequence(best.seq));
        const double nd = T > 0 ? protocol_norm_density(p, best.seq) : 0.0;
        rows.push_back({format_double(T), format_double(best.energy_ratio), format_double(best.fidelity),
                        format_double(best.best_energy_density), format_double(nd), joined(best.seq.tau)});
        std::cout << method << " T=" << T << " E/E_GS=" << best.energy_ratio << " F=" << best.fidelity << '\n';
    }
    write_csv(path_in(c, method + ".csv"), {"T", "energy_ratio", "fidelity", "energy_density", "norm_density", "tau"},
              rows);
    return kOk;
}

int cmd_drive(const ExperimentConfig& c, bool cd)
{
    const ControlProblem p = make_problem(c.model, {"H1", "H2"}, c.full_basis);
    const auto ansatz = c.cd_ansatz.empty() ? default_cd_ansatz(c.model) : c.cd_ansatz;
    const GaugeSystem sys = make_gauge_system(c.model, *p.basis, ansatz);
    const std::string name = cd ? "cd_drive" : "adiabatic";
    std::vector<std::vector<std::string>> rows;
    for (double T : c.T_grid) {
        DriveProtocol d = c.drive;
        d.T = T;
        const DriveResult r = cd ? run_cd_drive(sys, d, p.psi0) : run_adiabatic(sys, d, p.psi0);
        std::vector<SchedulePiece> pieces;
        for (const auto& s : r.steps) pieces.push_back({s.t1 - s.t0, s.hs_norm});
        const double nd = pieces.empty() ? 0.0 : norm_density(pieces, p.n_sites());
        rows.push_back({format_double(T), format_double(p.energy_ratio(r.psi)), format_double(fidelity(r.psi, p.targets)),
                        format_double(nd)});
        std::cout << name << " T=" << T << " E/E_GS=" << rows.back()[1] << " F=" << rows.back()[2] << '\n';
        if (cd) {
            std::vector<std::string> header{"t", "lambda", "lambda_dot"};
            for (const auto& a : ansatz) header.push_back("beta_" + a);
            std::vector<std::vector<std::string>> curve;
            for (const auto& s : r.steps) {
                std::vector<std::string> row{format_double(0.5 * (s.t0 + s.t1)), format_double(s.lambda),
                                             format_double(s.lambda_dot)};
                for (Eigen::Index j = 0; j < s.beta.size(); ++j) row.push_back(format_double(s.beta[j]));
                curve.push_back(row);
            }
            write_csv(path_in(c, "beta_" + tag(T) + ".csv"), header, curve);
        }
    }
    write_csv(path_in(c, name + ".csv"), {"T", "energy_ratio", "fidelity", "norm_density"}, rows);
    return kOk;
}

ModelSpec lmg_model(const ExperimentConfig& c)
{
    if (c.model.kind != ModelKind::Lmg) throw InputError("lmg subcommands need model 'lmg'");
    return c.model;
}

int cmd_lmg_qsl(const ExperimentConfig& c)
{
    const ModelSpec m = lmg_model(c);
    std::vector<std::vector<std::string>> rows;
    for (const auto& pt : qsl_scan(m.n_sites, c.h_grid, c.qsl))
        rows.push_back({format_double(pt.h), format_double(pt.t_qsl), format_double(pt.value), joined(pt.best.tau),
                        joined(pt.best.alphas)});
    write_csv(path_in(c, "qsl.csv"), {"h", "T_qsl", "value", "tau", "alphas"}, rows);
    for (const auto& r : rows) std::cout << "h=" << r[0] << " T_QSL=" << r[1] << '\n';
    return kOk;
}

int cmd_lmg_overlap(const ExperimentConfig& c)
{
    const ModelSpec m = lmg_model(c);
    std::vector<std::vector<std::string>> rows;
    for (const auto& o : overlap_scan(m.n_sites, c.h_grid, m.coupling("J"), c.workers))
        rows.push_back({format_double(o.h), format_double(o.overlap), std::to_string(o.manifold)});
    write_csv(path_in(c, "overlap.csv"), {"h", "overlap", "manifold"}, rows);
    return kOk;
}

int cmd_compare(const ExperimentConfig& c)
{
    std::vector<std::vector<std::string>> rows;
    int failed = 0;
    for (const auto& r : run_comparison(c)) {
        rows.push_back({format_double(r.T), r.method, format_double(r.result.energy_ratio),
                        format_double(r.result.fidelity), format_double(r.result.norm_density), r.error});
        if (!r.error.empty()) {
            ++failed;
            std::cerr << "cell T=" << r.T << " " << r.method << " failed: " << r.error << '\n';
        }
    }
    write_csv(path_in(c, "compare.csv"), {"T", "method", "energy_ratio", "fidelity", "norm_density", "error"}, rows);
    return failed ? kNumerical : kOk;
}

int cmd_transfer(const ExperimentConfig& c)
{
    if (c.protocols.empty() || c.sizes.empty()) throw InputError("transfer needs 'protocols' and 'sizes'");
    const TransferResult t = transfer_eval(c, c.protocols, c.sizes, c.T(), c.reoptimize);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t u = 0; u < t.unique.size(); ++u)
        for (std::size_t n = 0; n < t.sizes.size(); ++n)
            rows.push_back({joined(t.unique[u]), std::to_string(t.sizes[n]), format_double(t.energy[u][n])});
    write_csv(path_in(c, "transfer.csv"), {"tau", "N", "energy_density"}, rows);
    rows.clear();
    for (std::size_t n = 0; n < t.sizes.size(); ++n)
        rows.push_back({std::to_string(t.sizes[n]), format_double(t.min_energy[n]), format_double(t.max_energy[n])});
    write_csv(path_in(c, "transfer_range.csv"), {"N", "min_energy_density", "max_energy_density"}, rows);
    std::cout << "unique protocols: " << t.unique.size() << '\n';
    return kOk;
}

int cmd_landscape(const ExperimentConfig& c)
{
    if (c.tau.empty()) throw InputError("landscape needs a sequence 'tau'");
    const ControlProblem p = make_problem(c.model, c.tau, c.full_basis);
    std::vector<std::vector<std::string>> rows;
    for (const auto& pt : landscape_sample(c.tau, c.T(), c.landscape_points, p, c.solver))
        rows.push_back({format_double(pt.neg_log_fidelity), format_double(pt.entropy), format_double(pt.energy_density)});
    write_csv(path_in(c, "landscape.csv"), {"neg_log_fidelity", "entropy", "energy_density"}, rows);
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Counterdiabatic QAOA control synthesis"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "JSON experiment config");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--workers", o.workers, "evaluation threads");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--model", o.model, "ising_half | ising_one | heisenberg_one | lmg");
    app.add_option("--sites", o.sites, "number of sites");
    app.add_option("--T", o.T, "protocol durations");

    std::string chosen;
    auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        s->callback([&chosen, name] { chosen = name; });
        return s;
    };
    sub("basis", "sector basis dimension");
    sub("evolve", "time trace of a protocol table")->add_option("--protocol", o.protocol, "CSV label,duration");
    sub("qaoa", "conventional QAOA, both alternation orders");
    sub("cdqaoa-train", "train the sequence policy")->add_flag("--resume", o.resume, "continue from the checkpoint");
    sub("cd-drive", "variational counterdiabatic driving");
    sub("adiabatic", "plain adiabatic driving");
    sub("lmg-qsl", "quantum speed limit scan for the LMG model");
    sub("lmg-overlap", "initial/target overlap scan for the LMG model");
    sub("compare", "all four methods on a T grid");
    sub("transfer", "apply protocols across system sizes");
    sub("landscape", "local minima of one sequence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        const ExperimentConfig c = resolve(o);
        if (chosen == "basis") return cmd_basis(c);
        if (chosen == "evolve") return cmd_evolve(c);
        if (chosen == "qaoa") return cmd_protocol_method(c, "qaoa", false);
        if (chosen == "cdqaoa-train") return cmd_protocol_method(c, "cdqaoa", o.resume);
        if (chosen == "cd-drive") return cmd_drive(c, true);
        if (chosen == "adiabatic") return cmd_drive(c, false);
        if (chosen == "lmg-qsl") return cmd_lmg_qsl(c);
        if (chosen == "lmg-overlap") return cmd_lmg_overlap(c);
        if (chosen == "compare") return cmd_compare(c);
        if (chosen == "transfer") return cmd_transfer(c);
        if (chosen == "landscape") return cmd_landscape(c);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
    return kOther;
}
