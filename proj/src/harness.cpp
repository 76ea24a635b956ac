#include "cdqaoa/harness.hpp"

#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/symmetry.hpp"
#include "cdqaoa/worker_pool.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace cdqaoa {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw InputError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw InputError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& dst)
{
    if (j.contains(key)) dst = j.at(key).get<T>();
}

ProtocolSequence json_protocol(const json& j)
{
    check_keys(j, {"tau", "alphas"}, "protocol");
    ProtocolSequence s;
    s.tau = j.at("tau").get<std::vector<std::string>>();
    s.alphas = j.at("alphas").get<std::vector<double>>();
    s.validate();
    return s;
}

std::vector<std::string> with_model_parts(std::vector<std::string> labels)
{
    for (const char* l : {"H1", "H2"})
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    return labels;
}

ModelSpec resized(ModelSpec m, int n)
{
    m.n_sites = n;
    return m;
}

MethodResult from_record(const ControlProblem& p, const EvalRecord& r)
{
    MethodResult m;
    m.energy_density = r.best_energy_density;
    m.energy_ratio = r.energy_ratio;
    m.fidelity = r.fidelity;
    m.protocol = r.seq;
    m.norm_density = r.seq.total() > 0 ? protocol_norm_density(p, r.seq) : 0.0;
    return m;
}

}  // namespace

TrainConfig ExperimentConfig::train_config(double T) const
{
    TrainConfig t = rl;
    t.labels = labels.empty() ? default_labels(model) : labels;
    t.q = q;
    t.T = T;
    t.seed = seed;
    t.workers = workers;
    t.solver = solver;
    return t;
}

std::vector<std::string> default_labels(const ModelSpec& model)
{
    switch (model.kind) {
    case ModelKind::IsingHalf: return {"H1", "H2", "Y", "X|Y", "Y|Z"};
    case ModelKind::IsingOne: return {"H1", "H2", "Y", "XY", "YZ", "X|Y", "Y|Z"};
    case ModelKind::HeisenbergOne: return {"H1", "H2", "Z", "X|X", "Y", "XY", "YZ", "X|Y-XY", "Y|Z-YZ"};
    case ModelKind::Lmg: return {"H1", "H2", "Y"};
    }
    return {"H1", "H2"};
}

ExperimentConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        check_keys(j, {"model", "method", "labels", "q", "T", "solver", "rl", "drive", "seed", "workers", "out",
                       "sizes", "depths", "reoptimize", "protocols", "lmg", "tau", "landscape_points", "protocol",
                       "samples_per_piece"},
                   "config");
        if (j.contains("model")) {
            const json& m = j["model"];
            check_keys(m, {"name", "N", "couplings", "full_basis"}, "model");
            std::map<std::string, double> couplings;
            read(m, "couplings", couplings);
            c.model = ModelSpec::make(parse_model(m.value("name", std::string("ising_half"))), m.value("N", 8),
                                      couplings);
            read(m, "full_basis", c.full_basis);
        }
        read(j, "method", c.method);
        read(j, "labels", c.labels);
        read(j, "q", c.q);
        if (j.contains("T")) {
            if (j["T"].is_array())
                c.T_grid = j["T"].get<std::vector<double>>();
            else
                c.T_grid = {j["T"].get<double>()};
        }
        if (j.contains("solver")) {
            const json& s = j["solver"];
            check_keys(s, {"tol", "max_iter", "restarts"}, "solver");
            read(s, "tol", c.solver.tol);
            read(s, "max_iter", c.solver.max_iter);
            read(s, "restarts", c.solver.restarts);
        }
        if (j.contains("rl")) {
            const json& r = j["rl"];
            check_keys(r, {"iterations", "batch", "hidden", "lr", "lr_decay", "lr_every", "temperature",
                           "temperature_decay", "temperature_every", "clip", "ppo_steps", "baseline_decay",
                           "checkpoint_every"},
                       "rl");
            read(r, "iterations", c.rl.iterations);
            read(r, "batch", c.rl.batch);
            read(r, "hidden", c.rl.hidden);
            read(r, "lr", c.rl.lr);
            read(r, "lr_decay", c.rl.lr_decay);
            read(r, "lr_every", c.rl.lr_every);
            read(r, "temperature", c.rl.temperature);
            read(r, "temperature_decay", c.rl.temperature_decay);
            read(r, "temperature_every", c.rl.temperature_every);
            read(r, "clip", c.rl.clip);
            read(r, "ppo_steps", c.rl.ppo_steps);
            read(r, "baseline_decay", c.rl.baseline_decay);
            read(r, "checkpoint_every", c.rl.checkpoint_every);
        }
        if (j.contains("drive")) {
            const json& d = j["drive"];
            check_keys(d, {"dt", "substeps", "ansatz"}, "drive");
            read(d, "dt", c.drive.dt);
            read(d, "substeps", c.drive.substeps);
            read(d, "ansatz", c.cd_ansatz);
        }
        read(j, "seed", c.seed);
        read(j, "workers", c.workers);
        read(j, "out", c.out);
        read(j, "sizes", c.sizes);
        read(j, "depths", c.depths);
        read(j, "reoptimize", c.reoptimize);
        if (j.contains("protocols"))
            for (const auto& p : j["protocols"]) c.protocols.push_back(json_protocol(p));
        if (j.contains("lmg")) {
            const json& l = j["lmg"];
            check_keys(l, {"h_grid", "labels", "q", "metric", "tolerance", "coarse_step", "fine_step", "window",
                           "t_max", "restarts"},
                       "lmg");
            read(l, "h_grid", c.h_grid);
            read(l, "labels", c.qsl.labels);
            read(l, "q", c.qsl.q);
            if (l.contains("metric")) {
                const auto m = l["metric"].get<std::string>();
                if (m == "energy")
                    c.qsl.metric = QslMetric::Energy;
                else if (m == "fidelity")
                    c.qsl.metric = QslMetric::Fidelity;
                else
                    throw InputError("lmg.metric must be 'energy' or 'fidelity'");
            }
            read(l, "tolerance", c.qsl.tolerance);
            read(l, "coarse_step", c.qsl.coarse_step);
            read(l, "fine_step", c.qsl.fine_step);
            read(l, "window", c.qsl.window);
            read(l, "t_max", c.qsl.t_max);
            read(l, "restarts", c.qsl.solver.restarts);
        }
        read(j, "tau", c.tau);
        read(j, "landscape_points", c.landscape_points);
        read(j, "protocol", c.protocol_path);
        read(j, "samples_per_piece", c.samples_per_piece);
    } catch (const json::exception& e) {
        throw InputError(std::string("bad config value: ") + e.what());
    }

    if (c.T_grid.empty()) throw InputError("T grid is empty");
    for (std::size_t i = 0; i < c.T_grid.size(); ++i) {
        if (!(c.T_grid[i] >= 0)) throw InputError("durations must be non-negative");
        if (i > 0 && c.T_grid[i] <= c.T_grid[i - 1]) throw InputError("T grid must be strictly increasing");
    }
    if (c.q < 1) throw InputError("q must be at least one");
    if (c.workers < 1) throw InputError("workers must be at least one");
    if (c.solver.restarts < 1) throw InputError("solver.restarts must be at least one");
    for (const auto& l : c.labels) catalog(l, c.model);  // throws on unknown labels
    c.qsl.J = c.model.kind == ModelKind::Lmg ? c.model.coupling("J") : 1.0;
    c.qsl.workers = c.workers;
    c.qsl.solver.rng_seed = c.seed;
    c.solver.rng_seed = c.seed;
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

ProtocolTable ProtocolTable::from_sequence(const ProtocolSequence& seq, double zero_tol)
{
    ProtocolTable t;
    for (int j = 0; j < seq.depth(); ++j)
        t.rows.push_back({seq.tau[j], seq.alphas[j], std::abs(seq.alphas[j]) < zero_tol, is_gauge_label(seq.tau[j])});
    return t;
}

ProtocolSequence ProtocolTable::sequence() const
{
    ProtocolSequence s;
    for (const auto& r : rows) {
        s.tau.push_back(r.label);
        s.alphas.push_back(r.duration);
    }
    return s;
}

double ProtocolTable::total() const
{
    double t = 0.0;
    for (const auto& r : rows) t += r.duration;
    return t;
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    if (!out) throw IoError("write failed: " + path);
}

void append_line(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to " + path);
    out << text << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_protocol_table(const std::string& path, const ProtocolTable& table)
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : table.rows) rows.push_back({r.label, format_double(r.duration)});
    write_csv(path, {"label", "duration"}, rows);
}

ProtocolTable read_protocol_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read protocol table " + path);
    ProtocolSequence seq;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw InputError(path + ":" + std::to_string(lineno) + ": expected label,duration");
        const std::string label = line.substr(0, comma), value = line.substr(comma + 1);
        if (lineno == 1 && label == "label") continue;
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty())
            throw InputError(path + ":" + std::to_string(lineno) + ": bad duration '" + value + "'");
        seq.tau.push_back(label);
        seq.alphas.push_back(d);
    }
    if (seq.tau.empty()) throw InputError(path + ": empty protocol table");
    seq.validate();
    return ProtocolTable::from_sequence(seq);
}

double protocol_norm_density(const ControlProblem& p, const ProtocolSequence& seq)
{
    std::vector<SchedulePiece> pieces;
    for (int j = 0; j < seq.depth(); ++j)
        pieces.push_back({seq.alphas[j], normalized_hs_norm(p.action(seq.tau[j]).matrix())});
    return norm_density(pieces, p.n_sites());
}

std::vector<EvalRecord> brute_force(const ControlProblem& p, const std::vector<std::string>& labels, int q,
                                    double T, const SolverConfig& cfg, int workers)
{
    return optimize_batch(legal_sequences(labels, q), T, p, cfg, workers);
}

const EvalRecord& best_record(const std::vector<EvalRecord>& records)
{
    if (records.empty()) throw std::invalid_argument("best_record: no records");
    return *std::min_element(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
        return a.best_energy_density < b.best_energy_density;
    });
}

EvalRecord run_qaoa(const ControlProblem& p, int q, double T, const SolverConfig& cfg, int workers)
{
    const auto recs = optimize_batch({alternating_sequence("H1", "H2", q), alternating_sequence("H2", "H1", q)}, T,
                                     p, cfg, workers);
    return best_record(recs);
}

MethodResult run_method(const ExperimentConfig& cfg, const std::string& method, double T)
{
    const std::vector<std::string> labels = cfg.labels.empty() ? default_labels(cfg.model) : cfg.labels;
    const ControlProblem p = make_problem(cfg.model, with_model_parts(labels), cfg.full_basis);

    if (method == "qaoa") return from_record(p, run_qaoa(p, cfg.q, T, cfg.solver, cfg.workers));
    if (method == "cdqaoa") {
        TrainConfig tc = cfg.train_config(T);
        tc.labels = labels;
        const TrainResult r = train(tc, make_evaluator(p, T, cfg.solver, cfg.workers));
        return from_record(p, r.best);
    }
    if (method == "cd_drive" || method == "adiabatic") {
        const auto ansatz = cfg.cd_ansatz.empty() ? default_cd_ansatz(cfg.model) : cfg.cd_ansatz;
        const GaugeSystem sys = make_gauge_system(cfg.model, *p.basis, ansatz);
        DriveProtocol d = cfg.drive;
        d.T = T;
        const DriveResult r = method == "cd_drive" ? run_cd_drive(sys, d, p.psi0) : run_adiabatic(sys, d, p.psi0);
        MethodResult m;
        m.energy_density = p.energy_density(r.psi);
        m.energy_ratio = p.energy_ratio(r.psi);
        m.fidelity = fidelity(r.psi, p.targets);
        if (T > 0) {
            std::vector<SchedulePiece> pieces;
            for (const auto& s : r.steps) pieces.push_back({s.t1 - s.t0, s.hs_norm});
            m.norm_density = norm_density(pieces, p.n_sites());
        }
        return m;
    }
    throw InputError("unknown method '" + method + "'");
}

std::vector<ComparisonRow> run_comparison(const ExperimentConfig& cfg, const std::vector<std::string>& methods)
{
    std::vector<ComparisonRow> rows;
    for (double T : cfg.T_grid)
        for (const auto& m : methods) {
            ComparisonRow row;
            row.T = T;
            row.method = m;
            try {
                row.result = run_method(cfg, m, T);
            } catch (const InputError&) {
                throw;
            } catch (const std::exception& e) {
                row.error = e.what();
                row.result.energy_ratio = row.result.fidelity = row.result.norm_density =
                    std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(std::move(row));
        }
    return rows;
}

TransferResult transfer_eval(const ExperimentConfig& cfg, const std::vector<ProtocolSequence>& protocols,
                             const std::vector<int>& sizes, double T, bool reoptimize)
{
    TransferResult res;
    res.sizes = sizes;
    std::vector<const ProtocolSequence*> first;
    std::vector<std::string> labels;
    for (const auto& p : protocols) {
        if (std::find(res.unique.begin(), res.unique.end(), p.tau) == res.unique.end()) {
            res.unique.push_back(p.tau);
            first.push_back(&p);
        }
        for (const auto& l : p.tau)
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    }
    res.energy.assign(res.unique.size(), std::vector<double>(sizes.size(), 0.0));
    for (std::size_t n = 0; n < sizes.size(); ++n) {
        const ControlProblem p = make_problem(resized(cfg.model, sizes[n]), labels, cfg.full_basis);
        std::vector<EvalRecord> recs;
        if (reoptimize) recs = optimize_batch(res.unique, T, p, cfg.solver, cfg.workers);
        for (std::size_t u = 0; u < res.unique.size(); ++u) {
            if (reoptimize) {
                res.energy[u][n] = recs[u].best_energy_density;
            } else {
                const auto& a = first[u]->alphas;
                res.energy[u][n] = protocol_energy_density(p, res.unique[u], Eigen::Map<const RVec>(a.data(), a.size()));
            }
        }
    }
    for (std::size_t n = 0; n < sizes.size(); ++n) {
        double lo = 1e300, hi = -1e300;
        for (const auto& row : res.energy) {
            lo = std::min(lo, row[n]);
            hi = std::max(hi, row[n]);
        }
        res.min_energy.push_back(lo);
        res.max_energy.push_back(hi);
    }
    return res;
}

std::vector<ScanPoint> scaling_scan(const ExperimentConfig& cfg)
{
    if (cfg.method != "qaoa" && cfg.method != "cdqaoa") throw InputError("scans run with method qaoa or cdqaoa");
    if (cfg.sizes.empty() && cfg.depths.empty()) throw InputError("scan needs 'sizes' or 'depths'");
    std::vector<ScanPoint> out;
    const bool by_size = !cfg.sizes.empty();
    const std::vector<int>& values = by_size ? cfg.sizes : cfg.depths;
    for (int v : values)
        for (double T : cfg.T_grid) {
            ExperimentConfig c = cfg;
            if (by_size)
                c.model.n_sites = v;
            else
                c.q = v;
            const MethodResult r = run_method(c, cfg.method, T);
            out.push_back({c.model.n_sites, c.q, T, r.energy_density, r.energy_ratio, r.protocol});
        }
    return out;
}

std::vector<TracePoint> evolve_trace(const ControlProblem& p, const ProtocolSequence& seq, int samples_per_piece)
{
    seq.validate();
    if (samples_per_piece < 1) throw InputError("samples_per_piece must be at least one");
    const bool chain = p.basis->is_chain() && p.n_sites() % 2 == 0;
    auto point = [&](double t, const CVec& psi) {
        const double s = chain ? 2.0 * entanglement_entropy(psi, *p.basis) / p.n_sites()
                               : std::numeric_limits<double>::quiet_NaN();
        return TracePoint{t, p.energy_ratio(psi), fidelity(psi, p.targets), s};
    };
    std::vector<TracePoint> out;
    CVec psi = p.psi0;
    double t = 0.0;
    out.push_back(point(t, psi));
    for (int j = 0; j < seq.depth(); ++j) {
        const Operator& op = p.action(seq.tau[j]);
        const double step = seq.alphas[j] / samples_per_piece;
        for (int s = 0; s < samples_per_piece; ++s) {
            psi = op.propagate(step, psi);
            t += step;
            out.push_back(point(t, psi));
        }
    }
    return out;
}

std::string record_json(const EvalRecord& r)
{
    json j;
    j["tau"] = r.seq.tau;
    j["alphas"] = r.seq.alphas;
    j["energy_density"] = r.best_energy_density;
    j["energy_ratio"] = r.energy_ratio;
    j["fidelity"] = r.fidelity;
    j["entropy"] = std::isfinite(r.entropy) ? json(r.entropy) : json(nullptr);
    j["restarts"] = r.restarts_used;
    j["degraded"] = r.degraded;
    return j.dump();
}

}  // namespace cdqaoa
