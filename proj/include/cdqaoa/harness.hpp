#pragma once

#include "cdqaoa/contopt.hpp"
#include "cdqaoa/gauge_cd.hpp"
#include "cdqaoa/lmg.hpp"
#include "cdqaoa/problem.hpp"
#include "cdqaoa/rl_policy.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cdqaoa {

// Output file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything a run can be configured with. Loaded from a JSON object; every key is optional.
struct ExperimentConfig {
    ModelSpec model = ModelSpec::make(ModelKind::IsingHalf, 8);
    bool full_basis = false;
    std::string method = "cdqaoa";  // cdqaoa | qaoa | cd_drive | adiabatic
    std::vector<std::string> labels;  // empty: the model's default action set
    int q = 4;
    std::vector<double> T_grid{1.0};
    SolverConfig solver;
    TrainConfig rl;  // labels, q, T, seed, workers and solver are filled in per run
    DriveProtocol drive;
    std::vector<std::string> cd_ansatz;  // empty: default_cd_ansatz
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = ".";

    std::vector<int> sizes;   // scaling / transfer scans
    std::vector<int> depths;  // q scans
    bool reoptimize = true;   // transfer: re-optimize durations on every size
    std::vector<ProtocolSequence> protocols;  // transfer inputs, one per entry of `sizes`

    std::vector<double> h_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
    QslConfig qsl;

    std::vector<std::string> tau;  // landscape sequence
    int landscape_points = 100;
    std::string protocol_path;     // evolve input table
    int samples_per_piece = 10;    // evolve trace resolution

    double T() const { return T_grid.front(); }
    TrainConfig train_config(double T) const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Default CD-QAOA action set: H1, H2 and the model's gauge terms.
std::vector<std::string> default_labels(const ModelSpec& model);

// Rows in application order; the flags are derived from the label and duration.
struct ProtocolRow {
    std::string label;
    double duration = 0.0;
    bool zero = false;   // duration below the zero tolerance
    bool gauge = false;  // gauge-potential term
};

struct ProtocolTable {
    std::vector<ProtocolRow> rows;

    static ProtocolTable from_sequence(const ProtocolSequence& seq, double zero_tol = 1e-9);
    ProtocolSequence sequence() const;
    double total() const;
};

void write_protocol_table(const std::string& path, const ProtocolTable& table);
ProtocolTable read_protocol_table(const std::string& path);

// %.17g
std::string format_double(double x);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void append_line(const std::string& path, const std::string& line);

double protocol_norm_density(const ControlProblem& p, const ProtocolSequence& seq);

// Every legal sequence of length q, each with cfg.restarts restarts; results in sequence order.
std::vector<EvalRecord> brute_force(const ControlProblem& p, const std::vector<std::string>& labels, int q,
                                    double T, const SolverConfig& cfg, int workers);
const EvalRecord& best_record(const std::vector<EvalRecord>& records);

// Conventional QAOA with p = q/2 blocks: both alternation orders, best kept.
EvalRecord run_qaoa(const ControlProblem& p, int q, double T, const SolverConfig& cfg, int workers);

struct MethodResult {
    double energy_density = 0.0;
    double energy_ratio = 0.0;
    double fidelity = 0.0;
    double norm_density = 0.0;
    ProtocolSequence protocol;  // empty for continuous drives
};

MethodResult run_method(const ExperimentConfig& cfg, const std::string& method, double T);

struct ComparisonRow {
    double T = 0.0;
    std::string method;
    MethodResult result;
    std::string error;  // non-empty when the cell failed
};

// One row per (T, method) for cdqaoa, qaoa, cd_drive, adiabatic.
std::vector<ComparisonRow> run_comparison(const ExperimentConfig& cfg,
                                          const std::vector<std::string>& methods = {"cdqaoa", "qaoa", "cd_drive",
                                                                                     "adiabatic"});

struct TransferResult {
    std::vector<int> sizes;
    std::vector<std::vector<std::string>> unique;  // distinct sequences over all inputs
    std::vector<std::vector<double>> energy;       // [protocol][size] energy density
    std::vector<double> min_energy, max_energy;    // per size over all protocols
};

// Applies every distinct input sequence to every size. With reoptimize the durations are
// optimized again per size; otherwise the durations of the first input with that sequence are reused.
TransferResult transfer_eval(const ExperimentConfig& cfg, const std::vector<ProtocolSequence>& protocols,
                             const std::vector<int>& sizes, double T, bool reoptimize);

struct ScanPoint {
    int n_sites = 0;
    int q = 0;
    double T = 0.0;
    double energy_density = 0.0;
    double energy_ratio = 0.0;
    ProtocolSequence protocol;
};

// Over cfg.sizes (q fixed) or cfg.depths (size fixed), at every T of the grid, with cfg.method in {cdqaoa, qaoa}.
std::vector<ScanPoint> scaling_scan(const ExperimentConfig& cfg);

struct TracePoint {
    double t;
    double energy_ratio;
    double fidelity;
    double entropy_density;  // 2 S / N, NaN where undefined
};

// Samples the state along a protocol, including t = 0 and the end of every piece.
std::vector<TracePoint> evolve_trace(const ControlProblem& p, const ProtocolSequence& seq, int samples_per_piece);

std::string record_json(const EvalRecord& r);

}  // namespace cdqaoa
