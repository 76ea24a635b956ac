#pragma once

#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/problem.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cdqaoa {

struct SolverConfig {
    double tol = 1e-6;
    int max_iter = 500;
    int restarts = 1;
    std::uint64_t rng_seed = 0;
    bool compute_entropy = true;
};

struct RestartResult {
    std::vector<double> alphas;
    double energy_density = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct EvalRecord {
    ProtocolSequence seq;  // best durations
    double best_energy_density = 0.0;
    double energy_ratio = 0.0;
    double fidelity = 0.0;
    double entropy = 0.0;  // half-chain entanglement entropy (nats), NaN where undefined
    int restarts_used = 0;
    bool degraded = false;  // no restart reached the tolerance
    std::vector<RestartResult> restarts;
};

struct EnergyGradient {
    double value = 0.0;  // energy density
    RVec grad;
};

// Energy density after the protocol and its exact gradient in the durations (adjoint method).
EnergyGradient energy_and_gradient(const ControlProblem& p, const std::vector<std::string>& tau,
                                   const RVec& alphas);
double protocol_energy_density(const ControlProblem& p, const std::vector<std::string>& tau,
                               const RVec& alphas);

EvalRecord optimize_durations(const std::vector<std::string>& tau, double T, const ControlProblem& p,
                              const SolverConfig& cfg);

// Evaluates a batch of sequences on a worker pool; results are in input order.
// Sequence i uses solver seed derive_seed(cfg.rng_seed, i).
std::vector<EvalRecord> optimize_batch(const std::vector<std::vector<std::string>>& taus, double T,
                                       const ControlProblem& p, const SolverConfig& cfg, int workers);

int restart_total(int k);
int restart_schedule(int k, std::mt19937_64& rng);

struct LandscapePoint {
    double neg_log_fidelity;
    double entropy;
    double energy_density;
};

std::vector<LandscapePoint> landscape_sample(const std::vector<std::string>& tau, double T, int P,
                                             const ControlProblem& p, const SolverConfig& cfg);

// Alternating H1/H2 sequence of length q starting with `first`.
std::vector<std::string> alternating_sequence(const std::string& first, const std::string& second, int q);

}  // namespace cdqaoa
