#pragma once

#include "cdqaoa/basis.hpp"
#include "cdqaoa/krylov.hpp"
#include "cdqaoa/operator.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cdqaoa {

struct ProtocolSequence {
    std::vector<std::string> tau;
    std::vector<double> alphas;

    int depth() const { return static_cast<int>(tau.size()); }
    double total() const;
    // Throws on length mismatch, negative durations, consecutive repeats, or a wrong total.
    void validate(double T = -1.0) const;
};

bool has_consecutive_repeat(const std::vector<std::string>& tau);

// Every sequence of length q over `labels` without consecutive repeats, ordered by label index.
std::vector<std::vector<std::string>> legal_sequences(const std::vector<std::string>& labels, int q);

using ActionMap = std::map<std::string, Operator>;

// U(alpha_q, tau_q) ... U(alpha_1, tau_1) psi0
CVec run_protocol(const ProtocolSequence& seq, const CVec& psi0, const ActionMap& actions);

double energy(const CVec& psi, const Operator& H);
double energy(const CVec& psi, const SparseMat& H);
double fidelity(const CVec& psi, const std::vector<CVec>& targets);

// Half-chain von Neumann entropy (nats); sites 0..N/2-1 form the subsystem.
double entanglement_entropy(const CVec& psi, const SectorBasis& basis);
double entanglement_entropy_full(const CVec& full_state, int n_sites, Spin spin);

// Hilbert-Schmidt norm normalized by the basis dimension, sqrt(tr(H^dag H)/D).
double normalized_hs_norm(const SparseMat& H);

struct SchedulePiece {
    double duration;
    double hs_norm;
};

// (1/T) int ||H(t)||/N dt for a piecewise-constant schedule.
double norm_density(const std::vector<SchedulePiece>& pieces, int n_sites);
// Same for a continuous schedule, trapezoidal rule on `samples` intervals.
double norm_density(const std::function<double(double)>& hs_norm_at, double T, int n_sites, int samples);

}  // namespace cdqaoa
