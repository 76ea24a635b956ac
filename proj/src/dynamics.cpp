#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/krylov.hpp"

#include "cdqaoa/symmetry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>

namespace cdqaoa {

double ProtocolSequence::total() const
{
    return std::accumulate(alphas.begin(), alphas.end(), 0.0);
}

bool has_consecutive_repeat(const std::vector<std::string>& tau)
{
    for (std::size_t j = 1; j < tau.size(); ++j)
        if (tau[j] == tau[j - 1]) return true;
    return false;
}

std::vector<std::vector<std::string>> legal_sequences(const std::vector<std::string>& labels, int q)
{
    if (q < 1) throw InputError("sequence length must be at least one");
    if (labels.empty()) throw InputError("empty action set");
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> cur;
    std::function<void()> grow = [&] {
        if (static_cast<int>(cur.size()) == q) {
            out.push_back(cur);
            return;
        }
        for (const auto& l : labels) {
            if (!cur.empty() && cur.back() == l) continue;
            cur.push_back(l);
            grow();
            cur.pop_back();
        }
    };
    grow();
    return out;
}

void ProtocolSequence::validate(double T) const
{
    if (tau.size() != alphas.size()) throw std::invalid_argument("protocol: label and duration counts differ");
    for (double a : alphas)
        if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("protocol: durations must be finite and >= 0");
    if (has_consecutive_repeat(tau)) throw std::invalid_argument("protocol: consecutive repeated generator");
    if (T >= 0.0 && std::abs(total() - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("protocol: durations do not sum to T");
}

CVec run_protocol(const ProtocolSequence& seq, const CVec& psi0, const ActionMap& actions)
{
    if (seq.tau.size() != seq.alphas.size()) throw std::invalid_argument("run_protocol: malformed sequence");
    CVec psi = psi0;
    for (std::size_t j = 0; j < seq.tau.size(); ++j) {
        auto it = actions.find(seq.tau[j]);
        if (it == actions.end()) throw std::invalid_argument("run_protocol: unknown generator '" + seq.tau[j] + "'");
        psi = it->second.propagate(seq.alphas[j], psi);
    }
    return psi;
}

double energy(const CVec& psi, const Operator& H)
{
    const cplx e = psi.dot(H.apply(psi));
    if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
        throw std::runtime_error("energy: expectation value is not real");
    return e.real();
}

double energy(const CVec& psi, const SparseMat& H)
{
    const cplx e = psi.dot(spmv(H, psi));
    if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
        throw std::runtime_error("energy: expectation value is not real");
    return e.real();
}

double fidelity(const CVec& psi, const std::vector<CVec>& targets)
{
    double f = 0.0;
    for (const auto& t : targets) f += std::norm(t.dot(psi));
    return f;
}

double entanglement_entropy_full(const CVec& full_state, int n_sites, Spin spin)
{
    if (n_sites % 2 != 0) throw std::invalid_argument("entanglement_entropy: odd number of sites");
    const auto half = static_cast<Eigen::Index>(ipow(local_dim(spin), n_sites / 2));
    if (full_state.size() != half * half) throw std::invalid_argument("entanglement_entropy: dimension mismatch");
    // site 0 is the least significant digit, so the low digits (subsystem A) index rows
    const Eigen::Map<const CMat> psi(full_state.data(), half, half);
    Eigen::JacobiSVD<CMat> svd(psi);
    double s = 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        const double p = svd.singularValues()[i] * svd.singularValues()[i];
        if (p > 1e-300) s -= p * std::log(p);
    }
    return s;
}

double entanglement_entropy(const CVec& psi, const SectorBasis& basis)
{
    if (!basis.is_chain()) throw std::invalid_argument("entanglement_entropy: chain bases only");
    return entanglement_entropy_full(lift(psi, basis), basis.n_sites, basis.spin);
}

double normalized_hs_norm(const SparseMat& H)
{
    if (H.rows() == 0) return 0.0;
    return H.norm() / std::sqrt(static_cast<double>(H.rows()));
}

double norm_density(const std::vector<SchedulePiece>& pieces, int n_sites)
{
    double T = 0.0, acc = 0.0;
    for (const auto& p : pieces) {
        T += p.duration;
        acc += p.duration * p.hs_norm;
    }
    if (T <= 0.0) throw std::invalid_argument("norm_density: zero total duration");
    return acc / (T * n_sites);
}

double norm_density(const std::function<double(double)>& hs_norm_at, double T, int n_sites, int samples)
{
    if (T <= 0.0) throw std::invalid_argument("norm_density: zero total duration");
    if (samples < 1) throw std::invalid_argument("norm_density: need at least one interval");
    const double h = T / samples;
    double acc = 0.5 * (hs_norm_at(0.0) + hs_norm_at(T));
    for (int i = 1; i < samples; ++i) acc += hs_norm_at(i * h);
    return acc * h / (T * n_sites);
}

}  // namespace cdqaoa
