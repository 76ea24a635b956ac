#include "cdqaoa/contopt.hpp"

#include "cdqaoa/sqp.hpp"
#include "cdqaoa/worker_pool.hpp"

#include <cmath>
#include <limits>

namespace cdqaoa {

EnergyGradient energy_and_gradient(const ControlProblem& p, const std::vector<std::string>& tau, const RVec& alphas)
{
    const auto q = static_cast<Eigen::Index>(tau.size());
    if (alphas.size() != q) throw std::invalid_argument("energy_and_gradient: size mismatch");
    std::vector<const Operator*> ops;
    for (const auto& label : tau) ops.push_back(&p.action(label));

    std::vector<CVec> phi(q + 1);
    phi[0] = p.psi0;
    for (Eigen::Index j = 0; j < q; ++j) phi[j + 1] = ops[j]->propagate(alphas[j], phi[j]);

    EnergyGradient out;
    CVec chi = p.cost.apply(phi[q]);
    out.value = phi[q].dot(chi).real() / p.n_sites();
    out.grad.resize(q);
    // chi_j = U_{j+1}^dag ... U_q^dag H phi_q;  dE/dalpha_j = 2 Im <chi_j| H_j phi_j>
    for (Eigen::Index j = q - 1; j >= 0; --j) {
        out.grad[j] = 2.0 * chi.dot(ops[j]->apply(phi[j + 1])).imag() / p.n_sites();
        if (j > 0) chi = ops[j]->propagate_back(alphas[j], chi);
    }
    return out;
}

double protocol_energy_density(const ControlProblem& p, const std::vector<std::string>& tau, const RVec& alphas)
{
    CVec psi = p.psi0;
    for (std::size_t j = 0; j < tau.size(); ++j) psi = p.action(tau[j]).propagate(alphas[static_cast<Eigen::Index>(j)], psi);
    return p.energy_density(psi);
}

namespace {

void fill_observables(EvalRecord& rec, const ControlProblem& p, bool with_entropy)
{
    const CVec psi = run_protocol(rec.seq, p.psi0, p.actions);
    rec.best_energy_density = p.energy_density(psi);
    rec.energy_ratio = p.energy_ratio(psi);
    rec.fidelity = fidelity(psi, p.targets);
    rec.entropy = std::numeric_limits<double>::quiet_NaN();
    if (with_entropy && p.basis->is_chain() && p.n_sites() % 2 == 0)
        rec.entropy = entanglement_entropy(psi, *p.basis);
}

RVec random_start(int q, double T, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, T / q);
    RVec x(q);
    for (int j = 0; j < q; ++j) x[j] = u(rng);
    return project_simplex(x, T);
}

}  // namespace

EvalRecord optimize_durations(const std::vector<std::string>& tau, double T, const ControlProblem& p,
                              const SolverConfig& cfg)
{
    if (cfg.tol <= 0.0 || cfg.restarts < 1) throw std::invalid_argument("optimize_durations: invalid solver config");
    if (T < 0.0) throw std::invalid_argument("optimize_durations: negative T");
    if (tau.empty()) throw std::invalid_argument("optimize_durations: empty sequence");
    if (has_consecutive_repeat(tau)) throw std::invalid_argument("optimize_durations: consecutive repeat in sequence");
    for (const auto& label : tau) p.action(label);

    const int q = static_cast<int>(tau.size());
    EvalRecord rec;
    rec.seq.tau = tau;

    if (T == 0.0 || q == 1) {
        rec.seq.alphas.assign(q, 0.0);
        if (q == 1) rec.seq.alphas[0] = T;
        // every restart lands on the same point
        rec.restarts_used = cfg.restarts;
        fill_observables(rec, p, cfg.compute_entropy);
        rec.restarts.assign(cfg.restarts, {rec.seq.alphas, rec.best_energy_density, 0, true});
        return rec;
    }

    const ValueGradient fn = [&](const RVec& x, RVec* g) {
        if (!g) return protocol_energy_density(p, tau, x);
        EnergyGradient eg = energy_and_gradient(p, tau, x);
        *g = std::move(eg.grad);
        return eg.value;
    };
    SqpOptions so;
    so.tol = cfg.tol;
    so.max_iter = cfg.max_iter;

    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 rng(derive_seed(cfg.rng_seed, 0x7265737461727473ULL, static_cast<std::uint64_t>(r)));
        const SqpResult s = minimize_on_simplex(fn, random_start(q, T, rng), T, so);
        RestartResult rr;
        rr.alphas.assign(s.x.data(), s.x.data() + q);
        for (auto& a : rr.alphas) a = std::max(a, 0.0);
        rr.energy_density = s.f;
        rr.iterations = s.iterations;
        rr.converged = s.converged;
        rec.restarts.push_back(std::move(rr));
        if (best < 0 || rec.restarts.back().energy_density < rec.restarts[best].energy_density) best = r;
    }
    rec.restarts_used = cfg.restarts;
    rec.degraded = true;
    for (const auto& rr : rec.restarts)
        if (rr.converged) rec.degraded = false;
    rec.seq.alphas = rec.restarts[best].alphas;
    fill_observables(rec, p, cfg.compute_entropy);
    return rec;
}

std::vector<EvalRecord> optimize_batch(const std::vector<std::vector<std::string>>& taus, double T,
                                       const ControlProblem& p, const SolverConfig& cfg, int workers)
{
    std::vector<EvalRecord> out(taus.size());
    parallel_for(taus.size(), workers, [&](std::size_t i) {
        SolverConfig c = cfg;
        c.rng_seed = derive_seed(cfg.rng_seed, i);
        out[i] = optimize_durations(taus[i], T, p, c);
    });
    return out;
}

int restart_total(int k)
{
    if (k < 0) throw std::invalid_argument("restart_total: negative iteration");
    return 3 + k / 30;
}

int restart_schedule(int k, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> u(1, restart_total(k));
    return u(rng);
}

std::vector<LandscapePoint> landscape_sample(const std::vector<std::string>& tau, double T, int P,
                                             const ControlProblem& p, const SolverConfig& cfg)
{
    if (P < 1) throw std::invalid_argument("landscape_sample: P must be positive");
    SolverConfig c = cfg;
    c.restarts = P;
    const EvalRecord rec = optimize_durations(tau, T, p, c);
    std::vector<LandscapePoint> out;
    for (const auto& rr : rec.restarts) {
        if (!rr.converged) continue;
        ProtocolSequence seq{tau, rr.alphas};
        const CVec psi = run_protocol(seq, p.psi0, p.actions);
        double s = std::numeric_limits<double>::quiet_NaN();
        if (p.basis->is_chain() && p.n_sites() % 2 == 0) s = entanglement_entropy(psi, *p.basis);
        out.push_back({-std::log(std::max(fidelity(psi, p.targets), 1e-300)), s, p.energy_density(psi)});
    }
    return out;
}

std::vector<std::string> alternating_sequence(const std::string& first, const std::string& second, int q)
{
    std::vector<std::string> tau;
    for (int j = 0; j < q; ++j) tau.push_back(j % 2 == 0 ? first : second);
    return tau;
}

}  // namespace cdqaoa
