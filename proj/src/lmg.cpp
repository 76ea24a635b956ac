#include "cdqaoa/lmg.hpp"

#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/problem.hpp"
#include "cdqaoa/symmetry.hpp"
#include "cdqaoa/worker_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cdqaoa {

namespace {

ModelSpec lmg_model(int N, double J, double h)
{
    if (N < 2) throw InputError("lmg needs at least two spins");
    return ModelSpec::make(ModelKind::Lmg, N, {{"J", J}, {"h", h}});
}

}  // namespace

SparseMat lmg_hamiltonian(int N, double J, double h)
{
    const ModelSpec m = lmg_model(N, J, h);
    return build_matrix(model_hamiltonian(m), lmg_basis(N));
}

LmgGauge lmg_gauge_matrices(int N)
{
    const ModelSpec m = lmg_model(N, 1.0, 0.0);
    const SectorBasis b = lmg_basis(N);
    return {build_matrix(catalog("Y", m), b), build_matrix(catalog("XYhat", m), b),
            build_matrix(catalog("ZYhat", m), b)};
}

std::vector<OverlapPoint> overlap_scan(int N, const std::vector<double>& h_grid, double J, int workers)
{
    std::vector<OverlapPoint> out(h_grid.size());
    parallel_for(h_grid.size(), workers, [&](std::size_t i) {
        const ControlProblem p = make_problem(lmg_model(N, J, h_grid[i]), {});
        out[i] = {h_grid[i], fidelity(p.psi0, p.targets), static_cast<int>(p.targets.size())};
    });
    return out;
}

std::vector<double> qsl_t_grid(double h, const QslConfig& cfg)
{
    if (cfg.coarse_step <= 0 || cfg.fine_step <= 0 || cfg.t_max <= 0) throw InputError("qsl grid steps must be positive");
    const double centre = std::numbers::pi / 2 - h / cfg.J;
    const double lo = centre - cfg.window, hi = centre + cfg.window;
    std::vector<double> grid;
    for (int k = 1; k * cfg.coarse_step <= cfg.t_max + 1e-12; ++k) {
        const double t = k * cfg.coarse_step;
        if (t < lo || t > hi) grid.push_back(t);
    }
    // the fine block is anchored on the prediction itself so that it is always a grid point
    const int half = static_cast<int>(std::floor(cfg.window / cfg.fine_step + 1e-9));
    for (int k = -half; k <= half; ++k) {
        const double t = centre + k * cfg.fine_step;
        if (t > 0 && t <= cfg.t_max + 1e-12) grid.push_back(t);
    }
    std::sort(grid.begin(), grid.end());
    return grid;
}

QslEval qsl_best(const ControlProblem& p, double T, const QslConfig& cfg)
{
    const auto seqs = legal_sequences(cfg.labels, cfg.q);
    QslEval best;
    best.value = -1e300;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        SolverConfig sc = cfg.solver;
        sc.rng_seed = derive_seed(cfg.solver.rng_seed, i);
        const EvalRecord rec = optimize_durations(seqs[i], T, p, sc);
        if (cfg.metric == QslMetric::Energy) {
            if (rec.energy_ratio > best.value) best = {rec.seq, rec.energy_ratio};
            continue;
        }
        // fidelity is not the optimized quantity, so every local minimum found is checked
        for (const auto& r : rec.restarts) {
            const ProtocolSequence s{seqs[i], r.alphas};
            const double f = fidelity(run_protocol(s, p.psi0, p.actions), p.targets);
            if (f > best.value) best = {s, f};
        }
    }
    return best;
}

QslPoint qsl_point(int N, double h, const QslConfig& cfg)
{
    const ControlProblem p = make_problem(lmg_model(N, cfg.J, h), cfg.labels);
    QslPoint pt;
    pt.h = h;
    for (double T : qsl_t_grid(h, cfg)) {
        const QslEval e = qsl_best(p, T, cfg);
        if (e.value >= 1.0 - cfg.tolerance) {
            pt.t_qsl = T;
            pt.best = e.best;
            pt.value = e.value;
            break;
        }
    }
    return pt;
}

std::vector<QslPoint> qsl_scan(int N, const std::vector<double>& h_grid, const QslConfig& cfg)
{
    std::vector<QslPoint> out(h_grid.size());
    QslConfig inner = cfg;
    inner.workers = 1;
    parallel_for(h_grid.size(), cfg.workers, [&](std::size_t i) { out[i] = qsl_point(N, h_grid[i], inner); });
    return out;
}

double qsl_slope(const std::vector<QslPoint>& points, double h_max)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : points) {
        if (p.h > h_max + 1e-12 || std::isnan(p.t_qsl)) continue;
        sx += p.h;
        sy += p.t_qsl;
        sxx += p.h * p.h;
        sxy += p.h * p.t_qsl;
        ++n;
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || den <= 0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

}  // namespace cdqaoa
