#include "cdqaoa/contopt.hpp"
#include "cdqaoa/sqp.hpp"
#include "cdqaoa/symmetry.hpp"
#include "cdqaoa/worker_pool.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cdqaoa;

namespace {

// One spin, cost H = S^x + 0.3 S^z, started from a tilted state; generators S^z and S^x.
ControlProblem single_spin()
{
    ControlProblem p;
    p.model = ModelSpec{ModelKind::IsingHalf, 1, {{"J", 1.0}, {"h_z", 0.3}, {"h_x", 1.0}}};
    p.basis = std::make_shared<const SectorBasis>(full_basis(1, Spin::Half));
    const CMat Sx = oracle::spin_matrix('x', 2), Sz = oracle::spin_matrix('z', 2);
    const CMat H = Sx + 0.3 * Sz;
    p.cost = Operator(SparseMat(H.sparseView()));
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    p.e_gs = es.eigenvalues()[0];
    p.targets = {es.eigenvectors().col(0)};
    p.psi0 = CVec(2);
    p.psi0 << std::cos(0.4), std::sin(0.4);
    p.actions.emplace("Z", Operator(SparseMat(Sz.sparseView())));
    p.actions.emplace("X", Operator(SparseMat(Sx.sparseView())));
    return p;
}

double dense_energy(const ControlProblem& p, const std::vector<std::string>& tau, const std::vector<double>& a)
{
    CVec psi = p.psi0;
    for (std::size_t j = 0; j < tau.size(); ++j) psi = oracle::expm(CMat(p.action(tau[j]).matrix()), a[j]) * psi;
    return psi.dot(CMat(p.cost.matrix()) * psi).real() / p.n_sites();
}

}  // namespace

TEST_CASE("simplex projection")
{
    RVec v(4);
    v << 0.3, -1.0, 2.0, 0.1;
    const RVec x = project_simplex(v, 1.5);
    CHECK(std::abs(x.sum() - 1.5) < 1e-14);
    CHECK(x.minCoeff() >= 0.0);
    // optimality: x = P(v) iff <v - x, y - x> <= 0 for simplex vertices y
    for (int i = 0; i < 4; ++i) {
        RVec y = RVec::Zero(4);
        y[i] = 1.5;
        CHECK((v - x).dot(y - x) <= 1e-12);
    }
    const RVec inside = (RVec(3) << 0.2, 0.5, 0.3).finished();
    CHECK((project_simplex(inside, 1.0) - inside).norm() < 1e-15);
}

TEST_CASE("simplex QP against brute force")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return g(rng); });
        const Eigen::MatrixXd B = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3);
        const RVec grad = RVec::NullaryExpr(3, [&] { return g(rng); });
        const RVec lower = -RVec::NullaryExpr(3, [&] { return std::abs(g(rng)); });
        const RVec d = solve_simplex_qp(B, grad, lower);
        CHECK(std::abs(d.sum()) < 1e-12);
        CHECK((d - lower).minCoeff() >= -1e-12);
        auto q = [&](const RVec& x) { return grad.dot(x) + 0.5 * x.dot(B * x); };
        // grid over the 2-D feasible slice d = (u, v, -u-v)
        double best = 1e300;
        for (int i = 0; i <= 400; ++i)
            for (int j = 0; j <= 400; ++j) {
                const double u = lower[0] + i * 0.01, w = lower[1] + j * 0.01;
                const RVec x = (RVec(3) << u, w, -u - w).finished();
                if (x[2] < lower[2]) continue;
                best = std::min(best, q(x));
            }
        CHECK(q(d) <= best + 1e-12);
    }
}

TEST_CASE("sqp minimizes a smooth function on the simplex")
{
    // f = sum c_i (x_i - t_i)^2 + small coupling; minimizer by brute force on the 2-simplex
    const RVec c = (RVec(3) << 1.0, 2.0, 0.5).finished();
    const RVec t = (RVec(3) << 1.5, -0.2, 0.4).finished();
    ValueGradient f = [&](const RVec& x, RVec* gr) {
        const RVec d = x - t;
        if (gr) *gr = 2.0 * c.cwiseProduct(d) + RVec::Constant(3, 0.1 * std::cos(x.sum()));
        return d.dot(c.cwiseProduct(d)) + 0.1 * std::sin(x.sum());
    };
    const SqpResult r = minimize_on_simplex(f, RVec::Constant(3, 1.0 / 3), 1.0, {});
    CHECK(r.converged);
    double best = 1e300;
    for (int i = 0; i <= 1000; ++i)
        for (int j = 0; i + j <= 1000; ++j) {
            const RVec x = (RVec(3) << i / 1000.0, j / 1000.0, (1000 - i - j) / 1000.0).finished();
            best = std::min(best, f(x, nullptr));
        }
    CHECK(r.f <= best + 1e-9);
    CHECK(std::abs(r.x.sum() - 1.0) < 1e-12);
}

TEST_CASE("q = 1 and T = 0 skip the solver")
{
    const ControlProblem p = single_spin();
    const EvalRecord one = optimize_durations({"X"}, 2.5, p, {});
    REQUIRE(one.seq.alphas.size() == 1);
    CHECK(one.seq.alphas[0] == 2.5);
    CHECK(std::abs(one.best_energy_density - dense_energy(p, {"X"}, {2.5})) < 1e-12);

    const EvalRecord zero = optimize_durations({"X", "Z"}, 0.0, p, {});
    CHECK(zero.seq.alphas == std::vector<double>{0.0, 0.0});
    CHECK(std::abs(zero.best_energy_density - p.psi0.dot(CMat(p.cost.matrix()) * p.psi0).real()) < 1e-14);

    CHECK_THROWS(optimize_durations({"X", "X"}, 1.0, p, {}));
    CHECK_THROWS(optimize_durations({"X", "Q"}, 1.0, p, {}));
}

TEST_CASE("q = 2 single spin matches grid search")
{
    const ControlProblem p = single_spin();
    for (double T : {0.5, 1.0, 2.0}) {
        SolverConfig cfg;
        cfg.restarts = 8;
        cfg.rng_seed = 17;
        const EvalRecord rec = optimize_durations({"Z", "X"}, T, p, cfg);
        // the feasible set is the segment alpha_1 + alpha_2 = T
        double best = 1e300;
        const int n = 200 * 200;
        for (int i = 0; i <= n; ++i) {
            const double a = T * i / n;
            best = std::min(best, dense_energy(p, {"Z", "X"}, {a, T - a}));
        }
        CAPTURE(T);
        CHECK(std::abs(rec.best_energy_density - best) <= 1e-4);
        CHECK(rec.best_energy_density >= best - 1e-9);
        CHECK(std::abs(rec.seq.alphas[0] + rec.seq.alphas[1] - T) <= 1e-9);
    }
}

TEST_CASE("q = 3 chain matches grid search on the 2-simplex")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 4);
    const ControlProblem p = make_problem(m, {"H1", "H2", "Y"}, true);
    const std::vector<std::string> tau{"H1", "Y", "H2"};
    const double T = 1.2;
    SolverConfig cfg;
    cfg.restarts = 10;
    const EvalRecord rec = optimize_durations(tau, T, p, cfg);
    double best = 1e300;
    const int n = 150;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j)
            best = std::min(best, protocol_energy_density(p, tau, (RVec(3) << T * i / n, T * j / n, T * (n - i - j) / n).finished()));
    CHECK(rec.best_energy_density <= best + 1e-6);
}

TEST_CASE("analytic gradient matches finite differences")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (ModelKind kind : {ModelKind::IsingHalf, ModelKind::IsingOne}) {
        const ModelSpec m = ModelSpec::make(kind, 4);
        const std::vector<std::string> labels = kind == ModelKind::IsingHalf
                                                    ? std::vector<std::string>{"H1", "H2", "Y", "X|Y"}
                                                    : std::vector<std::string>{"H1", "H2", "Y", "XY"};
        const ControlProblem p = make_problem(m, labels);
        const std::vector<std::string> tau{labels[0], labels[2], labels[1], labels[3], labels[0]};
        const RVec a = RVec::NullaryExpr(5, [&] { return u(rng); });
        const EnergyGradient eg = energy_and_gradient(p, tau, a);
        CHECK(std::abs(eg.value - protocol_energy_density(p, tau, a)) < 1e-12);
        for (int j = 0; j < 5; ++j) {
            const double h = 1e-5;
            RVec ap = a, am = a;
            ap[j] += h;
            am[j] -= h;
            const double fd = (protocol_energy_density(p, tau, ap) - protocol_energy_density(p, tau, am)) / (2 * h);
            CHECK(std::abs(fd - eg.grad[j]) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("optimum is feasible and locally minimal")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 4);
    const ControlProblem p = make_problem(m, {"H1", "H2", "Y", "XY"});
    const std::vector<std::string> tau{"H2", "Y", "H1", "XY", "H2", "H1"};
    const double T = 3.0;
    SolverConfig cfg;
    cfg.restarts = 4;
    const EvalRecord rec = optimize_durations(tau, T, p, cfg);
    double sum = 0.0;
    for (double a : rec.seq.alphas) {
        CHECK(a >= 0.0);
        sum += a;
    }
    CHECK(std::abs(sum - T) <= 1e-9);
    CHECK(!rec.degraded);
    // moving eps of duration between any two slots never helps (beyond first order in tol)
    const RVec a0 = Eigen::Map<const RVec>(rec.seq.alphas.data(), 6);
    const double e0 = protocol_energy_density(p, tau, a0);
    CHECK(std::abs(e0 - rec.best_energy_density) < 1e-12);
    const double eps = 1e-3;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            if (i == j || a0[i] < eps) continue;
            RVec a = a0;
            a[i] -= eps;
            a[j] += eps;
            CHECK(protocol_energy_density(p, tau, a) >= e0 - 2 * cfg.tol * eps - 1e-10);
        }
    // best is the minimum over restarts, ties to the lowest index
    double best = 1e300;
    for (const auto& r : rec.restarts) best = std::min(best, r.energy_density);
    CHECK(rec.best_energy_density <= best + 1e-12);
}

TEST_CASE("determinism and worker independence")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 6);
    const ControlProblem p = make_problem(m, {"H1", "H2", "Y"});
    const std::vector<std::vector<std::string>> taus{{"H1", "H2", "Y"}, {"Y", "H1", "H2"}, {"H2", "H1"}, {"H1", "Y", "H2", "H1"}};
    SolverConfig cfg;
    cfg.restarts = 2;
    cfg.rng_seed = 99;
    const auto a = optimize_batch(taus, 2.0, p, cfg, 1);
    const auto b = optimize_batch(taus, 2.0, p, cfg, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seq.alphas == b[i].seq.alphas);
        CHECK(a[i].best_energy_density == b[i].best_energy_density);
        CHECK(a[i].seq.tau == taus[i]);
    }
    SolverConfig c2 = cfg;
    c2.rng_seed = derive_seed(cfg.rng_seed, 2);
    CHECK(optimize_durations(taus[2], 2.0, p, c2).seq.alphas == a[2].seq.alphas);
}

TEST_CASE("restart schedule")
{
    CHECK(restart_total(0) == 3);
    CHECK(restart_total(29) == 3);
    CHECK(restart_total(30) == 4);
    CHECK(restart_total(300) == 13);
    CHECK_THROWS(restart_total(-1));
    std::mt19937_64 rng(5);
    std::vector<int> seen(4, 0);
    for (int i = 0; i < 3000; ++i) {
        const int r = restart_schedule(0, rng);
        REQUIRE(r >= 1);
        REQUIRE(r <= 3);
        seen[r]++;
    }
    CHECK(seen[1] > 900);
    CHECK(seen[2] > 900);
    CHECK(seen[3] > 900);
    for (int i = 0; i < 200; ++i) {
        const int r = restart_schedule(300, rng);
        CHECK(r >= 1);
        CHECK(r <= 13);
    }
}

TEST_CASE("landscape sampling")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 6);
    const ControlProblem p = make_problem(m, {"H1", "H2", "Y"});
    CHECK(landscape_sample({"H1", "Y", "H2"}, 2.0, 1, p, {}).size() == 1);
    const auto pts = landscape_sample({"Y"}, 2.0, 5, p, {});
    REQUIRE(pts.size() == 5);
    for (const auto& pt : pts) {
        CHECK(pt.energy_density == pts[0].energy_density);
        CHECK(pt.neg_log_fidelity >= 0.0);
        CHECK(pt.entropy >= 0.0);
    }
    CHECK_THROWS(landscape_sample({"Y"}, 2.0, 0, p, {}));
}

TEST_CASE("alternating sequences")
{
    CHECK(alternating_sequence("H1", "H2", 4) == std::vector<std::string>{"H1", "H2", "H1", "H2"});
    CHECK(alternating_sequence("H2", "H1", 3) == std::vector<std::string>{"H2", "H1", "H2"});
}
