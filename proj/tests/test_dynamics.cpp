#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/problem.hpp"
#include "cdqaoa/spin_ops.hpp"
#include "cdqaoa/symmetry.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cdqaoa;

namespace {

SparseMat random_ising(int n, Spin spin, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    const ModelSpec m = ModelSpec::make(spin == Spin::Half ? ModelKind::IsingHalf : ModelKind::IsingOne, n);
    TermList t;
    t.n_sites = n;
    t.spin = spin;
    for (int i = 0; i < n; ++i) {
        t.terms.push_back({"zz", {i, (i + 1) % n}, g(rng)});
        t.terms.push_back({"x", {i}, g(rng)});
        t.terms.push_back({"z", {i}, g(rng)});
        t.terms.push_back({"y", {i}, 0.3 * g(rng)});
    }
    (void)m;
    return build_matrix(t, full_basis(n, spin));
}

}  // namespace

TEST_CASE("expmv: zero duration is the identity")
{
    std::mt19937_64 rng(1);
    const SparseMat H = random_ising(4, Spin::Half, rng);
    const CVec psi = oracle::random_state(H.rows(), rng);
    CHECK((expmv(H, 0.0, psi) - psi).norm() == 0.0);
    CHECK_THROWS(expmv(H, -1.0, psi));
}

TEST_CASE("expmv: single spin rotation about y")
{
    const ModelSpec m{ModelKind::IsingHalf, 1, {{"J", 1.0}, {"h_z", 0.0}, {"h_x", 0.0}}};
    const SparseMat Sy = build_matrix(catalog("Y", m), full_basis(1, Spin::Half));
    CVec up = CVec::Zero(2);
    up[0] = 1.0;
    const CVec out = expmv(Sy, std::numbers::pi / 2, up);
    // exp(-i pi/2 S^y)|up> = cos(pi/4)|up> + sin(pi/4)|down>
    CHECK(std::abs(out[0] - std::cos(std::numbers::pi / 4)) < 1e-14);
    CHECK(std::abs(out[1] - std::sin(std::numbers::pi / 4)) < 1e-14);
}

TEST_CASE("expmv agrees with the dense exponential")
{
    std::mt19937_64 rng(2);
    for (auto [n, spin] : std::vector<std::pair<int, Spin>>{{6, Spin::Half}, {4, Spin::One}, {5, Spin::Half}}) {
        const SparseMat H = random_ising(n, spin, rng);
        const CMat Hd(H);
        for (double alpha : {0.01, 1.3, 7.9, 40.0}) {
            const CVec psi = oracle::random_state(H.rows(), rng);
            const CVec ref = oracle::expm(Hd, alpha) * psi;
            const CVec got = expmv(H, alpha, psi);
            CAPTURE(alpha);
            CHECK((got - ref).norm() <= 1e-10);
            CHECK(std::abs(got.norm() - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("operator propagation paths agree")
{
    std::mt19937_64 rng(3);
    const SparseMat H = random_ising(5, Spin::Half, rng);
    const CVec psi = oracle::random_state(H.rows(), rng);
    const Operator spectral(H, Operator::Mode::Spectral), krylov(H, Operator::Mode::Krylov);
    CHECK(spectral.has_spectrum());
    CHECK(!krylov.has_spectrum());
    const CVec a = spectral.propagate(2.3, psi), b = krylov.propagate(2.3, psi);
    CHECK((a - b).norm() < 1e-10);
    CHECK((spectral.propagate_back(2.3, a) - psi).norm() < 1e-10);
    CHECK((krylov.propagate_back(2.3, b) - psi).norm() < 1e-10);

    const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 4);
    const SparseMat Z = build_matrix(catalog("H2", m), full_basis(4, Spin::One));
    const Operator diag(Z);
    CHECK(diag.is_diagonal());
    const CVec s = oracle::random_state(Z.rows(), rng);
    CHECK((diag.propagate(0.7, s) - oracle::expm(CMat(Z), 0.7) * s).norm() < 1e-12);
}

TEST_CASE("run_protocol composition and oracle")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 4);
    const SectorBasis b = full_basis(4, Spin::Half);
    ActionMap acts;
    for (const char* l : {"Z|Z+Z", "X", "Y", "X|Y"}) acts.emplace(l, Operator(build_matrix(catalog(l, m), b)));
    std::mt19937_64 rng(4);
    const CVec psi0 = oracle::random_state(b.dim(), rng);

    CHECK((run_protocol({}, psi0, acts) - psi0).norm() == 0.0);

    const ProtocolSequence one{{"Y"}, {0.8}};
    const ProtocolSequence two{{"Y", "X"}, {0.8, 0.0}};
    CHECK((run_protocol(one, psi0, acts) - run_protocol(two, psi0, acts)).norm() < 1e-14);

    const ProtocolSequence three{{"Z|Z+Z", "X", "X|Y"}, {0.4, 1.1, 0.25}};
    CMat U = CMat::Identity(b.dim(), b.dim());
    for (std::size_t j = 0; j < 3; ++j) U = oracle::expm(CMat(acts.at(three.tau[j]).matrix()), three.alphas[j]) * U;
    const CVec out = run_protocol(three, psi0, acts);
    CHECK((out - U * psi0).norm() < 1e-10);
    CHECK(std::abs(out.norm() - 1.0) < 1e-9);

    const ProtocolSequence a{{"Z|Z+Z", "X"}, {0.4, 1.1}}, c{{"Y", "X|Y"}, {0.3, 0.9}};
    const ProtocolSequence ac{{"Z|Z+Z", "X", "Y", "X|Y"}, {0.4, 1.1, 0.3, 0.9}};
    CHECK((run_protocol(ac, psi0, acts) - run_protocol(c, run_protocol(a, psi0, acts), acts)).norm() < 1e-10);

    CHECK_THROWS(run_protocol(ProtocolSequence{{"Q"}, {1.0}}, psi0, acts));
}

TEST_CASE("protocol validation")
{
    ProtocolSequence s{{"X", "X"}, {0.5, 0.5}};
    CHECK_THROWS(s.validate());
    s.tau = {"X", "Y"};
    CHECK_NOTHROW(s.validate(1.0));
    CHECK_THROWS(s.validate(2.0));
    s.alphas = {-0.1, 1.1};
    CHECK_THROWS(s.validate());
}

TEST_CASE("energy")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 6);
    const SectorBasis b = full_basis(6, Spin::Half);
    const SparseMat H = build_matrix(model_hamiltonian(m), b);
    const CVec up = product_state(std::vector<int>(6, 0), b);
    CHECK(std::abs(energy(up, H) - 6 * (1.0 / 4 + 0.809 / 2)) < 1e-12);

    const Eigenpairs gs = lowest_eigenpairs(H);
    CHECK(std::abs(energy(gs.vectors[0], H) - gs.values[0]) < 1e-10);

    std::mt19937_64 rng(5);
    const CMat Hd(H);
    for (int i = 0; i < 5; ++i) {
        const CVec psi = oracle::random_state(b.dim(), rng);
        CHECK(std::abs(energy(psi, H) - psi.dot(Hd * psi).real()) < 1e-12);
        CHECK(energy(psi, H) >= gs.values[0] - 1e-9);
    }
}

TEST_CASE("fidelity")
{
    std::mt19937_64 rng(6);
    const CVec a = oracle::random_state(16, rng);
    CVec b = oracle::random_state(16, rng);
    b -= a.dot(b) * a;
    b.normalize();
    CHECK(std::abs(fidelity(a, {a}) - 1.0) < 1e-14);
    CHECK(std::abs(fidelity(b, {a})) < 1e-14);
    CHECK(std::abs(fidelity(a, {a, b}) - 1.0) < 1e-14);
    const CVec mix = (a + b) / std::sqrt(2.0);
    CHECK(std::abs(fidelity(mix, {a}) - 0.5) < 1e-14);
    CHECK(std::abs(fidelity(std::exp(cplx(0, 1.234)) * mix, {a, b}) - 1.0) < 1e-14);
}

TEST_CASE("entanglement entropy")
{
    const SectorBasis b2 = full_basis(2, Spin::Half);
    CVec singlet = CVec::Zero(4);
    singlet[1] = 1.0 / std::sqrt(2.0);  // up down (site 0 up)
    singlet[2] = -1.0 / std::sqrt(2.0);
    CHECK(std::abs(entanglement_entropy(singlet, b2) - std::log(2.0)) < 1e-12);
    CHECK(std::abs(entanglement_entropy(CVec::Unit(4, 3), b2)) < 1e-12);

    std::mt19937_64 rng(8);
    for (auto [n, d] : std::vector<std::pair<int, int>>{{6, 2}, {4, 3}, {8, 2}}) {
        const Spin s = d == 2 ? Spin::Half : Spin::One;
        const CVec psi = oracle::random_state(static_cast<Eigen::Index>(std::pow(d, n)), rng);
        CHECK(std::abs(entanglement_entropy(psi, full_basis(n, s)) - oracle::half_chain_entropy(psi, n, d)) < 1e-10);
    }

    // sector states go through lift
    const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 6);
    const SectorBasis sec = build_sector(m, {});
    const CVec v = oracle::random_state(sec.dim(), rng);
    CHECK(std::abs(entanglement_entropy(v, sec) - oracle::half_chain_entropy(lift(v, sec), 6, 3)) < 1e-10);
    CHECK_THROWS(entanglement_entropy(CVec::Unit(8, 0), full_basis(3, Spin::Half)));
}

TEST_CASE("norm density")
{
    CHECK(std::abs(norm_density({{2.0, 3.0}}, 4) - 0.75) < 1e-15);
    CHECK(std::abs(norm_density({{1.5, 2.0}, {1.5, 4.0}}, 2) - (2.0 + 4.0) / 4.0) < 1e-15);
    CHECK(std::abs(norm_density([](double) { return 5.0; }, 3.0, 5, 10) - 1.0) < 1e-15);
    // linear ramp: trapezoid is exact
    CHECK(std::abs(norm_density([](double t) { return t; }, 2.0, 1, 7) - 1.0) < 1e-14);
    CHECK_THROWS(norm_density({{0.0, 1.0}}, 2));
}
