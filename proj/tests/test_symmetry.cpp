#include "cdqaoa/spin_ops.hpp"
#include "cdqaoa/symmetry.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>
#include <set>

using namespace cdqaoa;

namespace {

CMat dense(const TermList& t)
{
    return CMat(build_matrix(t, full_basis(t.n_sites, t.spin)));
}

// Columns are the lifted sector basis vectors.
CMat lift_matrix(const SectorBasis& b)
{
    CMat L(static_cast<Eigen::Index>(b.full_dim), b.dim());
    for (Eigen::Index i = 0; i < b.dim(); ++i) L.col(i) = lift(CVec::Unit(b.dim(), i), b);
    return L;
}

}  // namespace

namespace {

long gcd(long a, long b) { return b == 0 ? a : gcd(b, a % b); }

// Burnside count of bracelets (orbits under the dihedral group) of length n over k colours.
long bracelets(long n, long k)
{
    long rot = 0;
    for (long i = 0; i < n; ++i) {
        long p = 1;
        for (long j = 0; j < gcd(i, n); ++j) p *= k;
        rot += p;
    }
    auto pw = [&](long e) {
        long p = 1;
        for (long j = 0; j < e; ++j) p *= k;
        return p;
    };
    const long refl = n % 2 ? n * pw((n + 1) / 2) : (n / 2) * (pw(n / 2 + 1) + pw(n / 2));
    return (rot + refl) / (2 * n);
}

}  // namespace

TEST_CASE("sector dimensions equal the Burnside bracelet count")
{
    for (int n = 2; n <= 18; ++n) CHECK(build_sector(ModelSpec::make(ModelKind::IsingHalf, n), {}).dim() == bracelets(n, 2));
    for (int n = 2; n <= 10; ++n) CHECK(build_sector(ModelSpec::make(ModelKind::IsingOne, n), {}).dim() == bracelets(n, 3));
}

TEST_CASE("sector dimensions")
{
    const std::vector<std::pair<int, Eigen::Index>> half = {{12, 224}, {14, 687}, {16, 2250}, {18, 7685}};
    for (auto [n, dim] : half) CHECK(build_sector(ModelSpec::make(ModelKind::IsingHalf, n), {}).dim() == dim);
    CHECK(build_sector(ModelSpec::make(ModelKind::IsingOne, 8), {}).dim() == 498);
    // 3^10 configurations give 3210 bracelets
    CHECK(build_sector(ModelSpec::make(ModelKind::IsingOne, 10), {}).dim() == 3210);
    CHECK(lmg_basis(501).dim() == 502);
}

TEST_CASE("sector dimension equals the rank of the dense symmetrizer")
{
    for (auto [kind, n] : std::vector<std::pair<ModelKind, int>>{{ModelKind::IsingHalf, 2}, {ModelKind::IsingHalf, 4},
                                                                 {ModelKind::IsingHalf, 5}, {ModelKind::IsingOne, 4}}) {
        const ModelSpec m = ModelSpec::make(kind, n);
        const int d = local_dim(m.spin());
        const CMat T = oracle::translation(n, d), R = oracle::reflection(n, d);
        const auto D = T.rows();
        CMat P = CMat::Zero(D, D), Tk = CMat::Identity(D, D);
        for (int k = 0; k < n; ++k) {
            P += Tk + R * Tk;
            Tk = T * Tk;
        }
        P /= 2.0 * n;
        Eigen::SelfAdjointEigenSolver<CMat> es(P);
        int rank = 0;
        for (Eigen::Index i = 0; i < D; ++i) rank += es.eigenvalues()[i] > 0.5;
        const SectorBasis b = build_sector(m, {});
        CHECK(b.dim() == rank);
        // the lifted basis spans exactly the symmetric subspace
        const CMat L = lift_matrix(b);
        CHECK((L * L.adjoint() - P).norm() < 1e-12);
    }
}

TEST_CASE("representatives are orbit minima with positive norms")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 5);
    const SectorBasis b = build_sector(m, {});
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
        const auto imgs = orbit(b.reps[i], 5, Spin::One, b.symmetry);
        CHECK(*std::min_element(imgs.begin(), imgs.end()) == b.reps[i]);
        const std::set<std::uint64_t> uniq(imgs.begin(), imgs.end());
        CHECK(b.norms[i] == doctest::Approx(std::sqrt(static_cast<double>(uniq.size()))));
    }
}

TEST_CASE("translation-only sector")
{
    // necklaces of length 6 over two colours: 14
    const SectorBasis b = build_sector(ModelSpec::make(ModelKind::IsingHalf, 6), {true, false});
    CHECK(b.dim() == 14);
    const CMat L = lift_matrix(b);
    CHECK((L.adjoint() * L - CMat::Identity(b.dim(), b.dim())).norm() < 1e-12);
}

TEST_CASE("lift and project")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 4);
    const SectorBasis b = build_sector(m, {});
    std::mt19937_64 rng(7);

    // |up up up up> is its own orbit
    const CVec up = lift(product_state({0, 0, 0, 0}, b), b);
    CHECK(std::abs(up[0] - 1.0) < 1e-15);
    CHECK(std::abs(up.norm() - 1.0) < 1e-15);

    const CVec u = oracle::random_state(b.dim(), rng);
    const CVec v = oracle::random_state(b.dim(), rng);
    CHECK((project(lift(u, b), b) - u).norm() < 1e-12);
    CHECK(std::abs(lift(u, b).norm() - 1.0) < 1e-12);

    const TermList h = catalog("H1", m) + catalog("H2", m) + catalog("Y|Z", m);
    const SparseMat hs = build_matrix(h, b);
    const CMat hf = dense(h);
    CHECK(std::abs(lift(u, b).dot(hf * lift(v, b)) - u.dot(hs * v)) < 1e-12);
}

TEST_CASE("Neel state projection is normalized")
{
    const ModelSpec m = ModelSpec::make(ModelKind::HeisenbergOne, 6);
    const SectorBasis b = build_sector(m, {});
    const CVec s = product_state({0, 2, 0, 2, 0, 2}, b);
    const CVec full = lift(s, b);
    CHECK(std::abs(full.norm() - 1.0) < 1e-14);
    // two configurations, equal weight
    int nonzero = 0;
    for (Eigen::Index i = 0; i < full.size(); ++i)
        if (std::abs(full[i]) > 1e-14) {
            ++nonzero;
            CHECK(std::abs(full[i] - 1.0 / std::sqrt(2.0)) < 1e-14);
        }
    CHECK(nonzero == 2);
}

TEST_CASE("gauge term generation, spin one half, first order")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 3);
    const auto terms = generate_gauge_terms(1, "+-z", {}, m, false);
    REQUIRE(terms.size() == 1);
    CHECK(equivalent(terms[0], catalog("Y", m)));
}

TEST_CASE("gauge term generation, spin one half, nearest neighbours")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 3);
    const auto terms = generate_gauge_terms(2, "+-z", {}, m, false);
    REQUIRE(terms.size() == 2);
    const TermList xy = catalog("X|Y", m), yz = catalog("Y|Z", m);
    const bool first = equivalent(terms[0], xy) && equivalent(terms[1], yz);
    const bool second = equivalent(terms[0], yz) && equivalent(terms[1], xy);
    CHECK((first || second));
}

TEST_CASE("gauge term generation, spin one, on-site allowed")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 3);
    const auto terms = generate_gauge_terms(2, "+-z", {}, m, true);
    bool has_xy = false;
    for (const auto& t : terms) has_xy = has_xy || equivalent(t, catalog("XY", m));
    CHECK(has_xy);

    // the generated operators span XY, YZ, X|Y, Y|Z (and the single-site Y)
    std::vector<CVec> cols;
    for (const auto& t : terms) {
        const CMat g = dense(t);
        cols.push_back(Eigen::Map<const CVec>(g.data(), g.size()));
    }
    CMat S(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) S.col(static_cast<Eigen::Index>(i)) = cols[i];
    for (const char* label : {"XY", "YZ", "X|Y", "Y|Z"}) {
        CAPTURE(label);
        const CMat target = dense(catalog(label, m));
        const CVec t = Eigen::Map<const CVec>(target.data(), target.size());
        const CVec coef = S.colPivHouseholderQr().solve(t);
        CHECK((S * coef - t).norm() < 1e-10 * t.norm());
    }
}

TEST_CASE("generated gauge terms are Hermitian, imaginary, symmetric and off-diagonal in the eigenbasis")
{
    for (auto [kind, onsite] : std::vector<std::pair<ModelKind, bool>>{{ModelKind::IsingHalf, false}, {ModelKind::IsingOne, true}}) {
        const ModelSpec m = ModelSpec::make(kind, 3);
        const int d = local_dim(m.spin());
        const CMat H = dense(catalog("H2", m)) + 0.37 * dense(catalog("H1", m));
        Eigen::SelfAdjointEigenSolver<CMat> es(H);
        const CMat T = oracle::translation(3, d), R = oracle::reflection(3, d);
        for (int order : {1, 2}) {
            const auto terms = generate_gauge_terms(order, "+-z", {}, m, onsite);
            CHECK(!terms.empty());
            for (const auto& t : terms) {
                const CMat g = dense(t);
                CHECK((g - g.adjoint()).norm() < 1e-12);
                CHECK(g.real().norm() < 1e-12);
                CHECK((T * g * T.adjoint() - g).norm() < 1e-12);
                CHECK((R * g * R.adjoint() - g).norm() < 1e-12);
                const CMat ge = es.eigenvectors().adjoint() * g * es.eigenvectors();
                CHECK(ge.diagonal().norm() < 1e-10);
            }
            for (std::size_t i = 0; i < terms.size(); ++i)
                for (std::size_t j = i + 1; j < terms.size(); ++j) CHECK(!equivalent(terms[i], terms[j]));
        }
    }
}

TEST_CASE("gauge term generation is deterministic and size independent in count")
{
    const ModelSpec m3 = ModelSpec::make(ModelKind::IsingOne, 3);
    const ModelSpec m6 = ModelSpec::make(ModelKind::IsingOne, 6);
    const auto a = generate_gauge_terms(2, "+-z", {}, m3, true);
    const auto b = generate_gauge_terms(2, "+-z", {}, m3, true);
    const auto c = generate_gauge_terms(2, "+-z", {}, m6, true);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(a[i].name == c[i].name);
    }
    CHECK_THROWS(generate_gauge_terms(2, "y", {}, m3, true));
}

TEST_CASE("equivalence under real scalar multiples")
{
    const ModelSpec m = ModelSpec::make(ModelKind::IsingHalf, 3);
    TermList y = catalog("Y", m);
    TermList y2 = y, yi = y;
    for (auto& t : y2.terms) t.coeff *= cplx(0.0, 2.0);
    for (auto& t : yi.terms) t.coeff *= cplx(0.0, 1.0);
    CHECK(equivalent(y2, yi));
    CHECK(equivalent(y, y.scaled(-3.0)));
    CHECK(!equivalent(y, catalog("X|Y", m)));
    TermList zero = y.scaled(0.0);
    CHECK_THROWS(equivalent(y, zero));

    // random Hermitian pairs against a least-squares proportionality oracle
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        TermList a;
        a.n_sites = 3;
        a.spin = Spin::Half;
        for (int k = 0; k < 4; ++k) {
            const char ops[] = "xyz";
            const std::string s{ops[rng() % 3], ops[rng() % 3]};
            const int i = static_cast<int>(rng() % 3);
            a.terms.push_back({s, {i, (i + 1) % 3}, g(rng)});
        }
        TermList b = (trial % 2 == 0) ? a.scaled(g(rng)) : a;
        if (trial % 2 == 1) b.terms.push_back({"z", {static_cast<int>(rng() % 3)}, 0.3});
        const CMat A = dense(a), B = dense(b);
        const cplx c = (B.adjoint() * A).trace() / (B.adjoint() * B).trace();
        const bool oracle_says = std::abs(c.imag()) < 1e-12 && (A - c.real() * B).norm() < 1e-10 * A.norm();
        CHECK(equivalent(a, b) == oracle_says);
    }
}
