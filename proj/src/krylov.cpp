#include "cdqaoa/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace cdqaoa {

namespace {

void orthogonalize(CVec& v, const std::vector<CVec>& against)
{
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& u : against) v -= u.dot(v) * u;
}

struct Tridiagonal {
    std::vector<double> a, b;  // b[j] couples j and j+1; b.size() == a.size() when a tail coefficient exists
};

// Lanczos with full reorthogonalization against both the Krylov basis and `locked`.
// Returns the basis; `tail` receives the norm of the next residual.
std::vector<CVec> lanczos(const SparseMat& H, const CVec& start, int m, const std::vector<CVec>& locked,
                          Tridiagonal& tri, double& tail)
{
    std::vector<CVec> V;
    tri.a.clear();
    tri.b.clear();
    CVec v = start;
    orthogonalize(v, locked);
    double nv = v.norm();
    tail = 0.0;
    if (nv == 0.0) return V;
    V.push_back(v / nv);
    for (int j = 0; j < m; ++j) {
        CVec w = spmv(H, V[j]);
        const double a = V[j].dot(w).real();
        tri.a.push_back(a);
        w -= a * V[j];
        if (j > 0) w -= tri.b[j - 1] * V[j - 1];
        orthogonalize(w, V);
        orthogonalize(w, locked);
        const double b = w.norm();
        tail = b;
        if (j + 1 == m || b < 1e-12 * (std::abs(a) + 1.0)) break;
        tri.b.push_back(b);
        V.push_back(w / b);
    }
    return V;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_tridiagonal(const Tridiagonal& tri, std::size_t m)
{
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        T(i, i) = tri.a[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = tri.b[i];
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T);
}

// Last component of exp(-i t T) e_1 for the tridiagonal T.
cplx last_coefficient(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es, double t)
{
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const auto m = Q.rows();
    cplx c = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) c += Q(m - 1, i) * std::exp(cplx(0.0, -t * es.eigenvalues()[i])) * Q(0, i);
    return c;
}

int count_manifold(const RVec& values, double window)
{
    int m = 1;
    while (m < values.size() && std::abs(values[m] - values[0]) < window) ++m;
    return m;
}

}  // namespace

void spmv(const SparseMat& H, const CVec& x, CVec& y)
{
    if (H.cols() != x.size()) throw std::invalid_argument("spmv: dimension mismatch");
    y.resize(H.rows());
    const cplx* val = H.valuePtr();
    const int* col = H.innerIndexPtr();
    const int* outer = H.outerIndexPtr();
    const double* xd = reinterpret_cast<const double*>(x.data());
    double* yd = reinterpret_cast<double*>(y.data());
    for (Eigen::Index r = 0; r < H.rows(); ++r) {
        double re = 0.0, im = 0.0;
        const int end = H.isCompressed() ? outer[r + 1] : outer[r] + H.innerNonZeroPtr()[r];
        for (int k = outer[r]; k < end; ++k) {
            const double hr = val[k].real(), hi = val[k].imag();
            const double xr = xd[2 * col[k]], xi = xd[2 * col[k] + 1];
            re += hr * xr - hi * xi;
            im += hr * xi + hi * xr;
        }
        yd[2 * r] = re;
        yd[2 * r + 1] = im;
    }
}

CVec spmv(const SparseMat& H, const CVec& x)
{
    CVec y;
    spmv(H, x, y);
    return y;
}

CVec expmv(const SparseMat& H, double alpha, const CVec& psi, const KrylovOptions& opt)
{
    if (alpha < 0.0) throw std::invalid_argument("expmv: negative duration");
    return expmv_signed(H, alpha, psi, opt);
}

CVec expmv_signed(const SparseMat& H, double alpha, const CVec& psi, const KrylovOptions& opt)
{
    if (H.rows() != psi.size()) throw std::invalid_argument("expmv: dimension mismatch");
    const double norm0 = psi.norm();
    if (alpha == 0.0 || norm0 == 0.0) return psi;

    const int m_cap = static_cast<int>(std::min<Eigen::Index>(opt.max_dim, H.rows()));
    const double sign = alpha < 0.0 ? -1.0 : 1.0;
    const double span = std::abs(alpha);
    CVec v = psi;
    double remaining = span;
    double step = span;
    int substeps = 0;
    Tridiagonal tri;
    std::vector<CVec> V;
    while (remaining > 0.0) {
        if (++substeps > opt.max_substeps) throw ConvergenceError("expmv: too many substeps");
        const double nv = v.norm();
        const double t_want = std::min(step, remaining);

        // Lanczos, stopping as soon as the a-posteriori estimate allows the full wanted step
        V.clear();
        tri.a.clear();
        tri.b.clear();
        V.push_back(v / nv);
        double tail = 0.0;
        bool exact = false;
        for (int j = 0; j < m_cap; ++j) {
            CVec w = spmv(H, V[j]);
            const double a = V[j].dot(w).real();
            tri.a.push_back(a);
            w -= a * V[j];
            if (j > 0) w -= tri.b[j - 1] * V[j - 1];
            // local reorthogonalization only; full reorthogonalization triples the cost at dim ~3000
            w -= V[j].dot(w) * V[j];
            if (j > 0) w -= V[j - 1].dot(w) * V[j - 1];
            tail = w.norm();
            if (tail < 1e-12 * (std::abs(a) + 1.0) || j + 1 == H.rows()) {
                exact = true;
                break;
            }
            if (j + 1 == m_cap) break;
            if (j >= 3) {
                const auto es = solve_tridiagonal(tri, j + 1);
                const double last = std::abs(last_coefficient(es, sign * t_want));
                if (tail * last * nv <= opt.step_tol) break;
            }
            tri.b.push_back(tail);
            V.push_back(w / tail);
        }
        const std::size_t m = V.size();
        const auto es = solve_tridiagonal(tri, m);
        const Eigen::MatrixXd& Q = es.eigenvectors();
        const RVec& theta = es.eigenvalues();
        auto coeffs = [&](double t) {
            Eigen::VectorXcd c(m);
            for (std::size_t i = 0; i < m; ++i) c[i] = std::exp(cplx(0.0, -sign * t * theta[i])) * Q(0, i);
            return Eigen::VectorXcd(Q.cast<cplx>() * c);
        };
        double t = exact ? remaining : t_want;
        Eigen::VectorXcd y = coeffs(t);
        if (!exact) {
            int halvings = 0;
            while (tail * std::abs(y[m - 1]) * nv > opt.step_tol) {
                t *= 0.5;
                y = coeffs(t);
                if (++halvings > 60) throw ConvergenceError("expmv: Krylov error estimate does not decrease");
            }
        }
        CVec next = CVec::Zero(v.size());
        for (std::size_t i = 0; i < m; ++i) next += y[i] * V[i];
        v = nv * next;
        remaining -= t;
        if (remaining < 1e-15 * span) remaining = 0.0;
        step = 2.0 * t;
    }
    return v;
}

Eigenpairs lowest_eigenpairs(const SparseMat& H, const EigenOptions& opt)
{
    const Eigen::Index n = H.rows();
    if (opt.k < 1) throw std::invalid_argument("lowest_eigenpairs: k must be positive");
    if (n == 0) throw std::invalid_argument("lowest_eigenpairs: empty matrix");
    Eigenpairs out;

    if (n <= opt.dense_limit) {
        Eigen::SelfAdjointEigenSolver<CMat> es{CMat(H)};
        const RVec& ev = es.eigenvalues();
        out.manifold = count_manifold(ev, opt.degeneracy);
        const int keep = static_cast<int>(std::min<Eigen::Index>(std::max(opt.k, out.manifold), n));
        out.values = ev.head(keep);
        for (int i = 0; i < keep; ++i) out.vectors.push_back(es.eigenvectors().col(i));
        return out;
    }

    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    auto random_vector = [&] {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(gauss(rng), gauss(rng));
        return v;
    };

    std::vector<CVec> locked;
    std::vector<double> values;
    int want = opt.resolve_degeneracy ? std::max(opt.k, 2) : opt.k;
    const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
    while (static_cast<int>(locked.size()) < want && static_cast<Eigen::Index>(locked.size()) < n) {
        CVec v = (locked.empty() && opt.guess && opt.guess->size() == n) ? CVec(*opt.guess + 1e-3 * random_vector().normalized())
                                                                          : random_vector();
        bool converged = false;
        for (int restart = 0; restart < opt.max_restarts; ++restart) {
            Tridiagonal tri;
            double tail = 0.0;
            const std::vector<CVec> V = lanczos(H, v, m, locked, tri, tail);
            if (V.empty()) {
                v = random_vector();
                continue;
            }
            const auto es = solve_tridiagonal(tri, V.size());
            CVec x = CVec::Zero(n);
            for (std::size_t i = 0; i < V.size(); ++i) x += es.eigenvectors()(i, 0) * V[i];
            orthogonalize(x, locked);
            x.normalize();
            const CVec hx = spmv(H, x);
            const double theta = x.dot(hx).real();
            const double residual = (hx - theta * x).norm();
            if (residual <= opt.tol) {
                locked.push_back(x);
                values.push_back(theta);
                converged = true;
                break;
            }
            v = x;
        }
        if (!converged) throw ConvergenceError("lowest_eigenpairs: Lanczos did not converge");
        if (opt.resolve_degeneracy && static_cast<int>(locked.size()) == want) {
            std::vector<double> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            if (std::abs(sorted.back() - sorted.front()) < opt.degeneracy) ++want;
        }
    }

    std::vector<int> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    RVec sorted(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < order.size(); ++i) sorted[static_cast<Eigen::Index>(i)] = values[order[i]];
    out.manifold = count_manifold(sorted, opt.degeneracy);
    const int keep = std::max(opt.k, out.manifold);
    out.values = sorted.head(keep);
    for (int i = 0; i < keep; ++i) out.vectors.push_back(locked[order[i]]);
    return out;
}

}  // namespace cdqaoa
