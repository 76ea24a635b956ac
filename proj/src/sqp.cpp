#include "cdqaoa/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cdqaoa {

RVec project_simplex(const RVec& v, double total)
{
    const Eigen::Index n = v.size();
    if (n == 0) return v;
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cum += u[k];
        const double t = (cum - total) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    RVec out = (v.array() - theta).max(0.0).matrix();
    // remove rounding drift from the sum
    const double drift = out.sum() - total;
    Eigen::Index imax;
    out.maxCoeff(&imax);
    out[imax] -= drift;
    return out;
}

RVec solve_simplex_qp(const Eigen::MatrixXd& B, const RVec& g, const RVec& lower)
{
    const Eigen::Index n = g.size();
    RVec d = RVec::Zero(n);
    std::vector<bool> fixed(n, false);
    for (Eigen::Index i = 0; i < n; ++i) fixed[i] = lower[i] >= 0.0;  // already at its bound

    for (int iter = 0; iter < 20 * static_cast<int>(n) + 20; ++iter) {
        std::vector<Eigen::Index> F;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!fixed[i]) F.push_back(i);
        const auto nf = static_cast<Eigen::Index>(F.size());
        const RVec grad = g + B * d;

        RVec p = RVec::Zero(n);
        double mu = 0.0;
        if (nf > 0) {
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
            RVec rhs(nf + 1);
            for (Eigen::Index a = 0; a < nf; ++a) {
                for (Eigen::Index b = 0; b < nf; ++b) K(a, b) = B(F[a], F[b]);
                K(a, nf) = K(nf, a) = 1.0;
                rhs[a] = -grad[F[a]];
            }
            rhs[nf] = 0.0;
            const RVec sol = K.fullPivLu().solve(rhs);
            for (Eigen::Index a = 0; a < nf; ++a) p[F[a]] = sol[a];
            mu = sol[nf];
        }

        if (p.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + d.lpNorm<Eigen::Infinity>())) {
            if (nf == 0) return d;
            // multipliers of the active bounds: grad_i + mu - lambda_i = 0
            Eigen::Index worst = -1;
            double most_negative = -1e-12;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!fixed[i]) continue;
                const double lam = grad[i] + mu;
                if (lam < most_negative) {
                    most_negative = lam;
                    worst = i;
                }
            }
            if (worst < 0) return d;
            fixed[worst] = false;
            continue;
        }

        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (fixed[i] || p[i] >= 0.0) continue;
            const double t = (lower[i] - d[i]) / p[i];
            if (t < step) {
                step = std::max(0.0, t);
                blocking = i;
            }
        }
        d += step * p;
        if (blocking >= 0) {
            d[blocking] = lower[blocking];
            fixed[blocking] = true;
        }
    }
    return d;
}

namespace {

double stationarity(const RVec& x, const RVec& g, double total)
{
    return (x - project_simplex(x - g, total)).lpNorm<Eigen::Infinity>();
}

}  // namespace

SqpResult minimize_on_simplex(const ValueGradient& fn, const RVec& x0, double total, const SqpOptions& opt)
{
    const Eigen::Index n = x0.size();
    SqpResult res;
    res.x = project_simplex(x0, total);
    RVec g(n);
    res.f = fn(res.x, &g);
    if (n <= 1) {
        res.converged = true;
        return res;
    }
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        if (stationarity(res.x, g, total) <= opt.tol) {
            res.converged = true;
            return res;
        }
        RVec d = solve_simplex_qp(B, g, -res.x);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            // model lost descent; restart from the projected gradient direction
            B.setIdentity();
            d = project_simplex(res.x - g, total) - res.x;
            slope = g.dot(d);
            if (!(slope < 0.0)) break;
        }

        double t = 1.0;
        RVec x_new(n), g_new(n);
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = res.x + t * d;
            // clamp rounding below zero and keep the sum exact
            x_new = x_new.cwiseMax(0.0);
            x_new[0] += total - x_new.sum();
            if (x_new[0] < 0.0) x_new = project_simplex(x_new, total);
            f_new = fn(x_new, &g_new);
            if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!B.isIdentity()) {
                B.setIdentity();
                continue;
            }
            res.line_search_failed = true;
            break;
        }

        const RVec s = x_new - res.x;
        const RVec y = g_new - g;
        res.x = x_new;
        res.f = f_new;
        g = g_new;

        const double sy = s.dot(y);
        if (!scaled && sy > 0.0) {
            B = (y.squaredNorm() / sy) * Eigen::MatrixXd::Identity(n, n);
            scaled = true;
        }
        const RVec Bs = B * s;
        const double sBs = s.dot(Bs);
        if (sBs > 1e-300) {
            const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
            const RVec r = theta * y + (1.0 - theta) * Bs;
            const double sr = s.dot(r);
            if (sr > 1e-300) B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
        }
    }
    res.converged = stationarity(res.x, g, total) <= opt.tol;
    return res;
}

}  // namespace cdqaoa
