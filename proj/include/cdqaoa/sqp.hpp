#pragma once

#include "cdqaoa/types.hpp"

#include <functional>

namespace cdqaoa {

// Euclidean projection onto {x >= 0, sum x = total}.
RVec project_simplex(const RVec& v, double total);

// min g.d + d.B d / 2  s.t.  sum d = 0,  d >= lower  (primal active set, B positive definite)
RVec solve_simplex_qp(const Eigen::MatrixXd& B, const RVec& g, const RVec& lower);

struct SqpOptions {
    double tol = 1e-6;  // infinity norm of x - P(x - grad)
    int max_iter = 500;
};

struct SqpResult {
    RVec x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

using ValueGradient = std::function<double(const RVec& x, RVec* grad)>;

// Quasi-Newton SQP on the simplex {x >= 0, sum x = total}: damped BFGS Hessian, one QP per
// iteration, backtracking Armijo search. Iterates stay feasible, so the L1 merit reduces to f.
SqpResult minimize_on_simplex(const ValueGradient& fn, const RVec& x0, double total, const SqpOptions& opt);

}  // namespace cdqaoa
