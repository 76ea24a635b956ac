#pragma once

#include "cdqaoa/spin_ops.hpp"
#include "cdqaoa/types.hpp"

namespace cdqaoa {

struct KrylovOptions {
    int max_dim = 30;
    double step_tol = 1e-12;  // a-posteriori error allowed per substep
    int max_substeps = 100000;
};

// y = H x with the complex products written out (the library default goes through the
// slow IEEE-checked complex multiply).
void spmv(const SparseMat& H, const CVec& x, CVec& y);
CVec spmv(const SparseMat& H, const CVec& x);

// exp(-i alpha H) psi for Hermitian H by Lanczos projection with adaptive substeps.
CVec expmv(const SparseMat& H, double alpha, const CVec& psi, const KrylovOptions& opt = {});
// exp(-i t H) psi for t of either sign; t < 0 runs the evolution backwards.
CVec expmv_signed(const SparseMat& H, double t, const CVec& psi, const KrylovOptions& opt = {});

struct EigenOptions {
    int k = 1;
    double tol = 1e-10;            // residual norm
    double degeneracy = 1e-8;
    int krylov_dim = 60;
    int max_restarts = 400;
    Eigen::Index dense_limit = 600;  // full diagonalization below this size
    const CVec* guess = nullptr;
    bool resolve_degeneracy = true;  // keep going until the lowest level is exhausted
};

// Lowest eigenpairs. Always resolves the full degenerate manifold of the lowest level,
// so the result may hold more than k vectors.
Eigenpairs lowest_eigenpairs(const SparseMat& H, const EigenOptions& opt = {});

}  // namespace cdqaoa
