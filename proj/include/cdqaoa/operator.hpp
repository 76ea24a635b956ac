#pragma once

#include "cdqaoa/krylov.hpp"
#include "cdqaoa/types.hpp"

#include <memory>

namespace cdqaoa {

// A Hermitian generator together with whatever makes exp(-i alpha H) cheap:
// a diagonal fast path, or a stored eigendecomposition for small dimensions.
class Operator {
public:
    enum class Mode { Auto, Krylov, Spectral };

    Operator() = default;
    explicit Operator(SparseMat m, Mode mode = Mode::Auto);

    const SparseMat& matrix() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }
    bool is_diagonal() const { return diagonal_; }
    bool has_spectrum() const { return static_cast<bool>(spectrum_); }
    double hs_norm() const { return hs_norm_; }

    CVec apply(const CVec& psi) const;
    CVec propagate(double alpha, const CVec& psi) const;
    // exp(+i alpha H) psi, the adjoint step
    CVec propagate_back(double alpha, const CVec& psi) const;

    static constexpr Eigen::Index spectral_limit = 1100;

private:
    CVec evolve(double t, const CVec& psi) const;
    struct Spectrum {
        RVec values;
        CMat vectors;
    };
    SparseMat mat_;
    bool diagonal_ = false;
    RVec diag_;
    std::shared_ptr<const Spectrum> spectrum_;
    double hs_norm_ = 0.0;
    KrylovOptions krylov_;
};

}  // namespace cdqaoa
