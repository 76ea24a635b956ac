#include "cdqaoa/operator.hpp"
#include "cdqaoa/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace cdqaoa {

Operator::Operator(SparseMat m, Mode mode) : mat_(std::move(m))
{
    if (mat_.rows() != mat_.cols()) throw std::invalid_argument("Operator: matrix must be square");
    mat_.makeCompressed();
    hs_norm_ = mat_.norm();

    diagonal_ = true;
    for (Eigen::Index r = 0; r < mat_.outerSize() && diagonal_; ++r)
        for (SparseMat::InnerIterator it(mat_, r); it; ++it)
            if (it.col() != r) {
                diagonal_ = false;
                break;
            }
    if (diagonal_) {
        diag_ = RVec::Zero(mat_.rows());
        for (Eigen::Index r = 0; r < mat_.outerSize(); ++r)
            for (SparseMat::InnerIterator it(mat_, r); it; ++it) diag_[r] = it.value().real();
        return;
    }
    const bool spectral = mode == Mode::Spectral || (mode == Mode::Auto && mat_.rows() <= spectral_limit);
    if (spectral) {
        Eigen::SelfAdjointEigenSolver<CMat> es{CMat(mat_)};
        spectrum_ = std::make_shared<const Spectrum>(Spectrum{es.eigenvalues(), es.eigenvectors()});
    }
}

CVec Operator::apply(const CVec& psi) const
{
    if (diagonal_) return diag_.cast<cplx>().cwiseProduct(psi);
    return spmv(mat_, psi);
}

CVec Operator::propagate(double alpha, const CVec& psi) const
{
    if (alpha < 0.0) throw std::invalid_argument("propagate: negative duration");
    return evolve(alpha, psi);
}

CVec Operator::propagate_back(double alpha, const CVec& psi) const
{
    if (alpha < 0.0) throw std::invalid_argument("propagate_back: negative duration");
    return evolve(-alpha, psi);
}

CVec Operator::evolve(double alpha, const CVec& psi) const
{
    if (psi.size() != dim()) throw std::invalid_argument("propagate: dimension mismatch");
    if (alpha == 0.0) return psi;
    if (diagonal_) {
        CVec out(psi.size());
        for (Eigen::Index i = 0; i < psi.size(); ++i) out[i] = std::exp(cplx(0.0, -alpha * diag_[i])) * psi[i];
        return out;
    }
    if (spectrum_) {
        CVec c = spectrum_->vectors.adjoint() * psi;
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0.0, -alpha * spectrum_->values[i]));
        return spectrum_->vectors * c;
    }
    return expmv_signed(mat_, alpha, psi, krylov_);
}

}  // namespace cdqaoa
