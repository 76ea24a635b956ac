#include "cdqaoa/gauge_cd.hpp"
#include "cdqaoa/krylov.hpp"

#include "cdqaoa/symmetry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <numbers>

namespace cdqaoa {

double DriveProtocol::lambda(double t) const
{
    const double s = std::sin(std::numbers::pi * t / (2.0 * T));
    return s * s;
}

double DriveProtocol::lambda_dot(double t) const
{
    return std::numbers::pi / (2.0 * T) * std::sin(std::numbers::pi * t / T);
}

namespace {

struct ActionPieces {
    std::vector<CVec> b;  // B_0 psi, B_1 psi, ...
    RVec mean;            // <B_j>
};

ActionPieces action_pieces(const GaugeSystem& sys, double lambda, const CVec& psi)
{
    const SparseMat H = sys.h_static + lambda * sys.h_driven;
    const CVec hpsi = spmv(H, psi);
    ActionPieces p;
    p.b.push_back(spmv(sys.h_driven, psi));
    for (const auto& Hj : sys.ansatz) p.b.push_back(I_unit * (spmv(Hj, hpsi) - spmv(H, spmv(Hj, psi))));
    p.mean.resize(static_cast<Eigen::Index>(p.b.size()));
    for (std::size_t j = 0; j < p.b.size(); ++j) p.mean[static_cast<Eigen::Index>(j)] = psi.dot(p.b[j]).real();
    return p;
}

// Covariance C_jk = Re<B_j B_k> - <B_j><B_k>, indices include B_0.
Eigen::MatrixXd covariance(const ActionPieces& p)
{
    const auto n = static_cast<Eigen::Index>(p.b.size());
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j; k < n; ++k)
            C(j, k) = C(k, j) = p.b[j].dot(p.b[k]).real() - p.mean[j] * p.mean[k];
    return C;
}

double action_from(const Eigen::MatrixXd& C, const RVec& beta)
{
    RVec full(beta.size() + 1);
    full[0] = 1.0;
    full.tail(beta.size()) = beta;
    return full.dot(C * full);
}

}  // namespace

double gauge_action(const GaugeSystem& sys, double lambda, const CVec& psi_gs, const RVec& beta)
{
    if (beta.size() != static_cast<Eigen::Index>(sys.ansatz.size()))
        throw std::invalid_argument("gauge_action: beta has the wrong length");
    return action_from(covariance(action_pieces(sys, lambda, psi_gs)), beta);
}

GaugeSolution solve_gauge_coefficients(const GaugeSystem& sys, double lambda, const CVec& psi_gs)
{
    GaugeSolution sol;
    const auto r = static_cast<Eigen::Index>(sys.ansatz.size());
    const Eigen::MatrixXd C = covariance(action_pieces(sys, lambda, psi_gs));
    sol.action_zero = C(0, 0);
    if (r == 0) {
        sol.beta = RVec();
        sol.action = sol.action_zero;
        return sol;
    }
    // M = 2 C restricted to the ansatz; M beta = -M_0
    const Eigen::MatrixXd M = 2.0 * C.bottomRightCorner(r, r);
    const RVec rhs = -2.0 * C.block(1, 0, r, 1);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    RVec beta;
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        beta = ldlt.solve(rhs);
        ok = beta.allFinite() && (M * beta - rhs).norm() <= 1e-8 * std::max(1.0, M.norm());
    }
    if (!ok) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
        cod.setThreshold(1e-12);
        beta = cod.solve(rhs);
        sol.least_squares = true;
    }
    sol.beta = beta;
    sol.action = action_from(C, beta);
    return sol;
}

GaugeSolution solve_gauge_coefficients(const TermList& h_static, const TermList& h_driven,
                                       const std::vector<TermList>& ansatz, double lambda,
                                       const SectorBasis& basis)
{
    GaugeSystem sys;
    sys.h_static = build_matrix(h_static, basis);
    sys.h_driven = build_matrix(h_driven, basis);
    for (const auto& t : ansatz) sys.ansatz.push_back(build_matrix(t, basis));
    EigenOptions eo;
    eo.resolve_degeneracy = false;
    const Eigenpairs gs = lowest_eigenpairs(sys.h_static + lambda * sys.h_driven, eo);
    return solve_gauge_coefficients(sys, lambda, gs.vectors[0]);
}

namespace {

DriveResult drive(const GaugeSystem& sys, const DriveProtocol& dp, const CVec& psi0, bool with_gauge,
                  const DriveObserver& observe)
{
    if (dp.T <= 0.0 || dp.dt <= 0.0) throw std::invalid_argument("drive: T and dt must be positive");
    if (dp.substeps < 1) throw std::invalid_argument("drive: substeps must be >= 1");
    const int steps = std::max(1, static_cast<int>(std::lround(dp.T / dp.dt)));
    const double h = dp.T / steps;
    const bool gauge = with_gauge && !sys.ansatz.empty();
    const auto r = static_cast<Eigen::Index>(sys.ansatz.size());

    CVec warm;
    auto solve_at = [&](double t) -> RVec {
        const double lam = dp.lambda(t);
        EigenOptions eo;
        eo.resolve_degeneracy = false;
        if (warm.size() > 0) eo.guess = &warm;
        const Eigenpairs gs = lowest_eigenpairs(sys.h_static + lam * sys.h_driven, eo);
        warm = gs.vectors[0];
        return solve_gauge_coefficients(sys, lam, warm).beta;
    };

    // with substeps, beta lives on the coarse nodes and is interpolated in between
    std::vector<RVec> nodes;
    if (gauge && dp.substeps > 1)
        for (int i = 0; i <= steps; ++i) nodes.push_back(solve_at(i * h));

    DriveResult res;
    res.psi = psi0;
    if (observe) observe(0.0, res.psi);
    const double hf = h / dp.substeps;
    for (int i = 0; i < steps; ++i) {
        RVec beta_mid = RVec::Zero(r);
        if (gauge && dp.substeps == 1) beta_mid = solve_at((i + 0.5) * h);
        for (int s = 0; s < dp.substeps; ++s) {
            const double t0 = i * h + s * hf;
            const double tm = t0 + 0.5 * hf;
            DriveStep st{t0, t0 + hf, dp.lambda(tm), dp.lambda_dot(tm), RVec::Zero(r), 0.0};
            if (gauge) {
                if (dp.substeps == 1) st.beta = beta_mid;
                else {
                    const double w = (tm - i * h) / h;
                    st.beta = (1.0 - w) * nodes[i] + w * nodes[i + 1];
                }
            }
            SparseMat H = sys.h_static + st.lambda * sys.h_driven;
            if (gauge)
                for (Eigen::Index j = 0; j < r; ++j) H += (st.lambda_dot * st.beta[j]) * sys.ansatz[j];
            st.hs_norm = normalized_hs_norm(H);
            res.psi = expmv(H, hf, res.psi);
            res.steps.push_back(std::move(st));
            if (observe) observe(t0 + hf, res.psi);
        }
    }
    return res;
}

}  // namespace

DriveResult run_cd_drive(const GaugeSystem& sys, const DriveProtocol& dp, const CVec& psi0, const DriveObserver& observe)
{
    return drive(sys, dp, psi0, true, observe);
}

DriveResult run_adiabatic(const GaugeSystem& sys, const DriveProtocol& dp, const CVec& psi0, const DriveObserver& observe)
{
    return drive(sys, dp, psi0, false, observe);
}

GaugeSystem make_gauge_system(const ModelSpec& model, const SectorBasis& basis, const std::vector<std::string>& ansatz)
{
    GaugeSystem sys;
    TermList h2 = catalog("H2", model);
    if (model.kind == ModelKind::Lmg) h2 = h2.scaled(model.coupling("h"));
    sys.h_static = build_matrix(h2, basis);
    sys.h_driven = build_matrix(catalog("H1", model), basis);
    for (const auto& label : ansatz) sys.ansatz.push_back(build_matrix(catalog(label, model), basis));
    return sys;
}

std::vector<std::string> default_cd_ansatz(const ModelSpec& model)
{
    switch (model.kind) {
    case ModelKind::IsingHalf: return {"Y", "X|Y", "Y|Z"};
    case ModelKind::IsingOne:
    case ModelKind::HeisenbergOne: return {"Y", "XY", "YZ", "X|Y-XY", "Y|Z-YZ"};
    case ModelKind::Lmg: return {"Y", "XYhat", "ZYhat"};
    }
    return {};
}

}  // namespace cdqaoa
