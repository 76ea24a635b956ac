#pragma once

#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/problem.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cdqaoa {

// lambda(t) = sin^2(pi t / 2T)
struct DriveProtocol {
    double T = 1.0;
    double dt = 0.2;
    int substeps = 1;  // evolution steps per solve step; beta is interpolated linearly when > 1

    double lambda(double t) const;
    double lambda_dot(double t) const;
};

struct GaugeSolution {
    RVec beta;
    double action = 0.0;       // S at beta
    double action_zero = 0.0;  // S without gauge term
    bool least_squares = false;
};

// H(lambda) = H_static + lambda H_driven; ansatz X = sum_j beta_j H_j.
struct GaugeSystem {
    SparseMat h_static;
    SparseMat h_driven;
    std::vector<SparseMat> ansatz;
};

// Minimizes S = <G^2> - <G>^2, G = dH/dlambda + i[X, H], in the ground state psi_gs of H(lambda).
GaugeSolution solve_gauge_coefficients(const GaugeSystem& sys, double lambda, const CVec& psi_gs);
// Convenience form that finds the ground state itself.
GaugeSolution solve_gauge_coefficients(const TermList& h_static, const TermList& h_driven,
                                       const std::vector<TermList>& ansatz, double lambda,
                                       const SectorBasis& basis);
double gauge_action(const GaugeSystem& sys, double lambda, const CVec& psi_gs, const RVec& beta);

struct DriveStep {
    double t0, t1;
    double lambda, lambda_dot;
    RVec beta;
    double hs_norm;  // normalized Hilbert-Schmidt norm of the step Hamiltonian
};

struct DriveResult {
    CVec psi;
    std::vector<DriveStep> steps;
};

using DriveObserver = std::function<void(double t, const CVec& psi)>;

// Piecewise-constant evolution under H(lambda) + lambda_dot X, sampled at step midpoints.
DriveResult run_cd_drive(const GaugeSystem& sys, const DriveProtocol& drive, const CVec& psi0,
                         const DriveObserver& observe = {});
DriveResult run_adiabatic(const GaugeSystem& sys, const DriveProtocol& drive, const CVec& psi0,
                          const DriveObserver& observe = {});

// H(lambda) = lambda H1 + H2 for a chain model with the given ansatz labels.
GaugeSystem make_gauge_system(const ModelSpec& model, const SectorBasis& basis,
                              const std::vector<std::string>& ansatz);

// Ansatz used for the spin-1 Ising comparison.
std::vector<std::string> default_cd_ansatz(const ModelSpec& model);

}  // namespace cdqaoa
