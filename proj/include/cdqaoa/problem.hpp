#pragma once

#include "cdqaoa/dynamics.hpp"
#include "cdqaoa/spin_ops.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cdqaoa {

// Everything a sequence evaluation needs: basis, cost Hamiltonian, its ground manifold,
// the initial state, and the generators available to protocols.
struct ControlProblem {
    ModelSpec model;
    std::shared_ptr<const SectorBasis> basis;
    Operator cost;
    double e_gs = 0.0;
    std::vector<CVec> targets;
    CVec psi0;
    ActionMap actions;

    int n_sites() const { return model.n_sites; }
    double energy_density(const CVec& psi) const { return energy(psi, cost) / model.n_sites; }
    double energy_ratio(const CVec& psi) const { return energy(psi, cost) / e_gs; }
    const Operator& action(const std::string& label) const;
};

// H = H1 + H2 for the chains, H1 + h H2 for lmg.
TermList model_hamiltonian(const ModelSpec& model);

SectorBasis default_basis(const ModelSpec& model, bool full = false);

// Reference initial state of each model (see README for the choice per model).
CVec initial_state(const ModelSpec& model, const SectorBasis& basis);

ControlProblem make_problem(const ModelSpec& model, const std::vector<std::string>& labels, bool full = false);

}  // namespace cdqaoa
