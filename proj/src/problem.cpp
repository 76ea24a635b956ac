#include "cdqaoa/problem.hpp"

#include "cdqaoa/symmetry.hpp"

namespace cdqaoa {

const Operator& ControlProblem::action(const std::string& label) const
{
    auto it = actions.find(label);
    if (it == actions.end()) throw InputError("generator '" + label + "' is not part of the action set");
    return it->second;
}

TermList model_hamiltonian(const ModelSpec& model)
{
    TermList h1 = catalog("H1", model);
    TermList h2 = catalog("H2", model);
    if (model.kind == ModelKind::Lmg) h2 = h2.scaled(model.coupling("h"));
    TermList h = h1 + h2;
    h.name = "H";
    return h;
}

SectorBasis default_basis(const ModelSpec& model, bool full)
{
    if (model.kind == ModelKind::Lmg) return lmg_basis(model.n_sites);
    if (full) return full_basis(model.n_sites, model.spin());
    return build_sector(model, SymmetrySpec{});
}

CVec initial_state(const ModelSpec& model, const SectorBasis& basis)
{
    const int N = model.n_sites;
    std::vector<int> digits(N, 0);
    switch (model.kind) {
    case ModelKind::IsingHalf: break;                              // all up
    case ModelKind::IsingOne: digits.assign(N, 2); break;          // all down, ground state of h_z S^z
    case ModelKind::HeisenbergOne:
        for (int i = 0; i < N; ++i) digits[i] = (i % 2 == 0) ? 0 : 2;  // up-down-up-down
        break;
    case ModelKind::Lmg: digits.assign(N, 1); break;                // n_t = 0
    }
    return product_state(digits, basis);
}

ControlProblem make_problem(const ModelSpec& model, const std::vector<std::string>& labels, bool full)
{
    ControlProblem p;
    p.model = model;
    p.basis = std::make_shared<const SectorBasis>(default_basis(model, full));
    SparseMat h = build_matrix(model_hamiltonian(model), *p.basis);
    EigenOptions eo;
    eo.k = 1;
    const Eigenpairs gs = lowest_eigenpairs(h, eo);
    p.e_gs = gs.values[0];
    for (int i = 0; i < gs.manifold; ++i) p.targets.push_back(gs.vectors[i]);
    p.cost = Operator(std::move(h), Operator::Mode::Krylov);
    p.psi0 = initial_state(model, *p.basis);
    for (const auto& label : labels) {
        if (p.actions.count(label)) continue;
        p.actions.emplace(label, Operator(build_matrix(catalog(label, model), *p.basis)));
    }
    return p;
}

}  // namespace cdqaoa
