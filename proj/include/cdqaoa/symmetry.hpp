#pragma once

#include "cdqaoa/basis.hpp"
#include "cdqaoa/spin_ops.hpp"

#include <string>
#include <vector>

namespace cdqaoa {

SectorBasis full_basis(int n_sites, Spin spin);
SectorBasis build_sector(const ModelSpec& model, const SymmetrySpec& spec);
SectorBasis lmg_basis(int n_sites);

// Images of a configuration under the symmetry group (translations, then their mirrors).
std::vector<std::uint64_t> orbit(std::uint64_t config, int n_sites, Spin spin, const SymmetrySpec& spec);

CVec lift(const CVec& state, const SectorBasis& basis);
CVec project(const CVec& full_state, const SectorBasis& basis);

// Product state given per-site digits, projected into the basis and renormalized.
CVec product_state(const std::vector<int>& digits, const SectorBasis& basis);

// Symmetry completion of imaginary-valued candidate terms built from real elementary
// operators in {x, z, +, -}. Two-body candidates live on nearest neighbours, plus the
// same site when allow_onsite is set.
std::vector<TermList> generate_gauge_terms(int order, const std::string& elementary,
                                           const SymmetrySpec& spec, const ModelSpec& model,
                                           bool allow_onsite);

// True when h1 = +-(|h1|/|h2|) h2 on a three-site dense representation.
bool equivalent(const TermList& h1, const TermList& h2);

}  // namespace cdqaoa
