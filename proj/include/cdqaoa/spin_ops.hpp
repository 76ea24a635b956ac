#pragma once

#include "cdqaoa/basis.hpp"
#include "cdqaoa/types.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cdqaoa {

enum class ModelKind { IsingHalf, IsingOne, HeisenbergOne, Lmg };

std::string model_name(ModelKind kind);
ModelKind parse_model(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::IsingHalf;
    int n_sites = 2;
    std::map<std::string, double> couplings;

    Spin spin() const;
    double coupling(const std::string& key) const;

    // Fills in the default couplings for the model and overrides any given ones.
    static ModelSpec make(ModelKind kind, int n_sites,
                          const std::map<std::string, double>& overrides = {});
};

// Closed forms used by the LMG total-spin basis, where per-site terms are not available.
enum class Collective { SxSquared, SzPlusHalfN, Sx, Sy, Sz, XYhat, ZYhat };

struct OperatorTerm {
    std::string opstring;  // letters from {x, y, z, +, -, I}; leftmost acts last
    std::vector<int> sites;
    cplx coeff{1.0, 0.0};
};

struct TermList {
    std::string name;
    Spin spin = Spin::Half;
    int n_sites = 0;
    std::vector<OperatorTerm> terms;
    std::vector<std::pair<Collective, double>> collective;

    TermList& operator+=(const TermList& other);
    TermList scaled(double factor) const;
};

TermList operator+(TermList a, const TermList& b);

// Single-site matrix in the digit basis (row/column 0 is spin up).
CMat local_operator(char label, Spin spin);

TermList catalog(std::string_view name, const ModelSpec& model);
std::vector<std::string> catalog_labels();
bool is_gauge_label(std::string_view name);

// Orthogonalization constants of X|Y-XY and Y|Z-YZ for spin one.
std::pair<double, double> orthogonalization_constants();

SparseMat build_matrix(const TermList& terms, const SectorBasis& basis);

struct Eigenpairs {
    RVec values;
    std::vector<CVec> vectors;
    int manifold = 1;  // number of states within the degeneracy window of the lowest level
    bool degenerate() const { return manifold > 1; }
};

Eigenpairs ground_state(const TermList& terms, const SectorBasis& basis, int k = 1);

}  // namespace cdqaoa
