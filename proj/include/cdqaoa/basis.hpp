#pragma once

#include "cdqaoa/types.hpp"

#include <cstdint>
#include <vector>

namespace cdqaoa {

enum class Spin { Half, One };

inline int local_dim(Spin s) { return s == Spin::Half ? 2 : 3; }
inline double spin_value(Spin s) { return s == Spin::Half ? 0.5 : 1.0; }

enum class BasisKind { Full, TranslationParity, LmgTotalSpin };

struct SymmetrySpec {
    bool translation = true;
    bool reflection = true;
    bool empty() const { return !translation && !reflection; }
};

// Product configurations are base-d integers, site 0 least significant.
// Local digit s corresponds to magnetization m = S - s, so digit 0 is spin up.
struct SectorBasis {
    BasisKind kind = BasisKind::Full;
    int n_sites = 0;
    Spin spin = Spin::Half;
    SymmetrySpec symmetry{false, false};
    std::vector<std::uint64_t> reps;   // smallest configuration of each orbit
    std::vector<double> norms;         // sqrt(orbit size)
    std::vector<std::int32_t> rep_of;  // configuration -> orbit index (sector bases only)
    std::uint64_t full_dim = 0;

    Eigen::Index dim() const;
    // Orbit index of an arbitrary configuration; -1 when it lies outside the basis.
    Eigen::Index index_of(std::uint64_t config) const;
    bool is_chain() const { return kind != BasisKind::LmgTotalSpin; }
};

std::uint64_t ipow(std::uint64_t base, int exp);
int digit(std::uint64_t config, int site, int d);
std::uint64_t encode(const std::vector<int>& digits, Spin spin);

}  // namespace cdqaoa
