#include "cdqaoa/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace cdqaoa {

SectorBasis full_basis(int n_sites, Spin spin)
{
    if (n_sites < 1) throw std::invalid_argument("full_basis: need at least one site");
    SectorBasis b;
    b.kind = BasisKind::Full;
    b.n_sites = n_sites;
    b.spin = spin;
    b.full_dim = ipow(local_dim(spin), n_sites);
    return b;
}

SectorBasis lmg_basis(int n_sites)
{
    if (n_sites < 2) throw std::invalid_argument("lmg_basis: need at least two spins");
    SectorBasis b;
    b.kind = BasisKind::LmgTotalSpin;
    b.n_sites = n_sites;
    b.spin = Spin::Half;
    b.full_dim = n_sites <= 62 ? (std::uint64_t{1} << n_sites) : 0;
    return b;
}

namespace {

std::uint64_t translate(std::uint64_t c, std::uint64_t d, std::uint64_t top)
{
    // site i -> i+1 with wrap; top = d^(N-1)
    return (c % top) * d + c / top;
}

std::uint64_t reflect(std::uint64_t c, int n, std::uint64_t d)
{
    std::uint64_t r = 0;
    for (int i = 0; i < n; ++i) {
        r = r * d + c % d;
        c /= d;
    }
    return r;
}

}  // namespace

std::vector<std::uint64_t> orbit(std::uint64_t config, int n_sites, Spin spin, const SymmetrySpec& spec)
{
    const std::uint64_t d = local_dim(spin);
    const std::uint64_t top = ipow(d, n_sites - 1);
    std::vector<std::uint64_t> out;
    const int shifts = spec.translation ? n_sites : 1;
    std::uint64_t c = config;
    for (int s = 0; s < shifts; ++s) {
        out.push_back(c);
        c = translate(c, d, top);
    }
    if (spec.reflection) {
        const std::size_t base = out.size();
        for (std::size_t i = 0; i < base; ++i) out.push_back(reflect(out[i], n_sites, d));
    }
    return out;
}

SectorBasis build_sector(const ModelSpec& model, const SymmetrySpec& spec)
{
    if (model.kind == ModelKind::Lmg) throw std::invalid_argument("build_sector: lmg uses lmg_basis");
    if (spec.empty()) throw std::invalid_argument("build_sector: empty symmetry specification");
    SectorBasis b;
    b.kind = BasisKind::TranslationParity;
    b.n_sites = model.n_sites;
    b.spin = model.spin();
    b.symmetry = spec;
    b.full_dim = ipow(local_dim(b.spin), b.n_sites);
    b.rep_of.assign(b.full_dim, -1);
    std::vector<std::uint64_t> images;
    for (std::uint64_t c = 0; c < b.full_dim; ++c) {
        if (b.rep_of[c] >= 0) continue;
        // ascending scan: the first unseen member is the smallest of its orbit
        images = orbit(c, b.n_sites, b.spin, spec);
        std::sort(images.begin(), images.end());
        images.erase(std::unique(images.begin(), images.end()), images.end());
        const auto idx = static_cast<std::int32_t>(b.reps.size());
        for (auto x : images) b.rep_of[x] = idx;
        b.reps.push_back(c);
        b.norms.push_back(std::sqrt(static_cast<double>(images.size())));
    }
    return b;
}

namespace {

double log_binomial(int n, int k)
{
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

int popcount_up(std::uint64_t c, int n)
{
    // digit 0 is spin up
    int up = 0;
    for (int i = 0; i < n; ++i) up += ((c >> i) & 1u) == 0;
    return up;
}

}  // namespace

CVec lift(const CVec& state, const SectorBasis& basis)
{
    if (state.size() != basis.dim()) throw std::invalid_argument("lift: dimension mismatch");
    if (basis.kind == BasisKind::Full) return state;
    if (basis.kind == BasisKind::LmgTotalSpin) {
        if (basis.n_sites > 24) throw std::invalid_argument("lift: lmg system too large for a product basis");
        CVec out(static_cast<Eigen::Index>(basis.full_dim));
        for (std::uint64_t c = 0; c < basis.full_dim; ++c) {
            const int n = popcount_up(c, basis.n_sites);
            out[static_cast<Eigen::Index>(c)] = state[n] * std::exp(-0.5 * log_binomial(basis.n_sites, n));
        }
        return out;
    }
    CVec out(static_cast<Eigen::Index>(basis.full_dim));
    for (std::uint64_t c = 0; c < basis.full_dim; ++c) {
        const auto i = basis.rep_of[c];
        out[static_cast<Eigen::Index>(c)] = state[i] / basis.norms[i];
    }
    return out;
}

CVec project(const CVec& full_state, const SectorBasis& basis)
{
    if (basis.kind == BasisKind::Full) return full_state;
    if (static_cast<std::uint64_t>(full_state.size()) != basis.full_dim)
        throw std::invalid_argument("project: dimension mismatch");
    CVec out = CVec::Zero(basis.dim());
    if (basis.kind == BasisKind::LmgTotalSpin) {
        for (std::uint64_t c = 0; c < basis.full_dim; ++c) {
            const int n = popcount_up(c, basis.n_sites);
            out[n] += full_state[static_cast<Eigen::Index>(c)] * std::exp(-0.5 * log_binomial(basis.n_sites, n));
        }
        return out;
    }
    for (std::uint64_t c = 0; c < basis.full_dim; ++c) {
        const auto i = basis.rep_of[c];
        out[i] += full_state[static_cast<Eigen::Index>(c)] / basis.norms[i];
    }
    return out;
}

CVec product_state(const std::vector<int>& digits, const SectorBasis& basis)
{
    if (static_cast<int>(digits.size()) != basis.n_sites)
        throw std::invalid_argument("product_state: wrong number of sites");
    CVec out = CVec::Zero(basis.dim());
    if (basis.kind == BasisKind::LmgTotalSpin) {
        int up = 0;
        for (int s : digits) {
            if (s < 0 || s > 1) throw std::invalid_argument("product_state: bad digit");
            up += s == 0;
        }
        out[up] = 1.0;
        return out;
    }
    const Eigen::Index idx = basis.index_of(encode(digits, basis.spin));
    if (idx < 0) throw std::invalid_argument("product_state: configuration outside the basis");
    out[idx] = 1.0;
    return out;
}

namespace {

struct Factor {
    int site;
    char op;
    bool operator<(const Factor& o) const { return site < o.site; }
    bool operator==(const Factor& o) const { return site == o.site && op == o.op; }
};

using Motif = std::vector<Factor>;  // ordered product, leftmost acts last

Motif canonical(Motif m)
{
    std::stable_sort(m.begin(), m.end());
    return m;
}

std::string key_of(const Motif& m)
{
    std::string k;
    for (const auto& f : m) k += std::to_string(f.site) + f.op + ';';
    return k;
}

std::vector<Motif> complete(const Motif& seed, int n, const SymmetrySpec& spec)
{
    std::vector<Motif> list{canonical(seed)};
    std::set<std::string> seen{key_of(list.front())};
    bool changed = true;
    while (changed) {
        changed = false;
        const std::size_t count = list.size();
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<Motif> images;
            if (spec.translation) {
                Motif t = list[i];
                for (auto& f : t) f.site = (f.site + 1) % n;
                images.push_back(canonical(t));
            }
            if (spec.reflection) {
                Motif r = list[i];
                for (auto& f : r) f.site = n - 1 - f.site;
                images.push_back(canonical(r));
            }
            for (auto& m : images) {
                if (seen.insert(key_of(m)).second) {
                    list.push_back(std::move(m));
                    changed = true;
                }
            }
        }
    }
    return list;
}

char dagger(char op)
{
    if (op == '+') return '-';
    if (op == '-') return '+';
    return op;
}

// i * sum(motifs) + h.c.
TermList to_termlist(const std::vector<Motif>& motifs, int n, Spin spin, const std::string& name)
{
    TermList t;
    t.name = name;
    t.n_sites = n;
    t.spin = spin;
    for (const auto& m : motifs) {
        OperatorTerm a{"", {}, I_unit}, h{"", {}, -I_unit};
        for (const auto& f : m) {
            a.opstring += f.op;
            a.sites.push_back(f.site);
        }
        for (auto it = m.rbegin(); it != m.rend(); ++it) {
            h.opstring += dagger(it->op);
            h.sites.push_back(it->site);
        }
        t.terms.push_back(std::move(a));
        t.terms.push_back(std::move(h));
    }
    return t;
}

CMat dense(const TermList& t)
{
    return CMat(build_matrix(t, full_basis(t.n_sites, t.spin)));
}

}  // namespace

std::vector<TermList> generate_gauge_terms(int order, const std::string& elementary,
                                           const SymmetrySpec& spec, const ModelSpec& model,
                                           bool allow_onsite)
{
    if (order != 1 && order != 2) throw std::invalid_argument("generate_gauge_terms: order must be 1 or 2");
    if (model.kind == ModelKind::Lmg) throw std::invalid_argument("generate_gauge_terms: chain models only");
    for (char c : elementary)
        if (c != 'x' && c != 'z' && c != '+' && c != '-')
            throw std::invalid_argument(std::string("generate_gauge_terms: elementary operator '") + c +
                                        "' is not real-valued");

    std::vector<std::vector<char>> ops;
    if (order == 1) {
        for (char a : elementary) ops.push_back({a});
    } else {
        for (char a : elementary)
            for (char b : elementary) ops.push_back({a, b});
    }
    std::vector<std::vector<int>> site_sets;
    if (order == 1) site_sets = {{0}};
    else {
        site_sets = {{0, 1}};
        if (allow_onsite) site_sets.push_back({0, 0});
    }

    constexpr int n_ref = 3;
    const Spin spin = model.spin();
    std::vector<CMat> kept_dense;
    std::vector<TermList> out;
    for (const auto& sites : site_sets) {
        for (const auto& op : ops) {
            Motif seed;
            std::string label;
            for (std::size_t k = 0; k < op.size(); ++k) {
                seed.push_back({sites[k], op[k]});
                label += op[k];
            }
            std::string name = "i(" + label + ")@";
            for (std::size_t k = 0; k < sites.size(); ++k) name += (k ? "," : "") + std::to_string(sites[k]);
            name += "+h.c.";

            const CMat g = dense(to_termlist(complete(seed, n_ref, spec), n_ref, spin, name));
            const double norm = g.norm();
            if (norm < 1e-10) continue;
            bool duplicate = false;
            for (const auto& k : kept_dense) {
                const double r = norm / k.norm();
                if ((g - r * k).norm() <= 1e-10 * norm || (g + r * k).norm() <= 1e-10 * norm) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            kept_dense.push_back(g);
            out.push_back(to_termlist(complete(seed, model.n_sites, spec), model.n_sites, spin, name));
        }
    }
    return out;
}

bool equivalent(const TermList& h1, const TermList& h2)
{
    if (h1.n_sites != h2.n_sites || h1.spin != h2.spin)
        throw std::invalid_argument("equivalent: term lists act on different systems");
    const CMat a = dense(h1), b = dense(h2);
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-14 || nb < 1e-14) throw std::invalid_argument("equivalent: zero-norm operand");
    const double r = na / nb;
    return (a - r * b).norm() <= 1e-10 * na || (a + r * b).norm() <= 1e-10 * na;
}

}  // namespace cdqaoa
