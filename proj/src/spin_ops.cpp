#include "cdqaoa/spin_ops.hpp"

#include "cdqaoa/krylov.hpp"
#include "cdqaoa/symmetry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

namespace cdqaoa {

std::uint64_t ipow(std::uint64_t base, int exp)
{
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

int digit(std::uint64_t config, int site, int d)
{
    for (int i = 0; i < site; ++i) config /= d;
    return static_cast<int>(config % d);
}

std::uint64_t encode(const std::vector<int>& digits, Spin spin)
{
    const int d = local_dim(spin);
    std::uint64_t c = 0;
    for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
        if (digits[i] < 0 || digits[i] >= d) throw std::invalid_argument("encode: digit out of range");
        c = c * d + digits[i];
    }
    return c;
}

Eigen::Index SectorBasis::dim() const
{
    if (kind == BasisKind::LmgTotalSpin) return n_sites + 1;
    if (kind == BasisKind::Full) return static_cast<Eigen::Index>(full_dim);
    return static_cast<Eigen::Index>(reps.size());
}

Eigen::Index SectorBasis::index_of(std::uint64_t config) const
{
    if (config >= full_dim) return -1;
    if (kind == BasisKind::Full) return static_cast<Eigen::Index>(config);
    return rep_of[config];
}

std::string model_name(ModelKind kind)
{
    switch (kind) {
    case ModelKind::IsingHalf: return "ising_half";
    case ModelKind::IsingOne: return "ising_one";
    case ModelKind::HeisenbergOne: return "heisenberg_one";
    case ModelKind::Lmg: return "lmg";
    }
    return "?";
}

ModelKind parse_model(std::string_view name)
{
    if (name == "ising_half") return ModelKind::IsingHalf;
    if (name == "ising_one") return ModelKind::IsingOne;
    if (name == "heisenberg_one") return ModelKind::HeisenbergOne;
    if (name == "lmg") return ModelKind::Lmg;
    throw InputError("unknown model '" + std::string(name) + "'");
}

Spin ModelSpec::spin() const
{
    return (kind == ModelKind::IsingOne || kind == ModelKind::HeisenbergOne) ? Spin::One : Spin::Half;
}

double ModelSpec::coupling(const std::string& key) const
{
    auto it = couplings.find(key);
    if (it == couplings.end()) throw InputError("model " + model_name(kind) + " has no coupling '" + key + "'");
    return it->second;
}

ModelSpec ModelSpec::make(ModelKind kind, int n_sites, const std::map<std::string, double>& overrides)
{
    if (n_sites < 2) throw InputError("model needs at least two sites");
    ModelSpec m;
    m.kind = kind;
    m.n_sites = n_sites;
    switch (kind) {
    case ModelKind::IsingHalf:
    case ModelKind::IsingOne:
        m.couplings = {{"J", 1.0}, {"h_z", 0.809}, {"h_x", 0.9045}};
        break;
    case ModelKind::HeisenbergOne:
        m.couplings = {{"J", 1.0}, {"Delta", 0.5}};
        break;
    case ModelKind::Lmg:
        m.couplings = {{"J", 1.0}, {"h", 0.5}};
        break;
    }
    for (const auto& [k, v] : overrides) {
        if (!m.couplings.count(k)) throw InputError("model " + model_name(kind) + " has no coupling '" + k + "'");
        m.couplings[k] = v;
    }
    return m;
}

TermList& TermList::operator+=(const TermList& other)
{
    if (n_sites == 0 && terms.empty() && collective.empty()) {
        spin = other.spin;
        n_sites = other.n_sites;
    } else if (other.n_sites != n_sites || other.spin != spin) {
        throw std::invalid_argument("TermList: adding lists of different systems");
    }
    terms.insert(terms.end(), other.terms.begin(), other.terms.end());
    collective.insert(collective.end(), other.collective.begin(), other.collective.end());
    name = name.empty() ? other.name : name + "+" + other.name;
    return *this;
}

TermList TermList::scaled(double factor) const
{
    TermList r = *this;
    for (auto& t : r.terms) t.coeff *= factor;
    for (auto& c : r.collective) c.second *= factor;
    return r;
}

TermList operator+(TermList a, const TermList& b)
{
    a += b;
    return a;
}

CMat local_operator(char label, Spin spin)
{
    const int d = local_dim(spin);
    const double S = spin_value(spin);
    CMat sp = CMat::Zero(d, d), sm = CMat::Zero(d, d), sz = CMat::Zero(d, d);
    for (int s = 0; s < d; ++s) {
        const double m = S - s;
        sz(s, s) = m;
        if (s >= 1) sp(s - 1, s) = std::sqrt(S * (S + 1) - m * (m + 1));
        if (s + 1 < d) sm(s + 1, s) = std::sqrt(S * (S + 1) - m * (m - 1));
    }
    switch (label) {
    case 'x': return 0.5 * (sp + sm);
    case 'y': return (sp - sm) / (2.0 * I_unit);
    case 'z': return sz;
    case '+': return sp;
    case '-': return sm;
    case 'I': return CMat::Identity(d, d);
    default: throw InputError(std::string("unknown local operator '") + label + "'");
    }
}

namespace {

TermList empty_list(std::string name, const ModelSpec& m)
{
    TermList t;
    t.name = std::move(name);
    t.spin = m.spin();
    t.n_sites = m.n_sites;
    return t;
}

void add_single(TermList& t, char op, double c)
{
    for (int i = 0; i < t.n_sites; ++i) t.terms.push_back({std::string(1, op), {i}, c});
}

void add_bond(TermList& t, char a, char b, double c)
{
    for (int i = 0; i < t.n_sites; ++i)
        t.terms.push_back({std::string{a, b}, {i, (i + 1) % t.n_sites}, c});
}

void add_onsite(TermList& t, char a, char b, double c)
{
    for (int i = 0; i < t.n_sites; ++i) t.terms.push_back({std::string{a, b}, {i, i}, c});
}

// All-to-all pairs are only spelled out where a full product basis is affordable.
constexpr int kMaxExplicitLmg = 14;

void add_all_pairs(TermList& t, char a, char b, double c)
{
    if (t.n_sites > kMaxExplicitLmg) return;
    for (int i = 0; i < t.n_sites; ++i)
        for (int j = 0; j < t.n_sites; ++j) t.terms.push_back({std::string{a, b}, {i, j}, c});
}

bool needs_spin_one(std::string_view n)
{
    return n == "XY" || n == "YZ" || n == "X|Y-XY" || n == "Y|Z-YZ";
}

TermList lmg_catalog(std::string_view name, const ModelSpec& m)
{
    const int N = m.n_sites;
    const double invN = 1.0 / N;
    TermList t = empty_list(std::string(name), m);
    if (name == "H1") {
        const double J = m.coupling("J");
        add_all_pairs(t, 'x', 'x', -J * invN);
        t.collective.push_back({Collective::SxSquared, -J * invN});
    } else if (name == "H2") {
        add_single(t, 'z', 1.0);
        if (N <= kMaxExplicitLmg) add_single(t, 'I', 0.5);
        t.collective.push_back({Collective::SzPlusHalfN, 1.0});
    } else if (name == "X" || name == "Y" || name == "Z") {
        const char op = static_cast<char>(std::tolower(name[0]));
        if (N <= kMaxExplicitLmg) add_single(t, op, 1.0);
        t.collective.push_back({op == 'x' ? Collective::Sx : op == 'y' ? Collective::Sy : Collective::Sz, 1.0});
    } else if (name == "XYhat") {
        add_all_pairs(t, 'x', 'y', invN);
        add_all_pairs(t, 'y', 'x', invN);
        t.collective.push_back({Collective::XYhat, 1.0});
    } else if (name == "ZYhat") {
        add_all_pairs(t, 'z', 'y', invN);
        add_all_pairs(t, 'y', 'z', invN);
        if (N <= kMaxExplicitLmg) add_single(t, 'y', 1.0);  // the two I/2 shifts, summed over the partner index
        t.collective.push_back({Collective::ZYhat, 1.0});
    } else {
        throw InputError("label '" + std::string(name) + "' is not available for the lmg model");
    }
    return t;
}

TermList chain_catalog(std::string_view name, const ModelSpec& m)
{
    if (name == "XYhat" || name == "ZYhat")
        throw InputError("label '" + std::string(name) + "' requires the lmg model");
    if (needs_spin_one(name) && m.spin() != Spin::One)
        throw InputError("label '" + std::string(name) + "' requires spin one");

    TermList t = empty_list(std::string(name), m);
    if (name == "X") add_single(t, 'x', 1.0);
    else if (name == "Y") add_single(t, 'y', 1.0);
    else if (name == "Z") add_single(t, 'z', 1.0);
    else if (name == "Z|Z") add_bond(t, 'z', 'z', 1.0);
    else if (name == "X|X") add_bond(t, 'x', 'x', 1.0);
    else if (name == "Y|Y") add_bond(t, 'y', 'y', 1.0);
    else if (name == "Z|Z+Z") {
        add_bond(t, 'z', 'z', m.coupling("J"));
        add_single(t, 'z', m.coupling("h_z"));
    } else if (name == "Z|Z+X") {
        add_bond(t, 'z', 'z', m.coupling("J"));
        add_single(t, 'x', m.coupling("h_x"));
    } else if (name == "X|X+Y|Y") {
        const double J = m.couplings.count("J") ? m.coupling("J") : 1.0;
        add_bond(t, 'x', 'x', J);
        add_bond(t, 'y', 'y', J);
    } else if (name == "XY") {
        add_onsite(t, 'x', 'y', 1.0);
        add_onsite(t, 'y', 'x', 1.0);
    } else if (name == "YZ") {
        add_onsite(t, 'y', 'z', 1.0);
        add_onsite(t, 'z', 'y', 1.0);
    } else if (name == "X|Y") {
        add_bond(t, 'x', 'y', 1.0);
        add_bond(t, 'y', 'x', 1.0);
    } else if (name == "Y|Z") {
        add_bond(t, 'y', 'z', 1.0);
        add_bond(t, 'z', 'y', 1.0);
    } else if (name == "X|Y-XY") {
        const double a = orthogonalization_constants().first;
        t = chain_catalog("X|Y", m) + chain_catalog("XY", m).scaled(-a);
        t.name = std::string(name);
    } else if (name == "Y|Z-YZ") {
        const double b = orthogonalization_constants().second;
        t = chain_catalog("Y|Z", m) + chain_catalog("YZ", m).scaled(-b);
        t.name = std::string(name);
    } else {
        throw InputError("unknown control term '" + std::string(name) + "'");
    }
    return t;
}

// Model Hamiltonian parts, H = H1 + H2 (lmg: H = H1 + h H2).
std::pair<std::string, std::string> model_parts(ModelKind kind)
{
    switch (kind) {
    case ModelKind::IsingHalf: return {"Z|Z+Z", "X"};
    case ModelKind::IsingOne: return {"Z|Z+X", "Z"};
    case ModelKind::HeisenbergOne: return {"X|X+Y|Y", "Z|Z"};
    case ModelKind::Lmg: return {"H1", "H2"};
    }
    return {};
}

}  // namespace

TermList catalog(std::string_view name, const ModelSpec& model)
{
    if (model.kind == ModelKind::Lmg) return lmg_catalog(name, model);

    auto [h1, h2] = model_parts(model.kind);
    std::string_view resolved = name;
    if (name == "H1") resolved = h1;
    if (name == "H2") resolved = h2;

    // The model's field/anisotropy part carries its coupling.
    if (resolved == h2) {
        TermList t = chain_catalog(resolved, model);
        const char* key = model.kind == ModelKind::IsingHalf ? "h_x"
                          : model.kind == ModelKind::IsingOne ? "h_z"
                                                              : "Delta";
        t = t.scaled(model.coupling(key));
        t.name = std::string(resolved);
        return t;
    }
    TermList t = chain_catalog(resolved, model);
    t.name = std::string(resolved);
    return t;
}

std::vector<std::string> catalog_labels()
{
    return {"X", "Y", "Z", "Z|Z", "X|X", "Z|Z+Z", "Z|Z+X", "X|X+Y|Y", "XY", "YZ",
            "X|Y", "Y|Z", "X|Y-XY", "Y|Z-YZ", "XYhat", "ZYhat", "H1", "H2"};
}

bool is_gauge_label(std::string_view n)
{
    return n == "Y" || n == "XY" || n == "YZ" || n == "X|Y" || n == "Y|Z" || n == "X|Y-XY" ||
           n == "Y|Z-YZ" || n == "XYhat" || n == "ZYhat";
}

std::pair<double, double> orthogonalization_constants()
{
    static std::once_flag once;
    static std::pair<double, double> ab;
    std::call_once(once, [] {
        const ModelSpec m = ModelSpec::make(ModelKind::IsingOne, 3);
        const SectorBasis b = full_basis(3, Spin::One);
        auto dense = [&](const char* n) { return CMat(build_matrix(chain_catalog(n, m), b)); };
        const CMat xy = dense("XY"), yz = dense("YZ");
        const CMat xy_bond = dense("X|Y"), yz_bond = dense("Y|Z");
        ab.first = ((xy.adjoint() * xy_bond).trace() / (xy.adjoint() * xy).trace()).real();
        ab.second = ((yz.adjoint() * yz_bond).trace() / (yz.adjoint() * yz).trace()).real();
    });
    return ab;
}

namespace {

struct LocalTable {
    // column s -> nonzero (row, value) pairs
    std::vector<std::vector<std::pair<int, cplx>>> col;
};

const LocalTable& local_table(char label, Spin spin)
{
    static std::mutex mu;
    static std::map<std::pair<char, Spin>, LocalTable> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(label, spin);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const CMat m = local_operator(label, spin);
    LocalTable t;
    t.col.resize(m.cols());
    for (Eigen::Index s = 0; s < m.cols(); ++s)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (std::abs(m(r, s)) > 0.0) t.col[s].push_back({static_cast<int>(r), m(r, s)});
    return cache.emplace(key, std::move(t)).first->second;
}

SparseMat lmg_collective_matrix(const TermList& t, int N)
{
    const Eigen::Index dim = N + 1;
    std::vector<Eigen::Triplet<cplx>> trip;
    const double S = 0.5 * N;
    // |n> has n spins up, m = n - S. S+|n> = sqrt((n+1)(N-n)) |n+1>.
    auto up = [&](int n) { return std::sqrt(static_cast<double>(n + 1) * (N - n)); };
    for (const auto& [kind, c] : t.collective) {
        for (int n = 0; n <= N; ++n) {
            const double m = n - S;
            switch (kind) {
            case Collective::Sz: trip.emplace_back(n, n, c * m); break;
            case Collective::SzPlusHalfN: trip.emplace_back(n, n, c * n); break;
            case Collective::Sx:
                if (n < N) {
                    trip.emplace_back(n + 1, n, 0.5 * c * up(n));
                    trip.emplace_back(n, n + 1, 0.5 * c * up(n));
                }
                break;
            case Collective::Sy:
                if (n < N) {
                    trip.emplace_back(n, n + 1, cplx(0, 0.5 * c * up(n)));
                    trip.emplace_back(n + 1, n, cplx(0, -0.5 * c * up(n)));
                }
                break;
            case Collective::SxSquared: {
                // Sx^2 = (S+^2 + S-^2 + S+S- + S-S+)/4
                const double diag = S * (S + 1) - m * m;
                trip.emplace_back(n, n, c * 0.5 * diag);
                if (n + 2 <= N) {
                    const double v = 0.25 * c * up(n) * up(n + 1);
                    trip.emplace_back(n + 2, n, v);
                    trip.emplace_back(n, n + 2, v);
                }
                break;
            }
            case Collective::XYhat:
                // (1/N){Sx, Sy} = (1/N)(S+^2 - S-^2)/(2i)
                if (n + 2 <= N) {
                    const double v = c * up(n) * up(n + 1) / (2.0 * N);
                    trip.emplace_back(n, n + 2, cplx(0, v));
                    trip.emplace_back(n + 2, n, cplx(0, -v));
                }
                break;
            case Collective::ZYhat:
                // (1/N){Sz + N/2, Sy}
                if (n < N) {
                    const double v = c * (2 * n + 1) * up(n) / (2.0 * N);
                    trip.emplace_back(n, n + 1, cplx(0, v));
                    trip.emplace_back(n + 1, n, cplx(0, -v));
                }
                break;
            }
        }
    }
    SparseMat mat(dim, dim);
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
}

}  // namespace

SparseMat build_matrix(const TermList& t, const SectorBasis& basis)
{
    if (basis.kind == BasisKind::LmgTotalSpin) {
        if (!t.terms.empty() && t.collective.empty())
            throw std::invalid_argument("build_matrix: term list '" + t.name + "' has no total-spin form");
        if (t.n_sites != 0 && t.n_sites != basis.n_sites)
            throw std::invalid_argument("build_matrix: site count mismatch");
        return lmg_collective_matrix(t, basis.n_sites);
    }
    if (!t.terms.empty() || !t.collective.empty()) {
        if (t.n_sites != basis.n_sites || t.spin != basis.spin)
            throw std::invalid_argument("build_matrix: basis does not match term list '" + t.name + "'");
        if (t.terms.empty())
            throw std::invalid_argument("build_matrix: term list '" + t.name + "' is only defined collectively");
    }

    const int N = basis.n_sites;
    const int d = local_dim(basis.spin);
    std::vector<std::uint64_t> pw(N + 1);
    for (int i = 0; i <= N; ++i) pw[i] = ipow(d, i);

    struct Prepared {
        std::vector<const LocalTable*> ops;
        std::vector<int> sites;
        cplx coeff;
    };
    std::vector<Prepared> prepared;
    for (const auto& term : t.terms) {
        if (term.opstring.size() != term.sites.size())
            throw std::invalid_argument("build_matrix: opstring/site length mismatch");
        Prepared p;
        p.coeff = term.coeff;
        for (std::size_t k = 0; k < term.sites.size(); ++k) {
            p.ops.push_back(&local_table(term.opstring[k], basis.spin));
            p.sites.push_back(((term.sites[k] % N) + N) % N);
        }
        prepared.push_back(std::move(p));
    }

    const Eigen::Index dim = basis.dim();
    const bool full = basis.kind == BasisKind::Full;
    std::vector<Eigen::Triplet<cplx>> trip;
    std::vector<std::pair<std::uint64_t, cplx>> cur, next;
    for (Eigen::Index col = 0; col < dim; ++col) {
        const std::uint64_t c0 = full ? static_cast<std::uint64_t>(col) : basis.reps[col];
        for (const auto& p : prepared) {
            cur.assign(1, {c0, p.coeff});
            // rightmost factor acts first
            for (int k = static_cast<int>(p.ops.size()) - 1; k >= 0 && !cur.empty(); --k) {
                next.clear();
                const int site = p.sites[k];
                for (const auto& [c, amp] : cur) {
                    const int s = static_cast<int>((c / pw[site]) % d);
                    for (const auto& [r, v] : p.ops[k]->col[s])
                        next.push_back({c + static_cast<std::uint64_t>(r) * pw[site] - static_cast<std::uint64_t>(s) * pw[site], amp * v});
                }
                std::swap(cur, next);
            }
            for (const auto& [c, amp] : cur) {
                if (full) {
                    trip.emplace_back(static_cast<Eigen::Index>(c), col, amp);
                } else {
                    const Eigen::Index row = basis.index_of(c);
                    if (row < 0) continue;
                    trip.emplace_back(row, col, amp * (basis.norms[col] / basis.norms[row]));
                }
            }
        }
    }
    SparseMat mat(dim, dim);
    mat.setFromTriplets(trip.begin(), trip.end());
    mat.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) > 1e-14; });
    mat.makeCompressed();
    return mat;
}

Eigenpairs ground_state(const TermList& terms, const SectorBasis& basis, int k)
{
    EigenOptions opt;
    opt.k = k;
    return lowest_eigenpairs(build_matrix(terms, basis), opt);
}

}  // namespace cdqaoa
