#include "cdqaoa/rl_policy.hpp"

#include "cdqaoa/worker_pool.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cdqaoa {

using json = nlohmann::json;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

}  // namespace

PolicyNet::PolicyNet(int actions, int depth, std::vector<int> hidden, std::uint64_t seed)
    : actions_(actions), depth_(depth), hidden_(std::move(hidden))
{
    if (actions < 2) throw InputError("policy needs at least two actions");
    if (depth < 1) throw InputError("policy depth must be positive");
    const int width = actions * depth;
    // degrees: input block j -> j+1, hidden units cycle through 1..q-1, output block j -> j+1
    const int hmax = std::max(1, depth - 1);
    std::vector<int> prev_deg(width);
    for (int i = 0; i < width; ++i) prev_deg[i] = i / actions + 1;

    Eigen::Index offset = 0;
    std::vector<int> sizes = hidden_;
    sizes.push_back(width);
    int in = width;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        const int out = sizes[l];
        const bool last = l + 1 == sizes.size();
        std::vector<int> deg(out);
        for (int u = 0; u < out; ++u) deg[u] = last ? u / actions + 1 : 1 + u % hmax;
        Layer layer{offset, in, out, Eigen::MatrixXd::Zero(out, in)};
        for (int u = 0; u < out; ++u)
            for (int v = 0; v < in; ++v)
                layer.mask(u, v) = (last ? deg[u] > prev_deg[v] : deg[u] >= prev_deg[v]) ? 1.0 : 0.0;
        layers_.push_back(std::move(layer));
        offset += static_cast<Eigen::Index>(out) * in + out;
        prev_deg = deg;
        in = out;
    }

    theta_ = RVec::Zero(offset);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const Layer& L = layers_[l];
        std::normal_distribution<double> g(0.0, std::sqrt(2.0 / L.in));
        for (int u = 0; u < L.out; ++u)
            for (int v = 0; v < L.in; ++v)
                theta_[L.offset + static_cast<Eigen::Index>(u) * L.in + v] = L.mask(u, v) * g(rng);
    }
    // output layer starts at zero: the initial policy is uniform over legal sequences
}

Eigen::Map<const RowMat> PolicyNet::weight(const Layer& l) const
{
    return Eigen::Map<const RowMat>(theta_.data() + l.offset, l.out, l.in);
}

Eigen::MatrixXd PolicyNet::encode(const std::vector<std::vector<int>>& seqs) const
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(actions_ * depth_, static_cast<Eigen::Index>(seqs.size()));
    for (std::size_t b = 0; b < seqs.size(); ++b)
        for (std::size_t j = 0; j < seqs[b].size() && static_cast<int>(j) < depth_; ++j) {
            const int a = seqs[b][j];
            if (a >= 0 && a < actions_) x(static_cast<Eigen::Index>(j) * actions_ + a, static_cast<Eigen::Index>(b)) = 1.0;
        }
    return x;
}

PolicyNet::Forward PolicyNet::forward(const Eigen::MatrixXd& x) const
{
    Forward f;
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& L = layers_[l];
        f.act.push_back(a);
        Eigen::MatrixXd z = weight(L).cwiseProduct(L.mask) * a;
        z.colwise() += theta_.segment(L.offset + static_cast<Eigen::Index>(L.out) * L.in, L.out);
        if (l + 1 < layers_.size()) a = z.cwiseMax(0.0);
        else f.logits = std::move(z);
    }
    return f;
}

RVec PolicyNet::logits(const std::vector<int>& history) const
{
    return forward(encode({history})).logits.col(0);
}

namespace {

// Softmax of one logit block with the previous action removed.
RVec masked_softmax(const Eigen::Ref<const RVec>& z, int previous)
{
    RVec p(z.size());
    double mx = neg_inf;
    for (Eigen::Index k = 0; k < z.size(); ++k)
        if (k != previous) mx = std::max(mx, z[k]);
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        p[k] = k == previous ? 0.0 : std::exp(z[k] - mx);
        s += p[k];
    }
    return p / s;
}

double categorical_entropy(const RVec& p)
{
    double s = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p[k] > 0.0) s -= p[k] * std::log(p[k]);
    return s;
}

}  // namespace

RVec PolicyNet::conditional(const std::vector<int>& history, int j) const
{
    if (j < 0 || j >= depth_) throw std::out_of_range("conditional: step out of range");
    const RVec z = logits(history);
    const int prev = j > 0 && static_cast<int>(history.size()) >= j ? history[j - 1] : -1;
    return masked_softmax(z.segment(static_cast<Eigen::Index>(j) * actions_, actions_), prev);
}

PolicyNet::Trajectory PolicyNet::sample(std::mt19937_64& rng) const
{
    Trajectory t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < depth_; ++j) {
        const RVec p = conditional(t.actions, j);
        const double r = u(rng);
        double c = 0.0;
        int pick = -1;
        for (int k = 0; k < actions_; ++k) {
            if (p[k] <= 0.0) continue;
            c += p[k];
            pick = k;
            if (r < c) break;
        }
        t.actions.push_back(pick);
        t.logprob += std::log(p[pick]);
    }
    return t;
}

std::vector<PolicyNet::Trajectory> PolicyNet::sample_batch(int M, std::mt19937_64& rng) const
{
    if (M < 1) throw InputError("sample_batch: batch size must be positive");
    std::vector<Trajectory> out;
    out.reserve(M);
    for (int i = 0; i < M; ++i) out.push_back(sample(rng));
    return out;
}

double PolicyNet::logprob(const std::vector<int>& actions) const
{
    if (static_cast<int>(actions.size()) != depth_) return neg_inf;
    for (int j = 0; j < depth_; ++j) {
        if (actions[j] < 0 || actions[j] >= actions_) return neg_inf;
        if (j > 0 && actions[j] == actions[j - 1]) return neg_inf;
    }
    const RVec z = logits(actions);
    double lp = 0.0;
    for (int j = 0; j < depth_; ++j) {
        const RVec p = masked_softmax(z.segment(static_cast<Eigen::Index>(j) * actions_, actions_), j > 0 ? actions[j - 1] : -1);
        lp += std::log(p[actions[j]]);
    }
    return lp;
}

double PolicyNet::entropy(const std::vector<int>& actions) const
{
    const RVec z = logits(actions);
    double s = 0.0;
    for (int j = 0; j < depth_; ++j)
        s += categorical_entropy(masked_softmax(z.segment(static_cast<Eigen::Index>(j) * actions_, actions_), j > 0 ? actions[j - 1] : -1));
    return s;
}

double clipped_term(double ratio, double advantage, double clip)
{
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * advantage, clipped * advantage);
}

PolicyNet::Objective PolicyNet::objective(const Batch& batch, double clip, double temperature, bool with_grad) const
{
    const auto B = static_cast<Eigen::Index>(batch.actions.size());
    if (B == 0 || batch.old_logprob.size() != batch.actions.size() || batch.advantage.size() != batch.actions.size())
        throw std::invalid_argument("objective: inconsistent batch");
    const Forward f = forward(encode(batch.actions));
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(f.logits.rows(), B);
    Objective o;
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& seq = batch.actions[static_cast<std::size_t>(b)];
        double lp = 0.0, ent = 0.0;
        std::vector<RVec> probs;
        for (int j = 0; j < depth_; ++j) {
            RVec p = masked_softmax(f.logits.col(b).segment(static_cast<Eigen::Index>(j) * actions_, actions_), j > 0 ? seq[j - 1] : -1);
            lp += std::log(p[seq[j]]);
            ent += categorical_entropy(p);
            probs.push_back(std::move(p));
        }
        const double adv = batch.advantage[static_cast<std::size_t>(b)];
        const double ratio = std::exp(lp - batch.old_logprob[static_cast<std::size_t>(b)]);
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
        o.surrogate += clipped_term(ratio, adv, clip);
        o.entropy += ent;
        if (!with_grad) continue;
        // the unclipped branch carries the gradient when it is the smaller one
        const double w_lp = ratio * adv <= clipped * adv ? ratio * adv : 0.0;
        for (int j = 0; j < depth_; ++j) {
            const RVec& p = probs[static_cast<std::size_t>(j)];
            const double Sj = categorical_entropy(p);
            for (int k = 0; k < actions_; ++k) {
                if (p[k] <= 0.0) continue;
                double g = w_lp * ((k == seq[j] ? 1.0 : 0.0) - p[k]);
                g += temperature * (-p[k] * (std::log(p[k]) + Sj));
                dz(static_cast<Eigen::Index>(j) * actions_ + k, b) = g;
            }
        }
    }
    o.surrogate /= static_cast<double>(B);
    o.entropy /= static_cast<double>(B);
    o.value = o.surrogate + temperature * o.entropy;
    if (!with_grad) return o;

    dz /= static_cast<double>(B);
    o.grad = RVec::Zero(theta_.size());
    Eigen::MatrixXd delta = dz;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const Layer& L = layers_[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd& a = f.act[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd gw = (delta * a.transpose()).cwiseProduct(L.mask);
        Eigen::Map<RowMat>(o.grad.data() + L.offset, L.out, L.in) = gw;
        o.grad.segment(L.offset + static_cast<Eigen::Index>(L.out) * L.in, L.out) = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = weight(L).cwiseProduct(L.mask).transpose() * delta;
            delta = back.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
        }
    }
    return o;
}

double TrainConfig::lr_at(int k) const
{
    return lr * std::pow(lr_decay, k / lr_every);
}

double TrainConfig::temperature_at(int k) const
{
    return temperature * std::pow(temperature_decay, k / temperature_every);
}

Evaluator make_evaluator(const ControlProblem& p, double T, const SolverConfig& solver, int workers)
{
    return [&p, T, solver, workers](const std::vector<EvalRequest>& reqs) {
        std::vector<EvalRecord> out(reqs.size());
        parallel_for(reqs.size(), workers, [&](std::size_t i) {
            SolverConfig c = solver;
            c.restarts = reqs[i].restarts;
            c.rng_seed = reqs[i].seed;
            out[i] = optimize_durations(reqs[i].tau, T, p, c);
        });
        return out;
    };
}

TrainState initial_train_state(const TrainConfig& cfg)
{
    if (cfg.labels.size() < 2) throw InputError("training needs at least two action labels");
    if (cfg.q < 1 || cfg.batch < 1 || cfg.iterations < 0 || cfg.ppo_steps < 1)
        throw InputError("invalid training configuration");
    TrainState st;
    st.net = PolicyNet(static_cast<int>(cfg.labels.size()), cfg.q, cfg.hidden, derive_seed(cfg.seed, 0x6e6574));
    st.adam_m = RVec::Zero(st.net.parameter_count());
    st.adam_v = RVec::Zero(st.net.parameter_count());
    st.policy_rng.seed(derive_seed(cfg.seed, 0x706f6c));
    st.restart_rng.seed(derive_seed(cfg.seed, 0x727374));
    return st;
}

bool ppo_update(TrainState& st, const TrainConfig& cfg, const PolicyNet::Batch& batch, int k)
{
    const RVec theta0 = st.net.parameters(), m0 = st.adam_m, v0 = st.adam_v;
    const long t0 = st.adam_t;
    const double lr = cfg.lr_at(k), temp = cfg.temperature_at(k);
    for (int s = 0; s < cfg.ppo_steps; ++s) {
        const PolicyNet::Objective o = st.net.objective(batch, cfg.clip, temp);
        if (!std::isfinite(o.value) || !o.grad.allFinite()) {
            st.net.parameters() = theta0;
            st.adam_m = m0;
            st.adam_v = v0;
            st.adam_t = t0;
            return false;
        }
        ++st.adam_t;
        st.adam_m = cfg.adam_beta1 * st.adam_m + (1.0 - cfg.adam_beta1) * o.grad;
        st.adam_v = cfg.adam_beta2 * st.adam_v + (1.0 - cfg.adam_beta2) * o.grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(st.adam_t));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(st.adam_t));
        // gradient ascent on the objective
        st.net.parameters().array() +=
            lr * (st.adam_m.array() / c1) / ((st.adam_v.array() / c2).sqrt() + cfg.adam_eps);
    }
    return true;
}

IterationLog train_iteration(TrainState& st, const TrainConfig& cfg, const Evaluator& eval)
{
    const int k = st.iteration;
    IterationLog it;
    it.k = k;
    it.lr = cfg.lr_at(k);
    it.temperature = cfg.temperature_at(k);

    const auto traj = st.net.sample_batch(cfg.batch, st.policy_rng);
    auto to_labels = [&](const std::vector<int>& a) {
        std::vector<std::string> tau;
        for (int x : a) tau.push_back(cfg.labels[static_cast<std::size_t>(x)]);
        return tau;
    };

    // sequences whose cached result used fewer restarts than the current schedule get more
    std::vector<std::vector<int>> pending;
    std::vector<EvalRequest> reqs;
    std::map<std::vector<int>, bool> queued;
    const int p_tot = restart_total(k);
    for (const auto& t : traj) {
        if (queued.count(t.actions)) continue;
        queued[t.actions] = true;
        auto c = st.cache.find(t.actions);
        if (c != st.cache.end() && c->second.restarts >= p_tot) continue;
        const int P = restart_schedule(k, st.restart_rng);
        reqs.push_back({to_labels(t.actions), P, derive_seed(cfg.seed, static_cast<std::uint64_t>(k), pending.size())});
        pending.push_back(t.actions);
    }
    if (!reqs.empty()) {
        const std::vector<EvalRecord> recs = eval(reqs);
        if (recs.size() != reqs.size()) throw std::runtime_error("evaluator returned the wrong number of records");
        for (std::size_t i = 0; i < recs.size(); ++i) {
            auto [pos, fresh] = st.cache.try_emplace(pending[i], TrainState::CacheEntry{recs[i], 0});
            if (!fresh && recs[i].best_energy_density < pos->second.record.best_energy_density) pos->second.record = recs[i];
            pos->second.restarts += reqs[i].restarts;
        }
    }
    it.evaluations = static_cast<int>(reqs.size());

    PolicyNet::Batch batch;
    std::vector<double> R;
    double ent = 0.0;
    it.max_return = -std::numeric_limits<double>::infinity();
    for (const auto& t : traj) {
        const auto& entry = st.cache.at(t.actions);
        const double r = -entry.record.best_energy_density;
        R.push_back(r);
        it.max_return = std::max(it.max_return, r);
        if (r > st.best_return) {
            st.best_return = r;
            st.best = entry.record;
        }
        batch.actions.push_back(t.actions);
        batch.old_logprob.push_back(t.logprob);
        ent += st.net.entropy(t.actions);
    }
    double mean = 0.0;
    for (double r : R) mean += r;
    mean /= static_cast<double>(R.size());
    it.mean_return = mean;
    it.entropy = ent / static_cast<double>(R.size());

    st.baseline = cfg.baseline_decay * st.baseline + (1.0 - cfg.baseline_decay) * mean;
    for (double r : R) batch.advantage.push_back(r - st.baseline);
    it.baseline = st.baseline;
    it.skipped = !ppo_update(st, cfg, batch, k);
    it.best_return = st.best_return;
    ++st.iteration;
    return it;
}

std::string iteration_json(const IterationLog& it)
{
    json j{{"k", it.k},
           {"mean_return", it.mean_return},
           {"max_return", it.max_return},
           {"best_return", it.best_return},
           {"entropy", it.entropy},
           {"lr", it.lr},
           {"temperature", it.temperature},
           {"baseline", it.baseline},
           {"evaluations", it.evaluations},
           {"skipped", it.skipped}};
    return j.dump();
}

TrainResult train(const TrainConfig& cfg, const Evaluator& eval, std::optional<TrainState> resume)
{
    TrainState st = resume ? std::move(*resume) : initial_train_state(cfg);
    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path, resume ? std::ios::app : std::ios::trunc);
        if (!log) throw std::ios_base::failure("cannot open training log " + cfg.log_path);
    }
    TrainResult res;
    while (st.iteration < cfg.iterations) {
        IterationLog it = train_iteration(st, cfg, eval);
        if (log) log << iteration_json(it) << '\n' << std::flush;
        res.log.push_back(it);
        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 && st.iteration % cfg.checkpoint_every == 0)
            save_checkpoint(st, cfg, cfg.checkpoint_path);
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(st, cfg, cfg.checkpoint_path);
    res.best = st.best;
    res.best_return = st.best_return;
    return res;
}

namespace {

json vec_json(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RVec json_vec(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double num(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json record_json(const EvalRecord& r)
{
    return json{{"tau", r.seq.tau},
                {"alphas", r.seq.alphas},
                {"energy_density", num(r.best_energy_density)},
                {"energy_ratio", num(r.energy_ratio)},
                {"fidelity", num(r.fidelity)},
                {"entropy", num(r.entropy)},
                {"restarts_used", r.restarts_used},
                {"degraded", r.degraded}};
}

EvalRecord json_record(const json& j)
{
    EvalRecord r;
    r.seq.tau = j.at("tau").get<std::vector<std::string>>();
    r.seq.alphas = j.at("alphas").get<std::vector<double>>();
    r.best_energy_density = num(j.at("energy_density"));
    r.energy_ratio = num(j.at("energy_ratio"));
    r.fidelity = num(j.at("fidelity"));
    r.entropy = num(j.at("entropy"));
    r.restarts_used = j.at("restarts_used").get<int>();
    r.degraded = j.at("degraded").get<bool>();
    return r;
}

template <class Rng>
std::string rng_text(const Rng& r)
{
    std::ostringstream os;
    os << r;
    return os.str();
}

}  // namespace

void save_checkpoint(const TrainState& st, const TrainConfig& cfg, const std::string& path)
{
    json cache = json::array();
    for (const auto& [seq, e] : st.cache) cache.push_back({{"actions", seq}, {"restarts", e.restarts}, {"record", record_json(e.record)}});
    json j{{"labels", cfg.labels},
           {"q", cfg.q},
           {"hidden", st.net.hidden()},
           {"theta", vec_json(st.net.parameters())},
           {"adam_m", vec_json(st.adam_m)},
           {"adam_v", vec_json(st.adam_v)},
           {"adam_t", st.adam_t},
           {"baseline", st.baseline},
           {"iteration", st.iteration},
           {"best_return", num(st.best_return)},
           {"best", record_json(st.best)},
           {"policy_rng", rng_text(st.policy_rng)},
           {"restart_rng", rng_text(st.restart_rng)},
           {"cache", cache}};
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw std::ios_base::failure("cannot write checkpoint " + tmp);
        f << j.dump() << '\n';
        if (!f) throw std::ios_base::failure("cannot write checkpoint " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::ios_base::failure("cannot move checkpoint to " + path);
}

TrainState load_checkpoint(const TrainConfig& cfg, const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::ios_base::failure("cannot read checkpoint " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw InputError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.at("labels").get<std::vector<std::string>>() != cfg.labels || j.at("q").get<int>() != cfg.q ||
        j.at("hidden").get<std::vector<int>>() != cfg.hidden)
        throw InputError("checkpoint " + path + " does not match the configuration");
    TrainState st = initial_train_state(cfg);
    const RVec theta = json_vec(j.at("theta"));
    if (theta.size() != st.net.parameter_count()) throw InputError("checkpoint parameter count mismatch");
    st.net.parameters() = theta;
    st.adam_m = json_vec(j.at("adam_m"));
    st.adam_v = json_vec(j.at("adam_v"));
    st.adam_t = j.at("adam_t").get<long>();
    st.baseline = j.at("baseline").get<double>();
    st.iteration = j.at("iteration").get<int>();
    st.best_return = j.at("best_return").is_null() ? -1e300 : j.at("best_return").get<double>();
    st.best = json_record(j.at("best"));
    std::istringstream(j.at("policy_rng").get<std::string>()) >> st.policy_rng;
    std::istringstream(j.at("restart_rng").get<std::string>()) >> st.restart_rng;
    for (const auto& c : j.at("cache"))
        st.cache[c.at("actions").get<std::vector<int>>()] = {json_record(c.at("record")), c.at("restarts").get<int>()};
    return st;
}

}  // namespace cdqaoa
