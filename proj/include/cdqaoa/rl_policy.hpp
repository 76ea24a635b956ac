#pragma once

#include "cdqaoa/contopt.hpp"
#include "cdqaoa/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cdqaoa {

// Masked autoregressive categorical policy over sequences of q actions from a set of size A.
// Input: the q x A one-hot action history; output: q blocks of A logits. Output block j only
// sees input blocks < j (MADE-style degree masks), so one forward pass on a full sequence gives
// every conditional.
class PolicyNet {
public:
    PolicyNet() = default;
    PolicyNet(int actions, int depth, std::vector<int> hidden, std::uint64_t seed);

    int actions() const { return actions_; }
    int depth() const { return depth_; }
    const std::vector<int>& hidden() const { return hidden_; }
    Eigen::Index parameter_count() const { return theta_.size(); }
    RVec& parameters() { return theta_; }
    const RVec& parameters() const { return theta_; }

    // Raw logits (q*A) for a history; entries for steps >= j in `history` do not affect block j.
    RVec logits(const std::vector<int>& history) const;
    // Conditional distribution of step j given the history, previous action masked out.
    RVec conditional(const std::vector<int>& history, int j) const;

    struct Trajectory {
        std::vector<int> actions;
        double logprob = 0.0;
    };
    Trajectory sample(std::mt19937_64& rng) const;
    std::vector<Trajectory> sample_batch(int M, std::mt19937_64& rng) const;
    // Sum of log conditionals; -inf for sequences with a consecutive repeat or bad labels.
    double logprob(const std::vector<int>& actions) const;
    // Sum over steps of the conditional entropies (nats) along the given sequence.
    double entropy(const std::vector<int>& actions) const;

    // Objective pieces evaluated on a batch; the gradient is with respect to parameters().
    struct Batch {
        std::vector<std::vector<int>> actions;
        std::vector<double> old_logprob;
        std::vector<double> advantage;
    };
    struct Objective {
        double value = 0.0;      // surrogate + temperature * entropy
        double surrogate = 0.0;  // mean clipped term
        double entropy = 0.0;    // mean summed entropy
        RVec grad;
    };
    Objective objective(const Batch& batch, double clip, double temperature, bool with_grad = true) const;

private:
    struct Layer {
        Eigen::Index offset;  // position of W (row-major out x in) in theta_, bias follows
        int in, out;
        Eigen::MatrixXd mask;
    };
    struct Forward {
        std::vector<Eigen::MatrixXd> act;  // per layer input activations (columns = samples)
        Eigen::MatrixXd logits;
    };
    Forward forward(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd encode(const std::vector<std::vector<int>>& seqs) const;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> weight(const Layer& l) const;

    int actions_ = 0;
    int depth_ = 0;
    std::vector<int> hidden_;
    std::vector<Layer> layers_;
    RVec theta_;
};

// Clipped surrogate term of a single trajectory.
double clipped_term(double ratio, double advantage, double clip);

struct TrainConfig {
    std::vector<std::string> labels;
    int q = 3;
    double T = 1.0;
    int iterations = 500;
    int batch = 128;
    std::vector<int> hidden{112, 112};
    double lr = 0.01;
    double lr_decay = 0.96;
    int lr_every = 50;
    double temperature = 0.1;
    double temperature_decay = 0.9;
    double temperature_every = 10.0;
    double clip = 0.1;
    int ppo_steps = 4;
    double baseline_decay = 0.95;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    int workers = 1;
    SolverConfig solver;
    std::string log_path;         // JSON lines, one record per iteration
    std::string checkpoint_path;  // written every checkpoint_every iterations and at the end
    int checkpoint_every = 10;

    double lr_at(int k) const;
    double temperature_at(int k) const;
};

struct TrainState {
    PolicyNet net;
    RVec adam_m, adam_v;
    long adam_t = 0;
    double baseline = 0.0;
    int iteration = 0;  // next iteration to run
    double best_return = -1e300;
    EvalRecord best;
    std::mt19937_64 policy_rng;
    std::mt19937_64 restart_rng;
    struct CacheEntry {
        EvalRecord record;
        int restarts = 0;
    };
    std::map<std::vector<int>, CacheEntry> cache;
};

struct IterationLog {
    int k = 0;
    double mean_return = 0.0;
    double max_return = 0.0;
    double best_return = 0.0;
    double entropy = 0.0;  // mean over the batch of the summed conditional entropies
    double lr = 0.0;
    double temperature = 0.0;
    double baseline = 0.0;
    int evaluations = 0;  // sequences sent to the solver
    bool skipped = false;  // update rejected because of a non-finite gradient
};

struct EvalRequest {
    std::vector<std::string> tau;
    int restarts = 1;
    std::uint64_t seed = 0;
};
using Evaluator = std::function<std::vector<EvalRecord>(const std::vector<EvalRequest>&)>;

// Runs optimize_durations on the worker pool.
Evaluator make_evaluator(const ControlProblem& p, double T, const SolverConfig& solver, int workers);

TrainState initial_train_state(const TrainConfig& cfg);

// One PPO update on a scored batch. Returns false (state untouched) on a non-finite gradient.
bool ppo_update(TrainState& st, const TrainConfig& cfg, const PolicyNet::Batch& batch, int k);

// One full iteration: sample, evaluate (with the reward cache), update.
IterationLog train_iteration(TrainState& st, const TrainConfig& cfg, const Evaluator& eval);

struct TrainResult {
    EvalRecord best;
    double best_return = 0.0;
    std::vector<IterationLog> log;
};

// Runs the remaining iterations of `st` (resume by passing a loaded state).
TrainResult train(const TrainConfig& cfg, const Evaluator& eval, std::optional<TrainState> resume = std::nullopt);

void save_checkpoint(const TrainState& st, const TrainConfig& cfg, const std::string& path);
TrainState load_checkpoint(const TrainConfig& cfg, const std::string& path);

std::string iteration_json(const IterationLog& it);

}  // namespace cdqaoa
