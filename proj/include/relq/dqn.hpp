#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "relq/env.hpp"
#include "relq/nn.hpp"
#include "relq/reliability.hpp"
#include "relq/rng.hpp"

namespace relq {

struct DqnConfig {
    double discount = 0.99;
    double learning_rate = 0.001;
    int batch_size = 1024;
    double target_alpha = 0.01;
    int64_t total_steps = 500000;
    double l1_lambda = 0.0001;
    double epsilon_start = 1.0;
    double epsilon_final = 0.05;
    double epsilon_decay_fraction = 0.5;  // linear decay over this share of total_steps
    int64_t replay_capacity = 100000;
    int64_t learning_starts = 10000;
    bool train_reliability = true;  // reliability/RND heads consume their own RNG streams
};

inline double epsilon_at(const DqnConfig& cfg, int64_t step) {
    const double horizon = cfg.epsilon_decay_fraction * static_cast<double>(cfg.total_steps);
    if (horizon <= 0 || step >= horizon) return cfg.epsilon_final;
    const double frac = static_cast<double>(step) / horizon;
    return cfg.epsilon_start + frac * (cfg.epsilon_final - cfg.epsilon_start);
}

// 20 -> 64 relu -> 64 relu -> 9 linear.
inline std::vector<LayerSpec> q_network_spec() {
    return {{kObsDim, 64, Activation::Relu},
            {64, 64, Activation::Relu},
            {64, kNumActions, Activation::Linear}};
}

inline constexpr int kQFeatureDim = 64;  // penultimate width of q_network_spec()

struct Transition {
    Eigen::Matrix<float, kObsDim, 1> obs;
    Eigen::Matrix<float, kObsDim, 1> next_obs;
    float reward = 0;
    uint8_t action = 0;
    bool terminal = false;  // no bootstrap term in the TD target
};

// Fixed-capacity ring with uniform sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(int64_t capacity) : capacity_(capacity) { data_.reserve(capacity); }

    void push(const Transition& t) {
        if (static_cast<int64_t>(data_.size()) < capacity_) {
            data_.push_back(t);
        } else {
            data_[write_] = t;
        }
        write_ = (write_ + 1) % capacity_;
    }

    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    int64_t capacity() const { return capacity_; }
    const Transition& operator[](int64_t i) const { return data_[i]; }

    const Transition& sample_one(Rng& rng) const {
        return data_[rng.uniform_index(data_.size())];
    }

  private:
    int64_t capacity_;
    int64_t write_ = 0;
    std::vector<Transition> data_;
};

// Contiguous batch views for the loss computation.
template <class S>
struct DqnBatch {
    Mat<S> obs;       // kObsDim x B
    Mat<S> next_obs;  // kObsDim x B
    Vec<S> rewards;
    std::vector<int> actions;
    std::vector<uint8_t> terminal;

    int size() const { return static_cast<int>(actions.size()); }
};

inline DqnBatch<float> sample_batch(const ReplayBuffer& buf, int batch_size, Rng& rng) {
    if (buf.size() < batch_size) throw SpecError("replay buffer smaller than batch");
    DqnBatch<float> b;
    b.obs.resize(kObsDim, batch_size);
    b.next_obs.resize(kObsDim, batch_size);
    b.rewards.resize(batch_size);
    b.actions.resize(batch_size);
    b.terminal.resize(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const Transition& t = buf.sample_one(rng);
        b.obs.col(i) = t.obs;
        b.next_obs.col(i) = t.next_obs;
        b.rewards(i) = t.reward;
        b.actions[i] = t.action;
        b.terminal[i] = t.terminal;
    }
    return b;
}

// Epsilon-greedy over the 9 Q-values; argmax ties break to the lowest index.
template <class S>
int select_action(const Network<S>& qnet, const Vec<S>& obs, double epsilon, Rng& rng) {
    if (epsilon > 0 && rng.next_double() < epsilon)
        return static_cast<int>(rng.uniform_index(kNumActions));
    Vec<S> q = forward_value(qnet, obs);
    int best = 0;
    for (int a = 1; a < q.size(); ++a)
        if (q(a) > q(best)) best = a;
    return best;
}

template <class S>
struct DqnLossResult {
    double loss = 0;
    ParamShaped<S> grads;
    ForwardTrace<S> online_trace;  // trace of the online net on batch.obs
};

// Loss of Eq. 2 with L1 regularization on the online parameters. The target
// path contributes no gradient; terminal transitions drop the bootstrap term.
template <class S>
DqnLossResult<S> dqn_loss_and_grads(const DqnBatch<S>& batch, const Network<S>& online,
                                    const Network<S>& target, S gamma, S l1_lambda) {
    const int B = batch.size();
    if (B == 0) throw SpecError("dqn loss needs a non-empty batch");
    DqnLossResult<S> r;
    r.online_trace = forward(online, batch.obs);
    Mat<S> next_q = forward(target, batch.next_obs).output();
    const Mat<S>& q = r.online_trace.output();
    Mat<S> dout = Mat<S>::Zero(q.rows(), q.cols());
    double sq = 0;
    for (int i = 0; i < B; ++i) {
        S y = batch.rewards(i);
        if (!batch.terminal[i]) y += gamma * next_q.col(i).maxCoeff();
        const S err = y - q(batch.actions[i], i);
        sq += static_cast<double>(err) * static_cast<double>(err);
        dout(batch.actions[i], i) = S(-2) * err / S(B);
    }
    r.loss = sq / B;
    r.grads = backward(online, r.online_trace, dout);
    if (l1_lambda > S(0)) {
        for (size_t k = 0; k < online.weights.size(); ++k) {
            r.loss += l1_lambda * (online.weights[k].template cast<double>().cwiseAbs().sum() +
                                   online.biases[k].template cast<double>().cwiseAbs().sum());
            r.grads.weights[k] += l1_lambda * online.weights[k].array().sign().matrix();
            r.grads.biases[k] += l1_lambda * online.biases[k].array().sign().matrix();
        }
    }
    return r;
}

struct EpisodeLog {
    int64_t episode = 0;
    int steps = 0;
    double episode_return = 0;
    bool reached_goal = false;
    double epsilon = 0;
};

// Everything a trained run produces: Q-nets plus all four quantifier heads.
struct ModelBundle {
    Network<float> qnet;
    Network<float> target;
    ReliabilityHeadPair<float> rel_raw;
    ReliabilityHeadPair<float> rel_feat;
    RndHeadPair<float> rnd_raw;
    RndHeadPair<float> rnd_feat;
    uint64_t seed = 0;
    int64_t steps_trained = 0;
};

// Fresh bundle with all networks at their seed-derived initialization.
ModelBundle init_bundle(uint64_t master_seed);

struct TrainResult {
    ModelBundle bundle;
    std::vector<EpisodeLog> episodes;
};

using ProgressFn = std::function<void(int64_t step, int64_t total)>;

// Full training loop: one environment step per iteration, one Adam update of
// the Q-net after warm-up, soft target update, and (unless disabled) one
// update of each reliability/RND head on the same batch. Deterministic per
// (cfg, env_cfg, seed, region).
TrainResult train(const DqnConfig& cfg, const EnvConfig& env_cfg, uint64_t seed,
                  const InitRegion& region, const ProgressFn& progress = {});

}  // namespace relq
