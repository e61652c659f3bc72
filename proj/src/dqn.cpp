#include "relq/dqn.hpp"

#include <cmath>
#include <string>

namespace relq {

ModelBundle init_bundle(uint64_t master_seed) {
    ModelBundle b;
    b.qnet = init_network<float>(q_network_spec(), stream_seed(master_seed, "qnet-init"));
    b.target = clone_params(b.qnet);
    b.rel_raw = init_reliability_pair<float>(kObsDim, stream_seed(master_seed, "rel-raw-init"));
    b.rel_feat =
        init_reliability_pair<float>(kQFeatureDim, stream_seed(master_seed, "rel-feat-init"));
    b.rnd_raw = init_rnd_pair<float>(kObsDim, stream_seed(master_seed, "rnd-raw-init"));
    b.rnd_feat = init_rnd_pair<float>(kQFeatureDim, stream_seed(master_seed, "rnd-feat-init"));
    b.seed = master_seed;
    return b;
}

TrainResult train(const DqnConfig& cfg, const EnvConfig& env_cfg, uint64_t seed,
                  const InitRegion& region, const ProgressFn& progress) {
    if (cfg.discount <= 0 || cfg.discount > 1) throw SpecError("discount outside (0,1]");
    if (cfg.batch_size < 1 || cfg.replay_capacity < cfg.batch_size)
        throw SpecError("replay capacity must hold at least one batch");

    TrainResult out;
    out.bundle = init_bundle(seed);
    ModelBundle& b = out.bundle;
    AdamState<float> q_adam = make_adam(b.qnet, static_cast<float>(cfg.learning_rate));
    b.rel_raw.adam.learning_rate = static_cast<float>(cfg.learning_rate);
    b.rel_feat.adam.learning_rate = static_cast<float>(cfg.learning_rate);
    b.rnd_raw.adam.learning_rate = static_cast<float>(cfg.learning_rate);
    b.rnd_feat.adam.learning_rate = static_cast<float>(cfg.learning_rate);
    const float lam = static_cast<float>(cfg.l1_lambda);
    b.rel_raw.reg_lambda = lam;
    b.rel_feat.reg_lambda = lam;
    b.rnd_raw.l1_lambda = lam;
    b.rnd_feat.l1_lambda = lam;

    // Independent streams; the Q-net trajectory must not depend on whether
    // the reliability heads train.
    Rng env_rng = Rng::stream(seed, "env-init");
    Rng explore_rng = Rng::stream(seed, "explore");
    Rng replay_rng = Rng::stream(seed, "replay-sample");
    Rng irrelevant_rng = Rng::stream(seed, "irrelevant");

    ReplayBuffer replay(cfg.replay_capacity);

    AgentState state = sample_initial_state(env_rng, region, env_cfg);
    FrameStack frames;
    frames.reset(observe(state, env_cfg));
    int step_in_episode = 0;
    double episode_return = 0;
    int64_t episode_index = 0;

    for (int64_t step = 0; step < cfg.total_steps; ++step) {
        const double eps = epsilon_at(cfg, step);
        const Eigen::Matrix<float, kObsDim, 1> obs = frames.stacked().cast<float>();
        const int action = select_action(b.qnet, Vec<float>(obs), eps, explore_rng);

        const StepOutcome o = env_step(state, action, step_in_episode, env_cfg);
        frames.push(observe(o.next_state, env_cfg));

        Transition t;
        t.obs = obs;
        t.next_obs = frames.stacked().cast<float>();
        t.reward = static_cast<float>(o.reward);
        t.action = static_cast<uint8_t>(action);
        t.terminal = o.episode_done;
        replay.push(t);

        episode_return += o.reward;
        ++step_in_episode;
        if (o.episode_done) {
            out.episodes.push_back({episode_index, step_in_episode, episode_return,
                                    o.reached_goal, eps});
            ++episode_index;
            state = sample_initial_state(env_rng, region, env_cfg);
            frames.reset(observe(state, env_cfg));
            step_in_episode = 0;
            episode_return = 0;
        } else {
            state = o.next_state;
        }

        if (step >= cfg.learning_starts && replay.size() >= cfg.batch_size) {
            DqnBatch<float> batch = sample_batch(replay, cfg.batch_size, replay_rng);
            DqnLossResult<float> res = dqn_loss_and_grads(
                batch, b.qnet, b.target, static_cast<float>(cfg.discount), lam);
            if (!std::isfinite(res.loss))
                throw NumericError("non-finite DQN loss at step " + std::to_string(step));

            Mat<float> trained_feats;
            Mat<float> irrelevant_obs;
            Mat<float> irrelevant_feats;
            if (cfg.train_reliability) {
                // Features come from the pre-update Q-net, for both batches.
                trained_feats = res.online_trace.features();
                irrelevant_obs = sample_irrelevant_observations<float>(irrelevant_rng, kObsDim,
                                                                       cfg.batch_size);
                irrelevant_feats = extracted_features(b.qnet, irrelevant_obs);
            }

            adam_step(b.qnet, res.grads, q_adam);
            soft_update(b.target, b.qnet, static_cast<float>(cfg.target_alpha));

            if (cfg.train_reliability) {
                reliability_update(b.rel_raw, batch.obs, irrelevant_obs);
                reliability_update(b.rel_feat, trained_feats, irrelevant_feats);
                rnd_update(b.rnd_raw, batch.obs);
                rnd_update(b.rnd_feat, trained_feats);
            }
        }

        if (progress && (step + 1) % 10000 == 0) progress(step + 1, cfg.total_steps);
    }

    b.steps_trained = cfg.total_steps;
    return out;
}

}  // namespace relq
