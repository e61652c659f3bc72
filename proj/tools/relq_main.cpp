// relq — reliability-quantified DQN on the point-mass goal task.
// Subcommands: train, eval, switch, gradcheck.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "relq/bundle_io.hpp"
#include "relq/config.hpp"
#include "relq/csv.hpp"
#include "relq/dqn.hpp"
#include "relq/eval.hpp"
#include "relq/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace relq;

namespace {

void write_training_log(const std::string& path, const std::vector<EpisodeLog>& episodes) {
    CsvWriter w(path);
    w.field("episode").field("steps").field("return").field("reached_goal").field("epsilon");
    w.endrow();
    for (const EpisodeLog& e : episodes) {
        w.field(e.episode).field(e.steps).field(e.episode_return);
        w.field(e.reached_goal).field(e.epsilon).endrow();
    }
    w.finish();
}

ExperimentConfig resolve_config(const std::string& config_path, const std::string& profile,
                                uint64_t seed, bool seed_set, const std::string& region,
                                const std::string& head) {
    ExperimentConfig cfg;
    cfg.apply_profile(cfg.profile);
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    if (!profile.empty()) cfg.apply_profile(profile);
    if (seed_set) cfg.seed = seed;
    if (!region.empty()) cfg.region = region_from_string(region);
    if (!head.empty()) cfg.head = score_head_from_name(head);
    return cfg;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::fprintf(stderr, "train: profile=%s steps=%lld seed=%llu region=%s out=%s\n",
                 cfg.profile.c_str(), static_cast<long long>(cfg.dqn.total_steps),
                 static_cast<unsigned long long>(cfg.seed),
                 region_to_string(cfg.region).c_str(), out_dir.c_str());
    TrainResult r = train(cfg.dqn, cfg.env, cfg.seed, cfg.region,
                          [](int64_t step, int64_t total) {
                              if (step % 100000 == 0 || step == total)
                                  std::fprintf(stderr, "  step %lld / %lld\n",
                                               static_cast<long long>(step),
                                               static_cast<long long>(total));
                          });
    save_bundle(out_dir, r.bundle);
    write_training_log((fs::path(out_dir) / "training_log.csv").string(), r.episodes);

    std::vector<std::string> artifacts = {"training_log.csv", "bundle.txt"};
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        if (entry.path().extension() == ".net") artifacts.push_back(entry.path().filename());
    }
    std::sort(artifacts.begin(), artifacts.end());
    write_manifest(out_dir, "train", cfg, artifacts);

    int goals = 0, window = 0;
    const int n = static_cast<int>(r.episodes.size());
    for (int i = std::max(0, n - 100); i < n; ++i, ++window)
        goals += r.episodes[i].reached_goal ? 1 : 0;
    std::fprintf(stderr, "train: %d episodes, goal rate over last %d: %.3f\n", n, window,
                 window ? static_cast<double>(goals) / window : 0.0);
    return 0;
}

int cmd_eval(const std::string& model_dir, const ExperimentConfig& cfg,
             const std::string& out_dir) {
    const ModelBundle bundle = load_bundle(model_dir);
    fs::create_directories(out_dir);
    GridEvalResult g = evaluate_grid(bundle, cfg.env);
    GoalRatioTable t = goal_ratio_by_reliability(g.records, cfg.head);

    std::vector<std::string> artifacts;
    auto out = [&](const std::string& name) {
        artifacts.push_back(name);
        return (fs::path(out_dir) / name).string();
    };
    write_grid_results_csv(out("grid_results.csv"), g);
    for (int kind = 0; kind < kScoreKinds; ++kind)
        write_spatial_map_csv(out(std::string("reliability_map_") + kScoreNames[kind] + ".csv"),
                              g.maps[kind]);
    write_goal_ratio_csv(out("goal_ratio.csv"), t);
    write_trajectories_csv(out("trajectories.csv"), g.records);
    write_manifest(out_dir, "eval", cfg, artifacts);

    long goals = 0;
    for (const auto& r : g.records) goals += r.reached_goal ? 1 : 0;
    std::fprintf(stderr, "eval: %zu rollouts, %ld reached goal\n", g.records.size(), goals);
    return 0;
}

int quadrant_of(double x, double y) {
    if (x >= 0 && y >= 0) return 1;
    if (x < 0 && y >= 0) return 2;
    if (x < 0 && y < 0) return 3;
    return 4;
}

int cmd_switch(const std::vector<std::string>& model_dirs, const ExperimentConfig& cfg,
               const std::string& out_dir) {
    std::vector<ModelBundle> bundles;
    for (const std::string& d : model_dirs) bundles.push_back(load_bundle(d));
    std::vector<const ModelBundle*> ensemble;
    for (const ModelBundle& b : bundles) {
        if (b.qnet.input_dim() != bundles.front().qnet.input_dim())
            throw SpecError("bundles disagree on observation dimension");
        ensemble.push_back(&b);
    }
    fs::create_directories(out_dir);

    std::vector<AgentState> starts;
    for (const AgentState& s : evaluation_grid_starts()) {
        const double d = std::hypot(s.x, s.y);
        if (d >= cfg.env.init_radius_min && d <= cfg.env.init_radius_max) starts.push_back(s);
    }

    std::vector<TrajectoryRecord> switched;
    for (const AgentState& s : starts)
        switched.push_back(switching_rollout(ensemble, s, cfg.env, cfg.head));

    // Per-quadrant goal counts for the ensemble and each member on the same starts.
    const int n_rows = static_cast<int>(bundles.size()) + 1;
    std::vector<std::array<long, 5>> made(n_rows, {0, 0, 0, 0, 0});
    std::vector<std::array<long, 5>> tried(n_rows, {0, 0, 0, 0, 0});
    auto tally = [&](int row, const AgentState& s, bool goal) {
        const int q = quadrant_of(s.x, s.y);
        for (int slot : {0, q}) {
            tried[row][slot] += 1;
            made[row][slot] += goal ? 1 : 0;
        }
    };
    for (size_t i = 0; i < starts.size(); ++i) tally(0, starts[i], switched[i].reached_goal);
    for (size_t m = 0; m < bundles.size(); ++m)
        for (const AgentState& s : starts)
            tally(static_cast<int>(m) + 1, s, rollout(bundles[m], s, cfg.env).reached_goal);

    std::vector<std::string> artifacts = {"switch_trace.csv", "switch_summary.csv",
                                          "trajectories.csv"};
    write_switch_trace_csv((fs::path(out_dir) / "switch_trace.csv").string(), switched,
                           static_cast<int>(bundles.size()));
    write_trajectories_csv((fs::path(out_dir) / "trajectories.csv").string(), switched);
    {
        CsvWriter w((fs::path(out_dir) / "switch_summary.csv").string());
        w.field("model").field("quadrant").field("starts").field("goals").field("ratio");
        w.endrow();
        for (int row = 0; row < n_rows; ++row) {
            const std::string name = row == 0 ? "ensemble" : "model_" + std::to_string(row - 1);
            for (int q = 0; q < 5; ++q) {
                const double ratio =
                    tried[row][q] ? static_cast<double>(made[row][q]) / tried[row][q] : 0.0;
                w.field(name).field(q).field(tried[row][q]).field(made[row][q]).field(ratio);
                w.endrow();
            }
        }
        w.finish();
    }
    write_manifest(out_dir, "switch", cfg, artifacts);
    std::fprintf(stderr, "switch: ensemble goal ratio %.3f over %zu annulus starts\n",
                 static_cast<double>(made[0][0]) / tried[0][0], starts.size());
    return 0;
}

int cmd_gradcheck(uint64_t seed) {
    GradCheckReport r = run_gradcheck(seed);
    for (const GradCheckEntry& e : r.entries)
        std::printf("%-12s net %-14s max rel err %.3e\n", e.loss_name.c_str(),
                    e.net_shape.c_str(), e.max_rel_err);
    if (!r.all_ok()) {
        std::printf("FAIL: gradient mismatch above 1e-4\n");
        return 2;
    }
    std::printf("OK: all gradients within 1e-4 of the finite-difference oracle\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reliability-quantified DQN control"};
    app.require_subcommand(1);

    std::string config_path, profile, region, head, out_dir, model_dir;
    std::vector<std::string> model_dirs;
    uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "config file (key = value sections)");
        c->add_option("--profile", profile, "paper|desk|smoke");
        c->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
            seed_set = true;
        });
        c->add_option("--head", head, "raw|features|both");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a model bundle");
    add_common(train_cmd);
    train_cmd->add_option("--region", region, "annulus|quadrant:i");
    train_cmd->add_option("--out", out_dir, "output bundle directory")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "grid-evaluate a bundle");
    add_common(eval_cmd);
    eval_cmd->add_option("--model", model_dir, "bundle directory")->required();
    eval_cmd->add_option("--out", out_dir, "output directory (default <model>/eval)");

    CLI::App* switch_cmd = app.add_subcommand("switch", "max-reliability model switching");
    add_common(switch_cmd);
    switch_cmd->add_option("--models", model_dirs, "bundle directories")
        ->required()
        ->expected(2, 16);
    switch_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "verify analytic gradients");
    grad_cmd->add_option("--seed", seed, "probe seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (grad_cmd->parsed()) return cmd_gradcheck(seed ? seed : 42);
        ExperimentConfig cfg = resolve_config(config_path, profile, seed, seed_set, region, head);
        if (train_cmd->parsed()) return cmd_train(cfg, out_dir);
        if (eval_cmd->parsed()) {
            if (out_dir.empty()) out_dir = (fs::path(model_dir) / "eval").string();
            return cmd_eval(model_dir, cfg, out_dir);
        }
        if (switch_cmd->parsed()) return cmd_switch(model_dirs, cfg, out_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const SpecError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    }
    return 1;
}
