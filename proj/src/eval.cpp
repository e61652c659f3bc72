#include "relq/eval.hpp"

#include <cmath>

#include "relq/csv.hpp"

namespace relq {

ScoreHead score_head_from_name(const std::string& s) {
    if (s == "raw") return ScoreHead::Raw;
    if (s == "features") return ScoreHead::Features;
    if (s == "both") return ScoreHead::Both;
    throw SpecError("unknown head: " + s + " (expected raw|features|both)");
}

const char* score_head_name(ScoreHead h) {
    switch (h) {
        case ScoreHead::Raw: return "raw";
        case ScoreHead::Features: return "features";
        case ScoreHead::Both: return "both";
    }
    return "?";
}

const std::array<const char*, kScoreKinds> kScoreNames = {
    "rel_raw", "rel_feat", "rel_both", "rnd_raw", "rnd_feat", "rnd_both"};

double score_by_index(const StateScores& s, int kind) {
    switch (kind) {
        case 0: return s.rel_raw;
        case 1: return s.rel_feat;
        case 2: return s.rel_both;
        case 3: return s.rnd_raw;
        case 4: return s.rnd_feat;
        case 5: return s.rnd_both;
    }
    throw SpecError("score kind outside [0,5]");
}

namespace {

// Scores plus the greedy action from one Q-net forward pass.
struct ScoredState {
    StateScores scores;
    int greedy_action = 0;
};

ScoredState score_and_act(const ModelBundle& b, const StackedObservation& obs) {
    const Vec<float> x = obs.cast<float>();
    ForwardTrace<float> qt = forward(b.qnet, Mat<float>(x));
    ScoredState r;
    const auto& q = qt.output();
    for (int a = 1; a < q.rows(); ++a)
        if (q(a, 0) > q(r.greedy_action, 0)) r.greedy_action = a;
    const Vec<float> feat = qt.features().col(0);
    r.scores.rel_raw = reliability_score(b.rel_raw, x);
    r.scores.rel_feat = reliability_score(b.rel_feat, feat);
    r.scores.rel_both = combined_reliability(r.scores.rel_raw, r.scores.rel_feat);
    r.scores.rnd_raw = rnd_uncertainty(b.rnd_raw, x);
    r.scores.rnd_feat = rnd_uncertainty(b.rnd_feat, feat);
    r.scores.rnd_both = 0.5 * (r.scores.rnd_raw + r.scores.rnd_feat);
    return r;
}

EnvConfig eval_config(EnvConfig cfg) {
    cfg.eval_mode = true;
    return cfg;
}

}  // namespace

StateScores score_state(const ModelBundle& b, const StackedObservation& obs) {
    return score_and_act(b, obs).scores;
}

TrajectoryRecord rollout(const ModelBundle& b, const AgentState& initial,
                         const EnvConfig& env_cfg) {
    const EnvConfig cfg = eval_config(env_cfg);
    TrajectoryRecord rec;
    rec.init_x = initial.x;
    rec.init_y = initial.y;

    AgentState state = initial;
    FrameStack frames;
    frames.reset(observe(state, cfg));

    if (distance_to_goal(state, cfg) < cfg.goal_radius) {
        VisitEntry v;
        v.state = state;
        v.scores = score_and_act(b, frames.stacked()).scores;
        v.reached_goal = true;
        v.episode_done = true;
        rec.visited.push_back(std::move(v));
        rec.reached_goal = true;
        return rec;
    }

    for (int step = 0; step < cfg.max_steps; ++step) {
        ScoredState ss = score_and_act(b, frames.stacked());
        StepOutcome o = env_step(state, ss.greedy_action, step, cfg);
        VisitEntry v;
        v.state = state;
        v.scores = ss.scores;
        v.action = ss.greedy_action;
        v.reward = o.reward;
        v.reached_goal = o.reached_goal;
        v.exited = o.exited;
        v.episode_done = o.episode_done;
        rec.visited.push_back(std::move(v));
        state = o.next_state;
        frames.push(observe(state, cfg));
        if (o.episode_done) {
            rec.reached_goal = o.reached_goal;
            break;
        }
    }

    VisitEntry last;
    last.state = state;
    last.scores = score_and_act(b, frames.stacked()).scores;
    rec.visited.push_back(std::move(last));
    return rec;
}

std::vector<AgentState> evaluation_grid_starts() {
    std::vector<AgentState> starts;
    starts.reserve(kGridSide * kGridSide);
    for (int iy = 0; iy < kGridSide; ++iy) {
        for (int ix = 0; ix < kGridSide; ++ix) {
            AgentState s;
            s.x = kGridMin + kGridPitch * ix;
            s.y = kGridMin + kGridPitch * iy;
            starts.push_back(s);
        }
    }
    return starts;
}

void SpatialMap::add(double x, double y, double value) {
    const int ix = static_cast<int>(std::floor((x + 735.0) / kGridPitch));
    const int iy = static_cast<int>(std::floor((y + 735.0) / kGridPitch));
    if (ix < 0 || ix >= kGridSide || iy < 0 || iy >= kGridSide) return;
    sum_[iy][ix] += value;
    count_[iy][ix] += 1;
}

void SpatialMap::merge(const SpatialMap& other) {
    for (int iy = 0; iy < kGridSide; ++iy)
        for (int ix = 0; ix < kGridSide; ++ix) {
            sum_[iy][ix] += other.sum_[iy][ix];
            count_[iy][ix] += other.count_[iy][ix];
        }
}

GridEvalResult evaluate_grid(const ModelBundle& b, const EnvConfig& env_cfg) {
    GridEvalResult g;
    for (const AgentState& start : evaluation_grid_starts()) {
        TrajectoryRecord rec = rollout(b, start, env_cfg);
        for (const VisitEntry& v : rec.visited)
            for (int kind = 0; kind < kScoreKinds; ++kind)
                g.maps[kind].add(v.state.x, v.state.y, score_by_index(v.scores, kind));
        g.records.push_back(std::move(rec));
    }
    return g;
}

GoalRatioTable goal_ratio_by_reliability(const std::vector<TrajectoryRecord>& records,
                                         ScoreHead head) {
    if (records.empty()) throw SpecError("goal_ratio_by_reliability: no records");
    GoalRatioTable t;
    for (const TrajectoryRecord& r : records) {
        const double rel = r.initial_scores().reliability(head);
        int bin = static_cast<int>(rel * 10.0);
        bin = std::min(std::max(bin, 0), 9);  // rel is in [0,1) by construction
        t.count[bin] += 1;
        if (r.reached_goal) t.goals[bin] += 1;
    }
    return t;
}

TrajectoryRecord switching_rollout(const std::vector<const ModelBundle*>& ensemble,
                                   const AgentState& initial, const EnvConfig& env_cfg,
                                   ScoreHead head) {
    if (ensemble.empty()) throw SpecError("switching needs at least one model");
    const EnvConfig cfg = eval_config(env_cfg);
    TrajectoryRecord rec;
    rec.init_x = initial.x;
    rec.init_y = initial.y;

    AgentState state = initial;
    FrameStack frames;
    frames.reset(observe(state, cfg));

    auto pick = [&](VisitEntry& v) -> int {
        int winner = 0;
        int winner_action = 0;
        double best = -1;
        v.member_reliability.resize(ensemble.size());
        for (size_t m = 0; m < ensemble.size(); ++m) {
            ScoredState ss = score_and_act(*ensemble[m], frames.stacked());
            const double rel = ss.scores.reliability(head);
            v.member_reliability[m] = rel;
            if (rel > best) {  // ties break to the lowest index
                best = rel;
                winner = static_cast<int>(m);
                winner_action = ss.greedy_action;
            }
            if (m == 0) v.scores = ss.scores;  // keep a representative score set
        }
        v.chosen_model = winner;
        return winner_action;
    };

    if (distance_to_goal(state, cfg) < cfg.goal_radius) {
        VisitEntry v;
        v.state = state;
        pick(v);
        v.reached_goal = true;
        v.episode_done = true;
        rec.visited.push_back(std::move(v));
        rec.reached_goal = true;
        return rec;
    }

    for (int step = 0; step < cfg.max_steps; ++step) {
        VisitEntry v;
        v.state = state;
        const int action = pick(v);
        StepOutcome o = env_step(state, action, step, cfg);
        v.action = action;
        v.reward = o.reward;
        v.reached_goal = o.reached_goal;
        v.exited = o.exited;
        v.episode_done = o.episode_done;
        rec.visited.push_back(std::move(v));
        state = o.next_state;
        frames.push(observe(state, cfg));
        if (o.episode_done) {
            rec.reached_goal = o.reached_goal;
            break;
        }
    }

    VisitEntry last;
    last.state = state;
    pick(last);
    rec.visited.push_back(std::move(last));
    return rec;
}

void write_grid_results_csv(const std::string& path, const GridEvalResult& g) {
    CsvWriter w(path);
    w.field("x").field("y").field("reached_goal").field("steps");
    for (const char* name : kScoreNames) w.field(std::string(name));
    w.endrow();
    for (const TrajectoryRecord& r : g.records) {
        w.field(r.init_x).field(r.init_y).field(r.reached_goal).field(r.steps_taken());
        for (int kind = 0; kind < kScoreKinds; ++kind)
            w.field(score_by_index(r.initial_scores(), kind));
        w.endrow();
    }
    w.finish();
}

void write_spatial_map_csv(const std::string& path, const SpatialMap& m) {
    CsvWriter w(path);
    w.field("bin_x").field("bin_y").field("mean").field("count").endrow();
    for (int iy = 0; iy < kGridSide; ++iy)
        for (int ix = 0; ix < kGridSide; ++ix) {
            if (!m.visited(ix, iy)) continue;
            w.field(SpatialMap::bin_center(ix))
                .field(SpatialMap::bin_center(iy))
                .field(m.mean(ix, iy))
                .field(m.count(ix, iy))
                .endrow();
        }
    w.finish();
}

void write_goal_ratio_csv(const std::string& path, const GoalRatioTable& t) {
    CsvWriter w(path);
    w.field("bin_lower").field("count").field("ratio").endrow();
    for (int bin = 0; bin < 10; ++bin)
        w.field(bin / 10.0).field(t.count[bin]).field(t.ratio(bin)).endrow();
    w.finish();
}

void write_trajectories_csv(const std::string& path,
                            const std::vector<TrajectoryRecord>& records) {
    CsvWriter w(path);
    w.field("episode").field("step").field("x").field("y").field("vx").field("vy");
    w.field("action").field("reward").field("reached_goal").field("exited").field("done");
    w.endrow();
    for (size_t ep = 0; ep < records.size(); ++ep) {
        const TrajectoryRecord& r = records[ep];
        for (int i = 0; i < r.steps_taken(); ++i) {
            const VisitEntry& v = r.visited[i];
            w.field(static_cast<long long>(ep)).field(i);
            w.field(v.state.x).field(v.state.y).field(v.state.vx).field(v.state.vy);
            w.field(v.action).field(v.reward);
            w.field(v.reached_goal).field(v.exited).field(v.episode_done);
            w.endrow();
        }
    }
    w.finish();
}

void write_switch_trace_csv(const std::string& path,
                            const std::vector<TrajectoryRecord>& records, int n_models) {
    CsvWriter w(path);
    w.field("episode").field("step").field("chosen_model");
    for (int m = 0; m < n_models; ++m) w.field("rel_" + std::to_string(m));
    w.endrow();
    for (size_t ep = 0; ep < records.size(); ++ep) {
        const TrajectoryRecord& r = records[ep];
        for (size_t i = 0; i < r.visited.size(); ++i) {
            const VisitEntry& v = r.visited[i];
            w.field(static_cast<long long>(ep)).field(static_cast<long long>(i));
            w.field(v.chosen_model);
            for (int m = 0; m < n_models; ++m)
                w.field(m < static_cast<int>(v.member_reliability.size())
                            ? v.member_reliability[m]
                            : 0.0);
            w.endrow();
        }
    }
    w.finish();
}

}  // namespace relq
