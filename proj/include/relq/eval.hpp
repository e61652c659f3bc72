#pragma once

#include <array>
#include <string>
#include <vector>

#include "relq/dqn.hpp"
#include "relq/env.hpp"

namespace relq {

// Reliability head driving goal-ratio binning and model switching.
enum class ScoreHead { Raw, Features, Both };

ScoreHead score_head_from_name(const std::string& s);
const char* score_head_name(ScoreHead h);

// All six per-state scores (both quantifiers, both inputs, and their means).
struct StateScores {
    double rel_raw = 0;
    double rel_feat = 0;
    double rel_both = 0;
    double rnd_raw = 0;
    double rnd_feat = 0;
    double rnd_both = 0;

    double reliability(ScoreHead h) const {
        switch (h) {
            case ScoreHead::Raw: return rel_raw;
            case ScoreHead::Features: return rel_feat;
            case ScoreHead::Both: return rel_both;
        }
        return rel_both;
    }
};

StateScores score_state(const ModelBundle& b, const StackedObservation& obs);

// One visited state of an evaluation rollout. The last entry of a trajectory
// is the final state and carries no action (action = -1).
struct VisitEntry {
    AgentState state;
    StateScores scores;
    int action = -1;
    double reward = 0;
    bool reached_goal = false;
    bool exited = false;
    bool episode_done = false;
    int chosen_model = -1;                    // switching rollouts only
    std::vector<double> member_reliability;   // switching rollouts only
};

struct TrajectoryRecord {
    double init_x = 0;
    double init_y = 0;
    std::vector<VisitEntry> visited;  // length steps_taken + 1
    bool reached_goal = false;

    int steps_taken() const { return static_cast<int>(visited.size()) - 1; }
    const StateScores& initial_scores() const { return visited.front().scores; }
};

// Greedy evaluation rollout: the episode ends only at the goal or at
// max_steps, never on exit.
TrajectoryRecord rollout(const ModelBundle& b, const AgentState& initial,
                         const EnvConfig& env_cfg);

// 21 x 21 grid of Eq-13 initial positions, x and y in {-700, -630, ..., 700}.
inline constexpr int kGridSide = 21;
inline constexpr double kGridPitch = 70.0;
inline constexpr double kGridMin = -700.0;

std::vector<AgentState> evaluation_grid_starts();

// 70 x 70 spatial bins over [-735, 735]^2; running mean of a score over
// visits. Visits outside the bound are dropped.
class SpatialMap {
  public:
    void add(double x, double y, double value);
    void merge(const SpatialMap& other);
    bool visited(int ix, int iy) const { return count_[iy][ix] > 0; }
    double mean(int ix, int iy) const { return sum_[iy][ix] / count_[iy][ix]; }
    long count(int ix, int iy) const { return count_[iy][ix]; }
    static double bin_center(int i) { return kGridMin + kGridPitch * i; }

  private:
    std::array<std::array<double, kGridSide>, kGridSide> sum_{};
    std::array<std::array<long, kGridSide>, kGridSide> count_{};
};

inline constexpr int kScoreKinds = 6;
extern const std::array<const char*, kScoreKinds> kScoreNames;
double score_by_index(const StateScores& s, int kind);

struct GridEvalResult {
    std::vector<TrajectoryRecord> records;            // 441, fixed y-outer order
    std::array<SpatialMap, kScoreKinds> maps;         // indexed like kScoreNames
};

GridEvalResult evaluate_grid(const ModelBundle& b, const EnvConfig& env_cfg);

// Goal-reach ratio binned by the reliability of the initial state; 10 equal
// bins over [0,1).
struct GoalRatioTable {
    std::array<long, 10> count{};
    std::array<long, 10> goals{};

    double ratio(int bin) const {
        return count[bin] ? static_cast<double>(goals[bin]) / count[bin] : 0.0;
    }
};

GoalRatioTable goal_ratio_by_reliability(const std::vector<TrajectoryRecord>& records,
                                         ScoreHead head);

// Per-step max-reliability switching over >= 2 model bundles (ties break to
// the lowest index). Scores each member's selected head on the current
// observation and executes the winner's greedy action.
TrajectoryRecord switching_rollout(const std::vector<const ModelBundle*>& ensemble,
                                   const AgentState& initial, const EnvConfig& env_cfg,
                                   ScoreHead head);

// CSV artifacts. All floats printed with 9 significant digits.
void write_grid_results_csv(const std::string& path, const GridEvalResult& g);
void write_spatial_map_csv(const std::string& path, const SpatialMap& m);
void write_goal_ratio_csv(const std::string& path, const GoalRatioTable& t);
void write_trajectories_csv(const std::string& path,
                            const std::vector<TrajectoryRecord>& records);
void write_switch_trace_csv(const std::string& path,
                            const std::vector<TrajectoryRecord>& records, int n_models);

}  // namespace relq
