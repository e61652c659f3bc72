#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "relq/nn.hpp"
#include "relq/rng.hpp"

namespace relq {

// Goal-reaching point mass with linear drag. Physics runs in double.
struct EnvConfig {
    double mass = 10.0;
    double resistance_gain = 2.0;
    double force_magnitude = 10.0;
    double time_step = 1.0;
    double env_half_width = 400.0;
    double goal_radius = 10.0;
    int max_steps = 240;
    double goal_x = 0.0;
    double goal_y = 0.0;
    double init_radius_min = 200.0;
    double init_radius_max = 300.0;
    bool eval_mode = false;  // exiting the area does not end the episode
};

struct AgentState {
    double x = 0, y = 0;
    double vx = 0, vy = 0;
};

inline constexpr int kNumActions = 9;
inline constexpr int kFrameDim = 4;
inline constexpr int kFrameStack = 5;
inline constexpr int kObsDim = kFrameDim * kFrameStack;  // 20

using ObservationFrame = Eigen::Vector4d;
using StackedObservation = Eigen::Matrix<double, kObsDim, 1>;

// Index 0 is the null force; 1..8 are magnitude-10 forces at angles
// theta = (index-1) * pi/4, mapped as (f sin theta, f cos theta).
inline Eigen::Vector2d action_to_force(int index, const EnvConfig& cfg = {}) {
    if (index < 0 || index >= kNumActions) throw SpecError("action index outside [0,8]");
    if (index == 0) return {0.0, 0.0};
    const double theta = (index - 1) * (M_PI / 4.0);
    return {cfg.force_magnitude * std::sin(theta), cfg.force_magnitude * std::cos(theta)};
}

// Semi-implicit Euler: v' = v + dt (f - kappa v)/m, then x' = x + dt v'.
inline AgentState step_dynamics(const AgentState& s, const Eigen::Vector2d& force,
                                const EnvConfig& cfg) {
    AgentState n;
    n.vx = s.vx + cfg.time_step * (force.x() - cfg.resistance_gain * s.vx) / cfg.mass;
    n.vy = s.vy + cfg.time_step * (force.y() - cfg.resistance_gain * s.vy) / cfg.mass;
    n.x = s.x + cfg.time_step * n.vx;
    n.y = s.y + cfg.time_step * n.vy;
    return n;
}

inline double distance_to_goal(const AgentState& s, const EnvConfig& cfg) {
    return std::hypot(cfg.goal_x - s.x, cfg.goal_y - s.y);
}

// Per-step reward: deviation term, decrease bonus when the goal distance did
// not grow, and a -10 penalty on exit. The arccos argument is clamped to
// [-1,1]; a zero-speed step gets the minimum bonus 0.03.
inline double compute_reward(double d_t, double d_t1, double speed, bool exited,
                             const EnvConfig& cfg = {}) {
    double r = -d_t / (400.0 * std::sqrt(2.0)) - 0.1;
    if (d_t1 <= d_t) {
        double denom = std::max(speed * cfg.time_step, 1e-9);
        double c = std::clamp((d_t1 - d_t) / denom, -1.0, 1.0);
        r += 0.03 + 0.07 * std::abs(1.0 - std::acos(c) / (M_PI / 2.0));
    }
    if (exited) r += -10.0;
    return r;
}

// Scaled observation [vx/5, vy/5, dx/800, dy/800], goal-relative (goal - agent).
inline ObservationFrame observe(const AgentState& s, const EnvConfig& cfg) {
    return {s.vx / 5.0, s.vy / 5.0, (cfg.goal_x - s.x) / 800.0, (cfg.goal_y - s.y) / 800.0};
}

struct InitRegion {
    // 0 = full annulus; 1..4 = quadrant i (angle in [pi/2 (i-1), pi/2 i)).
    int quadrant = 0;
};

// Area-uniform draw over the 200..300 annulus (optionally one quadrant),
// zero velocity. Position is (d cos theta, d sin theta).
inline AgentState sample_initial_state(Rng& rng, const InitRegion& region,
                                       const EnvConfig& cfg = {}) {
    if (region.quadrant < 0 || region.quadrant > 4)
        throw SpecError("init region quadrant outside {0..4}");
    const double r0 = cfg.init_radius_min, r1 = cfg.init_radius_max;
    const double d = std::sqrt(rng.uniform(r0 * r0, r1 * r1));
    double theta;
    if (region.quadrant == 0) {
        theta = rng.uniform(0.0, 2.0 * M_PI);
    } else {
        theta = rng.uniform((M_PI / 2.0) * (region.quadrant - 1),
                            (M_PI / 2.0) * region.quadrant);
    }
    AgentState s;
    s.x = d * std::cos(theta);
    s.y = d * std::sin(theta);
    return s;
}

struct StepOutcome {
    AgentState next_state;
    double reward = 0;
    bool reached_goal = false;
    bool exited = false;
    bool episode_done = false;
};

inline StepOutcome env_step(const AgentState& s, int action, int step_count,
                            const EnvConfig& cfg) {
    const double d_t = distance_to_goal(s, cfg);
    StepOutcome o;
    o.next_state = step_dynamics(s, action_to_force(action, cfg), cfg);
    const double d_t1 = distance_to_goal(o.next_state, cfg);
    const double speed = std::hypot(o.next_state.vx, o.next_state.vy);
    o.exited = std::abs(o.next_state.x) > cfg.env_half_width ||
               std::abs(o.next_state.y) > cfg.env_half_width;
    o.reward = compute_reward(d_t, d_t1, speed, o.exited, cfg);
    o.reached_goal = d_t1 < cfg.goal_radius;
    o.episode_done = (step_count + 1 >= cfg.max_steps) || o.reached_goal ||
                     (o.exited && !cfg.eval_mode);
    return o;
}

// Rolling 5-frame window, newest first. Missing history at episode start is
// filled by repeating the initial frame.
class FrameStack {
  public:
    void reset(const ObservationFrame& first) {
        for (auto& f : frames_) f = first;
    }

    void push(const ObservationFrame& f) {
        for (int k = kFrameStack - 1; k > 0; --k) frames_[k] = frames_[k - 1];
        frames_[0] = f;
    }

    StackedObservation stacked() const {
        StackedObservation o;
        for (int k = 0; k < kFrameStack; ++k) o.segment<kFrameDim>(k * kFrameDim) = frames_[k];
        return o;
    }

  private:
    std::array<ObservationFrame, kFrameStack> frames_{};
};

}  // namespace relq
