#include <doctest.h>

#include <cmath>

#include "relq/env.hpp"

using namespace relq;

namespace {
const EnvConfig kCfg{};
constexpr double kTol = 1e-9;
}  // namespace

TEST_CASE("action_to_force covers the nine options") {
    CHECK(action_to_force(0).isZero(0));

    Eigen::Vector2d north = action_to_force(1);  // theta = 0
    CHECK(north.x() == doctest::Approx(0.0).epsilon(kTol));
    CHECK(north.y() == doctest::Approx(10.0).epsilon(kTol));

    Eigen::Vector2d east = action_to_force(3);  // theta = pi/2
    CHECK(east.x() == doctest::Approx(10.0).epsilon(kTol));
    CHECK(std::abs(east.y()) < kTol);

    for (int a = 1; a < kNumActions; ++a)
        CHECK(action_to_force(a).norm() == doctest::Approx(10.0).epsilon(kTol));

    CHECK_THROWS_AS(action_to_force(9), SpecError);
    CHECK_THROWS_AS(action_to_force(-1), SpecError);
}

TEST_CASE("step_dynamics hand-derived cases") {
    AgentState s{100, 0, 0, 0};
    AgentState n = step_dynamics(s, {10, 0}, kCfg);
    CHECK(n.vx == doctest::Approx(1.0).epsilon(kTol));
    CHECK(n.vy == 0.0);
    CHECK(n.x == doctest::Approx(101.0).epsilon(kTol));

    // force balancing drag: v unchanged, position advances by v dt
    AgentState m{0, 0, 3, -1};
    AgentState m2 = step_dynamics(m, {2 * 3, 2 * -1}, kCfg);
    CHECK(m2.vx == doctest::Approx(3.0).epsilon(kTol));
    CHECK(m2.vy == doctest::Approx(-1.0).epsilon(kTol));
    CHECK(m2.x == doctest::Approx(3.0).epsilon(kTol));
    CHECK(m2.y == doctest::Approx(-1.0).epsilon(kTol));

    AgentState d{0, 0, 1, 0};
    AgentState d2 = step_dynamics(d, {0, 0}, kCfg);
    CHECK(d2.vx == doctest::Approx(0.8).epsilon(kTol));
}

TEST_CASE("distance_to_goal") {
    CHECK(distance_to_goal({0, 0, 0, 0}, kCfg) == 0.0);
    CHECK(distance_to_goal({300, 400, 0, 0}, kCfg) == doctest::Approx(500.0).epsilon(kTol));
    CHECK(distance_to_goal({400, 400, 0, 0}, kCfg) ==
          doctest::Approx(400.0 * std::sqrt(2.0)).epsilon(kTol));
}

TEST_CASE("compute_reward hand-derived cases") {
    const double dmax = 400.0 * std::sqrt(2.0);

    // distance grew: deviation term only
    CHECK(compute_reward(dmax, dmax + 1, 1.0, false) == doctest::Approx(-1.1).epsilon(kTol));
    CHECK(compute_reward(0.0, 5.0, 5.0, false) == doctest::Approx(-0.1).epsilon(kTol));

    // straight at the goal: c = -1, decrease bonus is the full 0.10
    const double r = compute_reward(1.0, 0.0, 1.0, false);
    CHECK(r == doctest::Approx(-1.0 / dmax - 0.1 + 0.10).epsilon(kTol));

    // tangent motion: c = 0, bonus is the floor 0.03
    CHECK(compute_reward(100.0, 100.0, 4.0, false) ==
          doctest::Approx(-100.0 / dmax - 0.1 + 0.03).epsilon(kTol));

    // zero-speed step with unchanged distance also gets the floor
    CHECK(compute_reward(0.0, 0.0, 0.0, false) == doctest::Approx(-0.07).epsilon(kTol));

    // exit penalty stacks on top
    CHECK(compute_reward(100.0, 150.0, 5.0, true) ==
          doctest::Approx(-100.0 / dmax - 0.1 - 10.0).epsilon(kTol));
}

TEST_CASE("reward bounds and branch property") {
    Rng rng(17);
    for (int i = 0; i < 5000; ++i) {
        const double d_t = rng.uniform(0, 400.0 * std::sqrt(2.0));
        const double d_t1 = rng.uniform(0, 400.0 * std::sqrt(2.0));
        const double speed = rng.uniform(0, 5);
        const double r = compute_reward(d_t, d_t1, speed, false);
        const double r_dev = -d_t / (400.0 * std::sqrt(2.0)) - 0.1;
        CHECK(r_dev >= -1.1 - kTol);
        CHECK(r_dev <= -0.1 + kTol);
        if (d_t1 > d_t) {
            CHECK(r == doctest::Approx(r_dev).epsilon(1e-12));  // no decrease bonus
        } else {
            CHECK(r - r_dev >= 0.03 - kTol);
            CHECK(r - r_dev <= 0.10 + kTol);
        }
        CHECK(r <= 0.0 + kTol);
        CHECK(r >= -1.1 - kTol);
    }
}

TEST_CASE("observe scaling and sign convention") {
    ObservationFrame at_rest = observe({0, 0, 0, 0}, kCfg);
    CHECK(at_rest.isZero(0));

    ObservationFrame f = observe({-800, 0, 5, 0}, kCfg);
    CHECK(f(0) == doctest::Approx(1.0).epsilon(kTol));
    CHECK(f(1) == 0.0);
    CHECK(f(2) == doctest::Approx(1.0).epsilon(kTol));
    CHECK(f(3) == 0.0);

    ObservationFrame g = observe({400, -400, 0, 0}, kCfg);
    CHECK(g(2) == doctest::Approx(-0.5).epsilon(kTol));
    CHECK(g(3) == doctest::Approx(0.5).epsilon(kTol));
}

TEST_CASE("sample_initial_state annulus and quadrants") {
    Rng rng(23);
    for (int i = 0; i < 2000; ++i) {
        AgentState s = sample_initial_state(rng, {}, kCfg);
        const double d = distance_to_goal(s, kCfg);
        CHECK(d >= 200.0 - kTol);
        CHECK(d <= 300.0 + kTol);
        CHECK(s.vx == 0.0);
        CHECK(s.vy == 0.0);
    }
    for (int q = 1; q <= 4; ++q) {
        for (int i = 0; i < 500; ++i) {
            AgentState s = sample_initial_state(rng, {q}, kCfg);
            const double theta = std::atan2(s.y, s.x);
            const double wrapped = theta < 0 ? theta + 2 * M_PI : theta;
            CHECK(wrapped >= (M_PI / 2) * (q - 1) - 1e-12);
            CHECK(wrapped < (M_PI / 2) * q + 1e-12);
            if (q == 1) {
                CHECK(s.x >= 0.0);
                CHECK(s.y >= 0.0);
            }
        }
    }
    CHECK_THROWS_AS(sample_initial_state(rng, {5}, kCfg), SpecError);
}

TEST_CASE("annulus angles are uniform over 8 bins within 3 sigma") {
    Rng rng(29);
    const int n = 10000;
    int hist[8] = {};
    for (int i = 0; i < n; ++i) {
        AgentState s = sample_initial_state(rng, {}, kCfg);
        double theta = std::atan2(s.y, s.x);
        if (theta < 0) theta += 2 * M_PI;
        hist[static_cast<int>(theta / (M_PI / 4)) % 8] += 1;
    }
    const double expect = n / 8.0;
    const double sigma = std::sqrt(n * (1.0 / 8) * (7.0 / 8));
    for (int b = 0; b < 8; ++b) CHECK(std::abs(hist[b] - expect) < 3 * sigma);
}

TEST_CASE("env_step termination rules") {
    // close enough that one step lands inside the goal radius
    AgentState near_goal{10.0, 0, -4.9, 0};
    StepOutcome o = env_step(near_goal, 0, 5, kCfg);
    CHECK(distance_to_goal(o.next_state, kCfg) < 10.0);
    CHECK(o.reached_goal);
    CHECK(o.episode_done);

    AgentState anywhere{250, 100, 0, 0};
    StepOutcome timeout = env_step(anywhere, 0, 239, kCfg);
    CHECK(timeout.episode_done);
    CHECK_FALSE(timeout.reached_goal);

    // learning mode: exit terminates; eval mode: it does not
    AgentState edge{399.5, 0, 4.9, 0};
    StepOutcome exit_learn = env_step(edge, 3, 5, kCfg);
    CHECK(exit_learn.exited);
    CHECK(exit_learn.episode_done);
    CHECK(exit_learn.reward < -10.0);

    EnvConfig eval_cfg = kCfg;
    eval_cfg.eval_mode = true;
    StepOutcome exit_eval = env_step(edge, 3, 5, eval_cfg);
    CHECK(exit_eval.exited);
    CHECK_FALSE(exit_eval.episode_done);
    CHECK(exit_eval.reward < -10.0);
}

TEST_CASE("speed never exceeds the steady-state bound") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        AgentState s = sample_initial_state(rng, {}, kCfg);
        for (int step = 0; step < 500; ++step) {
            const int action = static_cast<int>(rng.uniform_index(kNumActions));
            s = step_dynamics(s, action_to_force(action), kCfg);
            CHECK(std::hypot(s.vx, s.vy) <= 5.0 + 1e-9);
        }
    }
}

TEST_CASE("observation components stay in [-1,1] inside the env at legal speeds") {
    Rng rng(43);
    for (int i = 0; i < 2000; ++i) {
        AgentState s{rng.uniform(-400, 400), rng.uniform(-400, 400), 0, 0};
        const double sp = rng.uniform(0, 5);
        const double ang = rng.uniform(0, 2 * M_PI);
        s.vx = sp * std::cos(ang);
        s.vy = sp * std::sin(ang);
        ObservationFrame f = observe(s, kCfg);
        CHECK(f.cwiseAbs().maxCoeff() <= 1.0 + kTol);
    }
}

TEST_CASE("dynamics are exactly deterministic") {
    AgentState s{123.4, -56.7, 1.2, -0.4};
    AgentState a = step_dynamics(s, action_to_force(4), kCfg);
    AgentState b = step_dynamics(s, action_to_force(4), kCfg);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.vx == b.vx);
    CHECK(a.vy == b.vy);
}

TEST_CASE("frame stack bootstraps by repetition, newest first") {
    FrameStack fs;
    ObservationFrame f0{0.1, 0.2, 0.3, 0.4};
    fs.reset(f0);
    StackedObservation o = fs.stacked();
    for (int k = 0; k < kFrameStack; ++k)
        CHECK((o.segment<kFrameDim>(k * kFrameDim) - f0).isZero(0));

    ObservationFrame f1{0.5, 0.6, 0.7, 0.8};
    fs.push(f1);
    o = fs.stacked();
    CHECK((o.segment<kFrameDim>(0) - f1).isZero(0));
    CHECK((o.segment<kFrameDim>(4) - f0).isZero(0));
}
