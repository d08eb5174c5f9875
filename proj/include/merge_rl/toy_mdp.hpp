#pragma once

// One-dimensional speed-tracking MDP. Small enough to solve exactly by value
// iteration, so it serves as the reference problem for the learner.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/reward.hpp"

namespace merge_rl {

struct ToyMdpConfig {
    double dt = 0.1;
    double v_max = kSpeedLimit;
    int episode_length = 100;
    RewardWeights weights;  // w_accel, w_speed, v_lo, v_hi are used
};

struct ToyMdpState {
    double v = 0.0;
    int steps = 0;

    bool operator==(const ToyMdpState&) const = default;
};

struct ToyStepResult {
    ToyMdpState state;
    double reward = 0.0;
    bool terminal = false;
};

inline double toy_next_speed(double v, double a, const ToyMdpConfig& cfg = {}) {
    return std::clamp(v + a * cfg.dt, 0.0, cfg.v_max);
}

inline double toy_reward(double a, double v_next, const ToyMdpConfig& cfg = {}) {
    return -cfg.weights.w_accel * std::abs(a) - cfg.weights.w_speed * speed_penalty(v_next, cfg.weights);
}

inline ToyMdpState toy_reset(std::uint64_t seed, const ToyMdpConfig& cfg = {}) {
    Rng rng(seed);
    return {uniform(rng, 0.0, cfg.v_max), 0};
}

inline ToyStepResult toy_step(const ToyMdpState& s, double a, const ToyMdpConfig& cfg = {}) {
    if (!std::isfinite(a) || !accel_in_range(a)) throw UsageError("toy action outside [-4.5, 2.5]");
    ToyStepResult out;
    out.state.v = toy_next_speed(s.v, a, cfg);
    out.state.steps = s.steps + 1;
    out.reward = toy_reward(a, out.state.v, cfg);
    out.terminal = out.state.steps >= cfg.episode_length;
    return out;
}

}  // namespace merge_rl
