#pragma once

#include <algorithm>
#include <cmath>

#include "merge_rl/errors.hpp"

namespace merge_rl {

/// Weights and shape parameters of the penalty-style immediate reward.
///
/// The front distance term carries more weight than the back one and the
/// speed term carries the least; validate() enforces that ordering.
struct RewardWeights {
    double w_accel = 0.5;
    double w_front = 2.0;
    double w_back = 1.0;
    double w_speed = 0.2;
    double d_min = 2.0;
    double d_safe = 15.0;
    double v_lo = 25.0;
    double v_hi = 29.0576;
    double activation_distance = 100.0;

    void validate() const {
        if (w_accel < 0 || w_front < 0 || w_back < 0 || w_speed < 0)
            throw ConfigError("reward weights must be non-negative");
        if (!(w_front > w_back))
            throw ConfigError("reward.w_front must exceed reward.w_back");
        if (w_speed > std::min({w_accel, w_front, w_back}))
            throw ConfigError("reward.w_speed must be the smallest weight");
        if (!(d_min < d_safe)) throw ConfigError("reward.d_min must be below reward.d_safe");
        if (!(v_lo < v_hi)) throw ConfigError("reward.v_lo must be below reward.v_hi");
        if (!(v_lo > 0)) throw ConfigError("reward.v_lo must be positive");
        if (activation_distance < 0) throw ConfigError("reward.activation_distance must be non-negative");
    }
};

/// Four-way decomposition of one immediate reward. `total` is always the
/// plain sum of the four components.
struct RewardBreakdown {
    double r_accel = 0.0;
    double r_front = 0.0;
    double r_back = 0.0;
    double r_speed = 0.0;
    double total = 0.0;

    void recompute_total() { total = r_accel + r_front + r_back + r_speed; }

    RewardBreakdown& operator+=(const RewardBreakdown& o) {
        r_accel += o.r_accel;
        r_front += o.r_front;
        r_back += o.r_back;
        r_speed += o.r_speed;
        recompute_total();
        return *this;
    }
};

struct DistanceReward {
    double r_front = 0.0;
    double r_back = 0.0;
};

inline double r_accel(double a, const RewardWeights& w = {}) { return -w.w_accel * std::abs(a); }

/// Distance shaping g(d): zero beyond d_safe, quadratic ramp to 1 at d_min,
/// then linear growth below d_min so it stays finite through a collision.
inline double distance_penalty_shape(double d, const RewardWeights& w = {}) {
    if (d >= w.d_safe) return 0.0;
    if (d >= w.d_min) {
        const double u = (w.d_safe - d) / (w.d_safe - w.d_min);
        return u * u;
    }
    return 1.0 + (w.d_min - d);
}

inline DistanceReward r_distance(double d_front, double d_back, bool active, const RewardWeights& w = {}) {
    if (!active) return {};
    return {-w.w_front * distance_penalty_shape(d_front, w), -w.w_back * distance_penalty_shape(d_back, w)};
}

/// Polygonal speed penalty: zero inside [v_lo, v_hi], linear outside.
inline double speed_penalty(double v, const RewardWeights& w = {}) {
    if (v < w.v_lo) return (w.v_lo - v) / w.v_lo;
    if (v > w.v_hi) return (v - w.v_hi) / w.v_hi;
    return 0.0;
}

inline double r_speed(double v, const RewardWeights& w = {}) { return -w.w_speed * speed_penalty(v, w); }

/// Reward from raw quantities. The world-level entry point lives in merge_env.hpp.
inline RewardBreakdown compose_reward(double a, double v, double d_front, double d_back, bool active,
                                      const RewardWeights& w = {}) {
    RewardBreakdown out;
    out.r_accel = r_accel(a, w);
    const auto d = r_distance(d_front, d_back, active, w);
    out.r_front = d.r_front;
    out.r_back = d.r_back;
    out.r_speed = r_speed(v, w);
    out.recompute_total();
    return out;
}

}  // namespace merge_rl
