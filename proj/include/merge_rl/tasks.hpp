#pragma once

// Adapters that expose an environment to the learner as a normalized state
// vector plus a one-tick transition. The trainer and the evaluator are
// written against the LearningTask concept below.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <vector>

#include "merge_rl/merge_env.hpp"
#include "merge_rl/qfunction.hpp"
#include "merge_rl/reward.hpp"
#include "merge_rl/toy_mdp.hpp"

namespace merge_rl {

struct TickResult {
    RewardBreakdown reward;
    bool terminal = false;
    EpisodeStatus status = EpisodeStatus::Running;
    double front_gap = std::numeric_limits<double>::quiet_NaN();
    double back_gap = std::numeric_limits<double>::quiet_NaN();
    double dt = 0.0;
};

template <class T>
concept LearningTask = requires(T task, const T& ctask, std::uint64_t seed, double a) {
    task.reset(seed);
    { ctask.state() } -> std::convertible_to<std::vector<double>>;
    { task.tick(a) } -> std::same_as<TickResult>;
};

class MergeTask {
public:
    explicit MergeTask(EnvConfig env = {}, RewardWeights weights = {})
        : env_(env, weights), norm_{env.geometry.speed_limit, env.geometry.sensing_range, env.geometry.merge_point_x} {}

    void reset(std::uint64_t seed) { env_.reset(seed); }

    std::vector<double> state() const { return normalize(env_.observation(), norm_); }

    TickResult tick(double a) {
        const auto step = env_.step(a);
        const auto& w = env_.world();
        const auto n = gap_neighbors(w);
        return {step.reward, step.terminal, step.status, front_gap(w, n), back_gap(w, n), env_.config().traffic.dt};
    }

    const MergeEnv& env() const { return env_; }

private:
    MergeEnv env_;
    NormalizationConstants norm_;
};

/// Speed-tracking toy problem; state is the speed over its upper bound.
class ToyTask {
public:
    explicit ToyTask(ToyMdpConfig cfg = {}) : cfg_(cfg) {}

    void reset(std::uint64_t seed) { state_ = toy_reset(seed, cfg_); }

    std::vector<double> state() const { return {state_.v / cfg_.v_max}; }

    TickResult tick(double a) {
        const auto r = toy_step(state_, a, cfg_);
        state_ = r.state;
        TickResult out;
        out.reward.r_accel = -cfg_.weights.w_accel * std::abs(a);
        out.reward.r_speed = -cfg_.weights.w_speed * speed_penalty(state_.v, cfg_.weights);
        out.reward.recompute_total();
        out.terminal = r.terminal;
        out.status = r.terminal ? EpisodeStatus::Success : EpisodeStatus::Running;
        out.dt = cfg_.dt;
        return out;
    }

    const ToyMdpState& raw_state() const { return state_; }
    const ToyMdpConfig& config() const { return cfg_; }

private:
    ToyMdpConfig cfg_;
    ToyMdpState state_;
};

static_assert(LearningTask<MergeTask>);
static_assert(LearningTask<ToyTask>);

/// Per-episode summary shared by training logs and evaluation.
struct EpisodeRecord {
    std::int64_t episode = 0;
    EpisodeStatus outcome = EpisodeStatus::Running;
    std::int64_t steps = 0;
    RewardBreakdown reward;
    double merge_duration_s = 0.0;
    double min_front_gap = std::numeric_limits<double>::quiet_NaN();
    double min_back_gap = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_accel = 0.0;
};

class EpisodeAccumulator {
public:
    void add(double a, const TickResult& t) {
        reward_ += t.reward;
        ++steps_;
        elapsed_ += t.dt;
        abs_accel_sum_ += std::abs(a);
        if (!std::isnan(t.front_gap)) min_front_ = std::min(min_front_, t.front_gap);
        if (!std::isnan(t.back_gap)) min_back_ = std::min(min_back_, t.back_gap);
        status_ = t.status;
    }

    EpisodeRecord finish(std::int64_t index) const {
        EpisodeRecord r;
        r.episode = index;
        r.outcome = status_;
        r.steps = steps_;
        r.reward = reward_;
        r.merge_duration_s = elapsed_;
        r.min_front_gap = std::isinf(min_front_) ? std::numeric_limits<double>::quiet_NaN() : min_front_;
        r.min_back_gap = std::isinf(min_back_) ? std::numeric_limits<double>::quiet_NaN() : min_back_;
        r.mean_abs_accel = steps_ > 0 ? abs_accel_sum_ / static_cast<double>(steps_) : 0.0;
        return r;
    }

private:
    RewardBreakdown reward_;
    std::int64_t steps_ = 0;
    double elapsed_ = 0.0;
    double abs_accel_sum_ = 0.0;
    double min_front_ = std::numeric_limits<double>::infinity();
    double min_back_ = std::numeric_limits<double>::infinity();
    EpisodeStatus status_ = EpisodeStatus::Running;
};

}  // namespace merge_rl
