#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "merge_rl/qfunction.hpp"
#include "merge_rl/tasks.hpp"
#include "merge_rl/trainer.hpp"

namespace merge_rl {

/// Discounted return sum_k gamma^(k-1) r_k over per-block rewards.
inline double episode_return(std::span<const double> rewards, double gamma) {
    double g = 0.0;
    double w = 1.0;
    for (double r : rewards) {
        g += w * r;
        w *= gamma;
    }
    return g;
}

struct EvalReport {
    std::int64_t episodes = 0;
    std::int64_t successes = 0;
    std::int64_t collisions = 0;
    std::int64_t timeouts = 0;
    // Undefined (nullopt) when no episode was run.
    std::optional<double> success_rate;
    std::optional<double> collision_rate;
    std::optional<double> timeout_rate;
    std::optional<double> mean_return;
    std::optional<double> std_return;
    std::optional<double> mean_merge_duration_s;
    std::optional<double> mean_min_front_gap;
    std::optional<double> mean_min_back_gap;
    std::optional<double> mean_abs_accel;
    std::vector<double> returns;
};

struct EvalEpisode {
    EpisodeRecord record;
    std::vector<double> block_rewards;
    double discounted_return = 0.0;
};

/// Runs one greedy episode (no exploration noise, k-tick hold retained).
template <LearningTask Task, class OnTick>
EvalEpisode run_greedy_episode(Task& task, const QNet& q, std::uint64_t seed, int k, double gamma,
                               std::int64_t max_ticks, OnTick&& on_tick) {
    task.reset(seed);
    EpisodeAccumulator acc;
    EvalEpisode ep;
    std::int64_t ticks = 0;
    bool done = false;
    while (!done && ticks < max_ticks) {
        const double a = optimal_action(q, task.state());
        const auto block = run_block(task, a, k, [&](const TickResult& t) {
            acc.add(a, t);
            on_tick(a, t);
        });
        ticks += block.ticks;
        ep.block_rewards.push_back(block.reward.total);
        done = block.terminal;
    }
    ep.record = acc.finish(0);
    ep.discounted_return = episode_return(ep.block_rewards, gamma);
    return ep;
}

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline std::optional<double> mean_finite(const std::vector<double>& xs) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : xs)
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

}  // namespace detail

inline EvalReport summarize(const std::vector<EvalEpisode>& eps) {
    EvalReport rep;
    rep.episodes = static_cast<std::int64_t>(eps.size());
    if (eps.empty()) return rep;
    std::vector<double> durations, front, back, accel;
    for (const auto& e : eps) {
        switch (e.record.outcome) {
            case EpisodeStatus::Success: ++rep.successes; break;
            case EpisodeStatus::Collision: ++rep.collisions; break;
            default: ++rep.timeouts; break;
        }
        rep.returns.push_back(e.discounted_return);
        durations.push_back(e.record.merge_duration_s);
        front.push_back(e.record.min_front_gap);
        back.push_back(e.record.min_back_gap);
        accel.push_back(e.record.mean_abs_accel);
    }
    const double n = static_cast<double>(eps.size());
    rep.success_rate = static_cast<double>(rep.successes) / n;
    rep.collision_rate = static_cast<double>(rep.collisions) / n;
    // Computed as the remainder so the three rates sum to exactly 1.
    rep.timeout_rate = 1.0 - *rep.success_rate - *rep.collision_rate;
    const double mu = detail::mean_of(rep.returns);
    double var = 0.0;
    for (double g : rep.returns) var += (g - mu) * (g - mu);
    rep.mean_return = mu;
    rep.std_return = std::sqrt(var / n);
    rep.mean_merge_duration_s = detail::mean_of(durations);
    rep.mean_min_front_gap = detail::mean_finite(front);
    rep.mean_min_back_gap = detail::mean_finite(back);
    rep.mean_abs_accel = detail::mean_of(accel);
    return rep;
}

/// Greedy evaluation over n episodes; episode i uses seed + i.
template <LearningTask Task>
EvalReport evaluate(Task& task, const QNet& q, std::int64_t n, std::uint64_t seed, int k, double gamma,
                    std::int64_t max_ticks = 1'000'000) {
    std::vector<EvalEpisode> eps;
    for (std::int64_t i = 0; i < n; ++i) {
        auto ep = run_greedy_episode(task, q, seed + static_cast<std::uint64_t>(i), k, gamma, max_ticks,
                                     [](double, const TickResult&) {});
        ep.record.episode = i;
        eps.push_back(std::move(ep));
    }
    return summarize(eps);
}

}  // namespace merge_rl
