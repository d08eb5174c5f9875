#pragma once

// Replay / target-network training loop with k-tick action hold.
//
// Env steps i = 1..N are single simulator ticks. A block starts whenever the
// previous one ended; it holds one noisy greedy action for k ticks (fewer if
// the episode ends) and yields one transition whose reward is the plain sum
// of the per-tick rewards. Every finished block triggers one gradient update
// once the memory holds M transitions. The target copy is refreshed at env
// steps p, 2p, ...

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/qfunction.hpp"
#include "merge_rl/replay.hpp"
#include "merge_rl/tasks.hpp"

namespace merge_rl {

struct TrainConfig {
    std::int64_t total_steps = 300'000;  // N
    double dt = 0.1;
    int action_hold = 4;                 // k
    std::size_t batch_size = 32;         // M
    std::int64_t target_sync_every = 500;  // p
    double gamma = 0.95;
    double learning_rate = 0.001;        // alpha
    double sigma_start = 1.0;
    double sigma_min = 0.05;
    double decay_fraction = 0.7;
    std::uint64_t seed = 1;
    int loss_log_stride = 5;
    std::size_t replay_capacity = 100'000;

    void validate() const {
        if (total_steps < 0) throw ConfigError("train.total_steps must be non-negative");
        if (!(dt > 0)) throw ConfigError("train.dt must be positive");
        if (action_hold < 1) throw ConfigError("train.action_hold must be >= 1");
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        if (target_sync_every < 1) throw ConfigError("train.target_sync_every must be >= 1");
        if (!(gamma > 0 && gamma < 1)) throw ConfigError("train.gamma must lie in (0, 1)");
        if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
        if (!(sigma_min >= 0 && sigma_start >= sigma_min)) throw ConfigError("train noise needs sigma_start >= sigma_min >= 0");
        if (!(decay_fraction >= 0)) throw ConfigError("train.decay_fraction must be non-negative");
        if (loss_log_stride < 1) throw ConfigError("train.loss_log_stride must be >= 1");
        if (replay_capacity < batch_size) throw ConfigError("train.replay_capacity must be at least batch_size");
    }
};

/// Exploration scale: linear from sigma_start to sigma_min over the first
/// decay_fraction * N steps, flat afterwards.
inline double sigma_at(std::int64_t step, const TrainConfig& cfg) {
    const double horizon = cfg.decay_fraction * static_cast<double>(cfg.total_steps);
    if (horizon <= 0.0 || static_cast<double>(step) >= horizon) return cfg.sigma_min;
    const double f = static_cast<double>(step) / horizon;
    return cfg.sigma_start + (cfg.sigma_min - cfg.sigma_start) * f;
}

inline double explore_action(double a_star, double sigma, Rng& rng) {
    if (sigma <= 0.0) return std::clamp(a_star, kAccelMin, kAccelMax);
    const double eps = std::normal_distribution<double>(0.0, sigma)(rng);
    return std::clamp(a_star + eps, kAccelMin, kAccelMax);
}

struct BlockResult {
    RewardBreakdown reward;
    std::vector<double> s_next;
    bool terminal = false;
    int ticks = 0;
};

/// Holds `a` for up to k ticks. `on_tick` sees every tick (episode bookkeeping, traces).
template <LearningTask Task, class OnTick>
BlockResult run_block(Task& task, double a, int k, OnTick&& on_tick) {
    BlockResult out;
    for (int i = 0; i < k; ++i) {
        const TickResult t = task.tick(a);
        out.reward += t.reward;
        ++out.ticks;
        on_tick(t);
        if (t.terminal) {
            out.terminal = true;
            break;
        }
    }
    out.s_next = task.state();
    return out;
}

template <LearningTask Task>
BlockResult run_block(Task& task, double a, int k) {
    return run_block(task, a, k, [](const TickResult&) {});
}

struct LossRecord {
    std::int64_t update_index = 0;
    std::int64_t env_step = 0;
    double loss = 0.0;
};

struct TrainMetrics {
    std::vector<LossRecord> loss_log;
    std::vector<EpisodeRecord> episodes;
    std::int64_t updates = 0;
    std::int64_t transitions = 0;
    std::int64_t target_syncs = 0;
    std::int64_t env_resets = 0;
    std::vector<std::int64_t> sync_steps;
};

struct TrainOutput {
    QTargetPair nets;
    TrainMetrics metrics;
};

/// Random streams used by one training run, all derived from the run seed.
struct TrainStreams {
    static std::uint64_t init(std::uint64_t seed) { return mix_seed(seed, 1); }
    static std::uint64_t noise(std::uint64_t seed) { return mix_seed(seed, 2); }
    static std::uint64_t replay(std::uint64_t seed) { return mix_seed(seed, 3); }
    static std::uint64_t episode(std::uint64_t seed, std::int64_t index) {
        return mix_seed(seed, 1000 + static_cast<std::uint64_t>(index));
    }
};

using EpisodeCallback = std::function<void(const EpisodeRecord&, std::int64_t env_step)>;

template <LearningTask Task>
TrainOutput train(const TrainConfig& cfg, const QNetConfig& net_cfg, Task& task,
                  const EpisodeCallback& on_episode = {}) {
    cfg.validate();
    net_cfg.validate();

    Rng init_rng(TrainStreams::init(cfg.seed));
    Rng noise_rng(TrainStreams::noise(cfg.seed));
    Rng replay_rng(TrainStreams::replay(cfg.seed));

    TrainOutput out{init_pair(net_cfg, init_rng), {}};
    auto& nets = out.nets;
    auto& metrics = out.metrics;
    ReplayBuffer memory(cfg.replay_capacity);

    std::int64_t episode_index = 0;
    task.reset(TrainStreams::episode(cfg.seed, episode_index));
    metrics.env_resets = 1;
    EpisodeAccumulator episode;

    bool block_open = false;
    std::vector<double> block_state;
    double block_action = 0.0;
    RewardBreakdown block_reward;
    int block_ticks = 0;

    for (std::int64_t i = 1; i <= cfg.total_steps; ++i) {
        if (!block_open) {
            block_state = task.state();
            const double a_star = optimal_action(nets.prediction, block_state);
            block_action = explore_action(a_star, sigma_at(i - 1, cfg), noise_rng);
            block_reward = {};
            block_ticks = 0;
            block_open = true;
        }

        const TickResult tick = task.tick(block_action);
        episode.add(block_action, tick);
        block_reward += tick.reward;
        ++block_ticks;

        if (tick.terminal || block_ticks == cfg.action_hold) {
            memory.push({block_state, block_action, block_reward.total, task.state(), tick.terminal});
            ++metrics.transitions;
            block_open = false;

            if (memory.size() >= cfg.batch_size) {
                const auto batch = memory.sample(cfg.batch_size, replay_rng);
                auto lg = loss_and_grads(nets, batch, cfg.gamma);
                if (!std::isfinite(lg.loss))
                    throw NumericError("non-finite loss at env step " + std::to_string(i));
                try {
                    apply_sgd(nets.prediction, lg.grads, cfg.learning_rate);
                } catch (const NumericError& e) {
                    throw NumericError(std::string(e.what()) + " at env step " + std::to_string(i));
                }
                ++metrics.updates;
                if (metrics.updates % cfg.loss_log_stride == 0) metrics.loss_log.push_back({metrics.updates, i, lg.loss});
            }

            if (tick.terminal) {
                auto rec = episode.finish(episode_index);
                metrics.episodes.push_back(rec);
                if (on_episode) on_episode(rec, i);
                ++episode_index;
                task.reset(TrainStreams::episode(cfg.seed, episode_index));
                ++metrics.env_resets;
                episode = {};
            }
        }

        if (i % cfg.target_sync_every == 0) {
            sync_target(nets);
            ++metrics.target_syncs;
            metrics.sync_steps.push_back(i);
        }
    }
    return out;
}

}  // namespace merge_rl
