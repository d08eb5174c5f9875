#pragma once

// File outputs shared by the command-line tool and the tests: training
// artifacts, the evaluation report and single-episode traces.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "merge_rl/checkpoint.hpp"
#include "merge_rl/csv.hpp"
#include "merge_rl/eval.hpp"
#include "merge_rl/tasks.hpp"
#include "merge_rl/trainer.hpp"

namespace merge_rl {

namespace detail {

inline json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace detail

/// Rates and means are null when no episode was run.
inline json eval_report_to_json(const EvalReport& r, std::uint64_t seed) {
    json j;
    j["seed"] = seed;
    j["episodes"] = r.episodes;
    j["successes"] = r.successes;
    j["collisions"] = r.collisions;
    j["timeouts"] = r.timeouts;
    j["success_rate"] = detail::optional_number(r.success_rate);
    j["collision_rate"] = detail::optional_number(r.collision_rate);
    j["timeout_rate"] = detail::optional_number(r.timeout_rate);
    j["mean_return"] = detail::optional_number(r.mean_return);
    j["std_return"] = detail::optional_number(r.std_return);
    j["mean_merge_duration_s"] = detail::optional_number(r.mean_merge_duration_s);
    j["mean_min_front_gap_m"] = detail::optional_number(r.mean_min_front_gap);
    j["mean_min_back_gap_m"] = detail::optional_number(r.mean_min_back_gap);
    j["mean_abs_accel"] = detail::optional_number(r.mean_abs_accel);
    j["returns"] = r.returns;
    return j;
}

struct TrainingPaths {
    std::filesystem::path loss, episodes, checkpoint;

    explicit TrainingPaths(const std::filesystem::path& dir)
        : loss(dir / "loss.csv"), episodes(dir / "episodes.csv"), checkpoint(dir / "checkpoint.json") {}
};

inline void write_training_outputs(const TrainOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const TrainingPaths paths(dir);
    {
        auto f = csv::open(paths.loss);
        csv::write_loss(f, out.metrics.loss_log);
    }
    {
        auto f = csv::open(paths.episodes);
        csv::write_episodes(f, out.metrics.episodes);
    }
    save_checkpoint(out.nets, paths.checkpoint);
}

/// Greedy episode on the merge task, one row per vehicle after every tick.
inline EvalEpisode write_trace(MergeTask& task, const QNet& q, std::uint64_t seed, int k, double gamma,
                               std::ostream& os) {
    csv::write_trace_header(os);
    return run_greedy_episode(task, q, seed, k, gamma, 1'000'000,
                              [&](double, const TickResult&) { csv::write_trace_rows(os, task.env().world()); });
}

}  // namespace merge_rl
