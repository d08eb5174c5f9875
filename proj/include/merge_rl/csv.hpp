#pragma once

// CSV writers for training and evaluation outputs. Numbers use the shortest
// representation that parses back to the same double.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "merge_rl/errors.hpp"
#include "merge_rl/merge_env.hpp"
#include "merge_rl/tasks.hpp"
#include "merge_rl/trainer.hpp"

namespace merge_rl::csv {

inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string num(std::int64_t x) { return std::to_string(x); }

inline double parse_num(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::ofstream open(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return f;
}

inline constexpr const char* kLossHeader = "update_index,env_step,loss";
inline constexpr const char* kEpisodesHeader =
    "episode,outcome,steps,reward_total,reward_accel,reward_front,reward_back,reward_speed,"
    "merge_duration_s,min_front_gap_m,min_back_gap_m,mean_abs_accel";
inline constexpr const char* kTraceHeader = "step,t,vehicle_id,kind,x,v,a,behavior,status";

inline void write_loss(std::ostream& os, std::span<const LossRecord> rows) {
    os << kLossHeader << '\n';
    for (const auto& r : rows) os << r.update_index << ',' << r.env_step << ',' << num(r.loss) << '\n';
}

inline void write_episodes(std::ostream& os, std::span<const EpisodeRecord> rows) {
    os << kEpisodesHeader << '\n';
    for (const auto& r : rows) {
        os << r.episode << ',' << to_string(r.outcome) << ',' << r.steps << ',' << num(r.reward.total) << ','
           << num(r.reward.r_accel) << ',' << num(r.reward.r_front) << ',' << num(r.reward.r_back) << ','
           << num(r.reward.r_speed) << ',' << num(r.merge_duration_s) << ',' << num(r.min_front_gap) << ','
           << num(r.min_back_gap) << ',' << num(r.mean_abs_accel) << '\n';
    }
}

inline void write_trace_header(std::ostream& os) { os << kTraceHeader << '\n'; }

/// One row per vehicle (ego first) for the given world snapshot.
inline void write_trace_rows(std::ostream& os, const WorldState& w) {
    auto row = [&](const Vehicle& v) {
        os << w.step_index << ',' << num(w.t) << ',' << v.id << ',' << to_string(v.kind) << ',' << num(v.x) << ','
           << num(v.v) << ',' << num(v.a) << ',' << to_string(v.behavior) << ',' << to_string(w.status) << '\n';
    };
    row(w.ego);
    for (const auto& v : w.mainline) row(v);
}

}  // namespace merge_rl::csv
