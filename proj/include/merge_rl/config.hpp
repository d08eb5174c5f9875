#pragma once

// Run configuration: one JSON document with optional sections
// "env", "reward", "net", "train". Missing keys keep their defaults; unknown
// sections or keys are rejected.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "merge_rl/checkpoint.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/merge_env.hpp"
#include "merge_rl/qfunction.hpp"
#include "merge_rl/reward.hpp"
#include "merge_rl/trainer.hpp"

namespace merge_rl {

struct RunConfig {
    EnvConfig env;
    RewardWeights reward;
    QNetConfig net;
    TrainConfig train;

    /// Copies the shared tick length into the env and validates everything.
    void finalize() {
        env.traffic.dt = train.dt;
        env.validate();
        reward.validate();
        net.validate();
        train.validate();
    }
};

namespace detail {

/// Binds JSON keys of one section to fields; reading and writing share the table.
class SectionBinder {
public:
    explicit SectionBinder(std::string section) : section_(std::move(section)) {}

    template <class T>
    SectionBinder& bind(const std::string& key, T& field) {
        readers_[key] = [sec = section_, key, &field](const json& v) {
            try {
                field = v.get<T>();
            } catch (const json::exception&) {
                throw ConfigError(sec + "." + key + ": wrong value type " + v.dump());
            }
        };
        writers_[key] = [&field](json& out, const std::string& k) { out[k] = field; };
        return *this;
    }

    SectionBinder& bind_activation(const std::string& key, nn::Activation& field) {
        readers_[key] = [sec = section_, key, &field](const json& v) {
            if (!v.is_string()) throw ConfigError(sec + "." + key + " must be a string");
            field = nn::activation_from_string(v.get<std::string>());
        };
        writers_[key] = [&field](json& out, const std::string& k) { out[k] = std::string(nn::to_string(field)); };
        return *this;
    }

    void read(const json& obj) const {
        if (!obj.is_object()) throw ConfigError("config section '" + section_ + "' must be an object");
        for (const auto& [key, value] : obj.items()) {
            auto it = readers_.find(key);
            if (it == readers_.end()) throw ConfigError("unknown config key '" + section_ + "." + key + "'");
            it->second(value);
        }
    }

    json write() const {
        json out = json::object();
        for (const auto& [key, w] : writers_) w(out, key);
        return out;
    }

    const std::string& name() const { return section_; }

private:
    std::string section_;
    std::map<std::string, std::function<void(const json&)>> readers_;
    std::map<std::string, std::function<void(json&, const std::string&)>> writers_;
};

inline std::vector<SectionBinder> binders(RunConfig& c) {
    std::vector<SectionBinder> out;

    SectionBinder env("env");
    auto& g = c.env.geometry;
    auto& t = c.env.traffic;
    auto& idm = c.env.idm;
    env.bind("ramp_start_x", g.ramp_start_x)
        .bind("merge_point_x", g.merge_point_x)
        .bind("success_x", g.success_x)
        .bind("accel_lane_end_x", g.accel_lane_end_x)
        .bind("sensing_range", g.sensing_range)
        .bind("speed_limit", g.speed_limit)
        .bind("lane_width_ramp", g.lane_width_ramp)
        .bind("lane_width_highway", g.lane_width_highway)
        .bind("arrival_rate", t.arrival_rate)
        .bind("spawn_x", t.spawn_x)
        .bind("despawn_x", t.despawn_x)
        .bind("spawn_speed_min", t.spawn_speed_min)
        .bind("spawn_speed_max", t.spawn_speed_max)
        .bind("min_spawn_headway", t.min_spawn_headway)
        .bind("warmup_s", t.warmup_s)
        .bind("ego_speed_min", t.ego_speed_min)
        .bind("ego_speed_max", t.ego_speed_max)
        .bind("vehicle_length", t.vehicle_length)
        .bind("p_cooperative", t.p_cooperative)
        .bind("adversarial_speed_gain", t.adversarial_speed_gain)
        .bind("conflict_window_s", t.conflict_window_s)
        .bind("behavior_activation_distance", t.behavior_activation_distance)
        .bind("gap_lock_distance", t.gap_lock_distance)
        .bind("collision_zone_offset", t.collision_zone_offset)
        .bind("max_episode_s", t.max_episode_s)
        .bind("collision_penalty", t.collision_penalty)
        .bind("timeout_penalty", t.timeout_penalty)
        .bind("idm_a_max", idm.a_max)
        .bind("idm_b", idm.b)
        .bind("idm_time_headway", idm.time_headway)
        .bind("idm_s0", idm.s0);
    out.push_back(std::move(env));

    SectionBinder reward("reward");
    auto& w = c.reward;
    reward.bind("w_accel", w.w_accel)
        .bind("w_front", w.w_front)
        .bind("w_back", w.w_back)
        .bind("w_speed", w.w_speed)
        .bind("d_min", w.d_min)
        .bind("d_safe", w.d_safe)
        .bind("v_lo", w.v_lo)
        .bind("v_hi", w.v_hi)
        .bind("activation_distance", w.activation_distance);
    out.push_back(std::move(reward));

    SectionBinder net("net");
    net.bind("hidden_units", c.net.hidden_units)
        .bind_activation("hidden_activation", c.net.hidden_activation)
        .bind("curvature_floor", c.net.curvature_floor);
    out.push_back(std::move(net));

    SectionBinder train("train");
    auto& tr = c.train;
    train.bind("total_steps", tr.total_steps)
        .bind("dt", tr.dt)
        .bind("action_hold", tr.action_hold)
        .bind("batch_size", tr.batch_size)
        .bind("target_sync_every", tr.target_sync_every)
        .bind("gamma", tr.gamma)
        .bind("learning_rate", tr.learning_rate)
        .bind("sigma_start", tr.sigma_start)
        .bind("sigma_min", tr.sigma_min)
        .bind("decay_fraction", tr.decay_fraction)
        .bind("seed", tr.seed)
        .bind("loss_log_stride", tr.loss_log_stride)
        .bind("replay_capacity", tr.replay_capacity);
    out.push_back(std::move(train));
    return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig c;
    auto bs = detail::binders(c);
    for (const auto& [section, body] : doc.items()) {
        auto it = std::find_if(bs.begin(), bs.end(), [&](const auto& b) { return b.name() == section; });
        if (it == bs.end()) throw ConfigError("unknown config section '" + section + "'");
        it->read(body);
    }
    c.finalize();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    json doc;
    try {
        doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

/// Fully resolved configuration, every key present.
inline json config_to_json(const RunConfig& c) {
    RunConfig copy = c;
    json doc = json::object();
    for (const auto& b : detail::binders(copy)) doc[b.name()] = b.write();
    return doc;
}

}  // namespace merge_rl
