#pragma once

// On-ramp merge microsimulation.
//
// All vehicles share one curvilinear longitudinal axis x: the ramp path and
// the rightmost highway lane meet at merge_point_x. Only that lane is
// simulated. Mainline traffic follows IDM; the ego vehicle is driven by the
// caller's acceleration command.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/reward.hpp"

namespace merge_rl {

struct RoadGeometry {
    double ramp_start_x = -150.0;
    double merge_point_x = 0.0;
    double success_x = 50.0;
    double accel_lane_end_x = 100.0;
    double sensing_range = 150.0;
    double speed_limit = kSpeedLimit;
    double lane_width_ramp = 3.5;
    double lane_width_highway = 3.75;

    bool operator==(const RoadGeometry&) const = default;

    void validate() const {
        if (!(ramp_start_x < merge_point_x && merge_point_x < success_x && success_x <= accel_lane_end_x))
            throw ConfigError("env geometry must satisfy ramp_start_x < merge_point_x < success_x <= accel_lane_end_x");
        if (!(sensing_range > 0)) throw ConfigError("env.sensing_range must be positive");
        if (!(speed_limit > 0)) throw ConfigError("env.speed_limit must be positive");
        if (!(lane_width_ramp > 0 && lane_width_highway > 0)) throw ConfigError("lane widths must be positive");
    }
};

struct IdmParams {
    double a_max = 1.5;
    double b = 2.0;
    double time_headway = 1.2;
    double s0 = 2.0;
    double delta = 4.0;
    double accel_floor = -4.5;
    double accel_ceil = 2.5;
};

struct TrafficConfig {
    double arrival_rate = 1.0 / 3.0;  // veh/s
    double spawn_x = -400.0;
    double despawn_x = 250.0;
    double spawn_speed_min = 25.0;
    double spawn_speed_max = kSpeedLimit;
    double min_spawn_headway = 1.5;  // s
    double warmup_s = 30.0;
    double ego_speed_min = 12.0;
    double ego_speed_max = 18.0;
    double vehicle_length = 5.0;
    double p_cooperative = 0.7;
    double adversarial_speed_gain = 0.10;
    double conflict_window_s = 1.5;
    double behavior_activation_distance = 100.0;
    double gap_lock_distance = 50.0;
    double collision_zone_offset = 5.0;
    double dt = 0.1;
    double max_episode_s = 60.0;
    double collision_penalty = -10.0;
    double timeout_penalty = -5.0;
};

struct EnvConfig {
    RoadGeometry geometry;
    TrafficConfig traffic;
    IdmParams idm;

    void validate() const {
        geometry.validate();
        const auto& t = traffic;
        const double vcap = geometry.speed_limit * 1.1;
        auto in_speed_range = [vcap](double lo, double hi) { return lo >= 0 && lo <= hi && hi <= vcap; };
        if (!(t.arrival_rate >= 0)) throw ConfigError("env.arrival_rate must be non-negative");
        if (!in_speed_range(t.spawn_speed_min, t.spawn_speed_max))
            throw ConfigError("env spawn speed range must lie within [0, 1.1 * speed_limit]");
        if (!in_speed_range(t.ego_speed_min, t.ego_speed_max))
            throw ConfigError("env ego speed range must lie within [0, 1.1 * speed_limit]");
        if (!(t.spawn_x < geometry.ramp_start_x)) throw ConfigError("env.spawn_x must lie upstream of the ramp start");
        if (!(t.despawn_x > geometry.accel_lane_end_x)) throw ConfigError("env.despawn_x must lie past the lane end");
        if (!(t.dt > 0)) throw ConfigError("env.dt must be positive");
        if (t.arrival_rate * t.dt > 1.0) throw ConfigError("env.arrival_rate * env.dt must not exceed 1");
        if (!(t.vehicle_length > 0)) throw ConfigError("env.vehicle_length must be positive");
        if (!(t.p_cooperative >= 0 && t.p_cooperative <= 1)) throw ConfigError("env.p_cooperative must be in [0, 1]");
        if (!(t.max_episode_s > 0)) throw ConfigError("env.max_episode_s must be positive");
        if (t.collision_penalty > 0 || t.timeout_penalty > 0)
            throw ConfigError("terminal penalties must be non-positive");
        if (!(t.warmup_s >= 0)) throw ConfigError("env.warmup_s must be non-negative");
    }
};

enum class VehicleKind { Ego, Mainline };
enum class Behavior { Neutral, Cooperative, Adversarial };
enum class EpisodeStatus { Running, Success, Collision, Timeout };

inline const char* to_string(VehicleKind k) { return k == VehicleKind::Ego ? "ego" : "mainline"; }

inline const char* to_string(Behavior b) {
    switch (b) {
        case Behavior::Neutral: return "neutral";
        case Behavior::Cooperative: return "cooperative";
        case Behavior::Adversarial: return "adversarial";
    }
    return "?";
}

inline const char* to_string(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Running: return "running";
        case EpisodeStatus::Success: return "success";
        case EpisodeStatus::Collision: return "collision";
        case EpisodeStatus::Timeout: return "timeout";
    }
    return "?";
}

struct Vehicle {
    int id = 0;
    VehicleKind kind = VehicleKind::Mainline;
    double x = 0.0;  // center position on the shared axis
    double v = 0.0;
    double a = 0.0;  // last applied (commanded, for the ego)
    double length = 5.0;
    Behavior behavior = Behavior::Neutral;
    double desired_speed = kSpeedLimit;

    bool operator==(const Vehicle&) const = default;
};

struct GapPair {
    std::optional<int> front_id;
    std::optional<int> back_id;

    bool operator==(const GapPair&) const = default;
};

struct WorldState {
    RoadGeometry geometry;
    Vehicle ego;
    std::vector<Vehicle> mainline;  // ascending x
    double t = 0.0;
    std::int64_t step_index = 0;
    std::optional<GapPair> locked_gap;
    EpisodeStatus status = EpisodeStatus::Running;
    int pending_spawns = 0;
    int next_vehicle_id = 1;
    std::int64_t spawn_count = 0;

    bool operator==(const WorldState&) const = default;

    const Vehicle* find_mainline(int id) const {
        for (const auto& v : mainline)
            if (v.id == id) return &v;
        return nullptr;
    }
};

struct Observation {
    double v_ev = 0.0;
    double p_ev = 0.0;
    double v_gfv = 0.0;
    double p_gfv = 0.0;
    double v_gbv = 0.0;
    double p_gbv = 0.0;

    bool operator==(const Observation&) const = default;
};

struct StepResult {
    Observation observation;
    RewardBreakdown reward;
    bool terminal = false;
    EpisodeStatus status = EpisodeStatus::Running;
};

// ---------------------------------------------------------------------------
// Car following

/// Bumper-to-bumper gap between a leader and a follower.
inline double bumper_gap(const Vehicle& leader, const Vehicle& follower) {
    return leader.x - follower.x - 0.5 * (leader.length + follower.length);
}

/// Intelligent Driver Model acceleration, clipped to [accel_floor, accel_ceil].
inline double idm_accel(const Vehicle& follower, const Vehicle* leader, const IdmParams& p = {}) {
    const double v0 = std::max(follower.desired_speed, 1e-6);
    double a = p.a_max * (1.0 - std::pow(follower.v / v0, p.delta));
    if (leader != nullptr) {
        const double s = bumper_gap(*leader, follower);
        if (s <= 0.0) return p.accel_floor;
        const double dv = follower.v - leader->v;
        const double s_star = p.s0 + follower.v * p.time_headway + follower.v * dv / (2.0 * std::sqrt(p.a_max * p.b));
        const double ratio = std::max(s_star, 0.0) / s;
        a -= p.a_max * ratio * ratio;
    }
    return std::clamp(a, p.accel_floor, p.accel_ceil);
}

// ---------------------------------------------------------------------------
// Arrival-time estimates and gap choice

/// Estimated time to reach the merge point; negative once past it.
inline double eta(const Vehicle& veh, double merge_point_x) {
    return (merge_point_x - veh.x) / std::max(veh.v, 1.0);
}

/// Headway a vehicle spawned at spawn_x would have to the most upstream existing vehicle.
inline double spawn_headway(const WorldState& world, const TrafficConfig& traffic) {
    if (world.mainline.empty()) return std::numeric_limits<double>::infinity();
    const Vehicle& last = world.mainline.front();
    return std::abs(last.x - traffic.spawn_x) / std::max(last.v, 1.0);
}

/// Poisson arrivals at the upstream boundary. An arrival whose headway would
/// be too short stays pending and enters on a later tick.
inline void spawn_mainline(WorldState& world, const EnvConfig& cfg, Rng& rng) {
    const auto& tr = cfg.traffic;
    if (tr.arrival_rate <= 0.0) return;
    if (bernoulli(rng, tr.arrival_rate * tr.dt)) ++world.pending_spawns;
    if (world.pending_spawns == 0) return;
    if (spawn_headway(world, tr) < tr.min_spawn_headway) return;

    Vehicle veh;
    veh.id = world.next_vehicle_id++;
    veh.kind = VehicleKind::Mainline;
    veh.x = tr.spawn_x;
    veh.v = uniform(rng, tr.spawn_speed_min, tr.spawn_speed_max);
    veh.desired_speed = veh.v;
    veh.length = tr.vehicle_length;
    world.mainline.insert(world.mainline.begin(), veh);
    --world.pending_spawns;
    ++world.spawn_count;
}

/// Whether `veh` is in arrival conflict with the ego and eligible for a behavior draw.
inline bool behavior_gate_open(const Vehicle& veh, const WorldState& world, const EnvConfig& cfg) {
    if (veh.kind != VehicleKind::Mainline || veh.behavior != Behavior::Neutral) return false;
    const double m = world.geometry.merge_point_x;
    if (std::abs(world.ego.x - m) > cfg.traffic.behavior_activation_distance) return false;
    return std::abs(eta(veh, m) - eta(world.ego, m)) <= cfg.traffic.conflict_window_s;
}

/// Draws cooperative/adversarial behavior for a vehicle that conflicts with the
/// ego. Each vehicle is drawn at most once; outside the gate it stays as is.
inline Behavior assign_behavior(Vehicle& veh, const WorldState& world, const EnvConfig& cfg, Rng& rng) {
    if (!behavior_gate_open(veh, world, cfg)) return veh.behavior;
    if (bernoulli(rng, cfg.traffic.p_cooperative)) {
        veh.behavior = Behavior::Cooperative;
    } else {
        veh.behavior = Behavior::Adversarial;
        veh.desired_speed = std::min(veh.desired_speed * (1.0 + cfg.traffic.adversarial_speed_gain),
                                     world.geometry.speed_limit * 1.1);
    }
    return veh.behavior;
}

/// ETA-bracketing gap choice: the front vehicle is the last one to arrive no
/// later than the ego, the back vehicle the first to arrive after it. Once a
/// lock is stored it is returned unchanged.
inline GapPair select_gap(const WorldState& world) {
    if (world.locked_gap) return *world.locked_gap;
    const auto& g = world.geometry;
    const double ego_eta = eta(world.ego, g.merge_point_x);
    GapPair out;
    double best_front = -std::numeric_limits<double>::infinity();
    double best_back = std::numeric_limits<double>::infinity();
    for (const auto& veh : world.mainline) {
        if (std::abs(veh.x - world.ego.x) > g.sensing_range) continue;
        const double e = eta(veh, g.merge_point_x);
        if (e <= ego_eta) {
            if (e > best_front) {
                best_front = e;
                out.front_id = veh.id;
            }
        } else if (e < best_back) {
            best_back = e;
            out.back_id = veh.id;
        }
    }
    return out;
}

inline void update_gap_lock(WorldState& world, const EnvConfig& cfg) {
    if (world.locked_gap) return;
    if (std::abs(world.ego.x - world.geometry.merge_point_x) <= cfg.traffic.gap_lock_distance)
        world.locked_gap = select_gap(world);
}

/// Gap neighbor as the ego perceives it: a real vehicle inside sensing range
/// or a virtual one parked at the range limit, driving at the speed limit.
struct Neighbor {
    double x = 0.0;
    double v = 0.0;
    double length = 5.0;
    bool is_virtual = true;
    std::optional<int> id;
};

struct Neighbors {
    Neighbor front;
    Neighbor back;
};

inline Neighbors gap_neighbors(const WorldState& world) {
    const auto& g = world.geometry;
    const auto gap = select_gap(world);
    const Vehicle& ego = world.ego;
    auto resolve = [&](const std::optional<int>& id, double side) {
        Neighbor n{ego.x + side * g.sensing_range, g.speed_limit, ego.length, true, std::nullopt};
        if (!id) return n;
        const Vehicle* veh = world.find_mainline(*id);
        if (veh == nullptr || std::abs(veh->x - ego.x) > g.sensing_range) return n;
        return Neighbor{veh->x, veh->v, veh->length, false, id};
    };
    return {resolve(gap.front_id, +1.0), resolve(gap.back_id, -1.0)};
}

/// Bumper-to-bumper separation between the ego and a neighbor. It is
/// measured along the axis regardless of which one is ahead, so it only goes
/// negative when the two bodies overlap.
inline double separation(const Vehicle& ego, double x, double length) {
    return std::abs(x - ego.x) - 0.5 * (length + ego.length);
}

inline double front_gap(const WorldState& world, const Neighbors& n) {
    return separation(world.ego, n.front.x, n.front.length);
}

inline double back_gap(const WorldState& world, const Neighbors& n) {
    return separation(world.ego, n.back.x, n.back.length);
}

inline Observation observe(const WorldState& world) {
    const auto n = gap_neighbors(world);
    return {world.ego.v, world.ego.x, n.front.v, n.front.x, n.back.v, n.back.x};
}

inline bool distance_reward_active(const WorldState& world, const RewardWeights& w) {
    return world.ego.x >= world.geometry.merge_point_x - w.activation_distance;
}

/// Per-tick reward for the world as it stands after applying acceleration `a`.
inline RewardBreakdown immediate_reward(const WorldState& world, double a, const RewardWeights& w = {}) {
    const auto n = gap_neighbors(world);
    return compose_reward(a, world.ego.v, front_gap(world, n), back_gap(world, n), distance_reward_active(world, w), w);
}

// ---------------------------------------------------------------------------
// Dynamics

namespace detail {

/// Point-mass update with the non-negative speed constraint. When braking
/// through zero the acceleration is shortened so v' is exactly 0.
inline void integrate(Vehicle& veh, double a, double dt) {
    double v_next = veh.v + a * dt;
    if (v_next < 0.0) {
        a = -veh.v / dt;
        v_next = 0.0;
    }
    veh.x += veh.v * dt + 0.5 * a * dt * dt;
    veh.v = v_next;
}

inline bool ego_in_lane(const WorldState& world, const EnvConfig& cfg) {
    return world.ego.x > world.geometry.merge_point_x - cfg.traffic.collision_zone_offset;
}

/// IDM accelerations of all mainline vehicles. Once the ego is in the lane it
/// is an ordinary leader for whoever is directly behind it; before that only
/// cooperative vehicles that would arrive after it treat it as a virtual leader.
inline std::vector<double> mainline_accels(const WorldState& world, const EnvConfig& cfg, bool ego_present) {
    const auto& ml = world.mainline;
    const double m = world.geometry.merge_point_x;
    const bool in_lane = ego_present && ego_in_lane(world, cfg);
    std::vector<double> acc(ml.size());
    for (std::size_t i = 0; i < ml.size(); ++i) {
        const Vehicle& veh = ml[i];
        const Vehicle* leader = i + 1 < ml.size() ? &ml[i + 1] : nullptr;
        if (in_lane && world.ego.x > veh.x && (leader == nullptr || world.ego.x < leader->x)) leader = &world.ego;
        double a = idm_accel(veh, leader, cfg.idm);
        if (ego_present && veh.behavior == Behavior::Cooperative && leader != &world.ego && world.ego.x > veh.x &&
            eta(world.ego, m) < eta(veh, m)) {
            a = std::min(a, idm_accel(veh, &world.ego, cfg.idm));
        }
        acc[i] = a;
    }
    return acc;
}

/// Moves mainline traffic one tick and keeps it ordered and non-overlapping.
inline void advance_mainline(WorldState& world, const EnvConfig& cfg, bool ego_present) {
    const auto acc = mainline_accels(world, cfg, ego_present);
    auto& ml = world.mainline;
    for (std::size_t i = 0; i < ml.size(); ++i) {
        ml[i].a = acc[i];
        integrate(ml[i], acc[i], cfg.traffic.dt);
    }
    // IDM with clipped braking can in rare cut-in cascades close a gap fully;
    // project back so the lane stays ordered.
    constexpr double kMinGap = 0.1;
    for (std::size_t i = ml.size(); i-- > 1;) {
        Vehicle& follower = ml[i - 1];
        const Vehicle& leader = ml[i];
        if (bumper_gap(leader, follower) < kMinGap) {
            follower.x = leader.x - 0.5 * (leader.length + follower.length) - kMinGap;
            follower.v = std::min(follower.v, leader.v);
        }
    }
    std::erase_if(ml, [&](const Vehicle& v) { return v.x > cfg.traffic.despawn_x; });
}

}  // namespace detail

enum class CollisionSide { None, Front, Back };

/// Overlap with either selected gap vehicle once the ego has reached the lane.
inline CollisionSide detect_collision(const WorldState& world, const EnvConfig& cfg) {
    if (!detail::ego_in_lane(world, cfg)) return CollisionSide::None;
    const auto n = gap_neighbors(world);
    if (!n.front.is_virtual && front_gap(world, n) <= 0.0) return CollisionSide::Front;
    if (!n.back.is_virtual && back_gap(world, n) <= 0.0) return CollisionSide::Back;
    return CollisionSide::None;
}

/// Builds a fresh episode. Mainline traffic is generated by running the
/// arrival process and car following for the warm-up period with no ego.
inline WorldState reset_world(std::uint64_t seed, const EnvConfig& cfg, Rng& rng) {
    cfg.validate();
    rng.seed(seed);
    WorldState world;
    world.geometry = cfg.geometry;
    world.ego.id = 0;
    world.ego.kind = VehicleKind::Ego;
    world.ego.length = cfg.traffic.vehicle_length;
    world.ego.behavior = Behavior::Neutral;
    world.ego.desired_speed = cfg.geometry.speed_limit;
    world.ego.x = cfg.geometry.ramp_start_x;
    world.ego.v = uniform(rng, cfg.traffic.ego_speed_min, cfg.traffic.ego_speed_max);

    const auto warmup_ticks = static_cast<std::int64_t>(std::llround(cfg.traffic.warmup_s / cfg.traffic.dt));
    for (std::int64_t i = 0; i < warmup_ticks; ++i) {
        spawn_mainline(world, cfg, rng);
        detail::advance_mainline(world, cfg, false);
    }
    world.t = 0.0;
    world.step_index = 0;
    world.status = EpisodeStatus::Running;
    return world;
}

/// Advances the world by one tick with ego acceleration `ego_accel`.
inline StepResult step_world(WorldState& world, double ego_accel, const RewardWeights& weights, const EnvConfig& cfg,
                             Rng& rng) {
    if (world.status != EpisodeStatus::Running)
        throw UsageError(std::string("step on a finished episode (status ") + to_string(world.status) + ")");
    if (!std::isfinite(ego_accel) || !accel_in_range(ego_accel))
        throw UsageError("ego acceleration " + std::to_string(ego_accel) + " outside [-4.5, 2.5]");

    const auto& tr = cfg.traffic;
    spawn_mainline(world, cfg, rng);
    for (auto& veh : world.mainline) assign_behavior(veh, world, cfg, rng);

    detail::advance_mainline(world, cfg, true);
    world.ego.a = ego_accel;
    detail::integrate(world.ego, ego_accel, tr.dt);

    ++world.step_index;
    world.t = static_cast<double>(world.step_index) * tr.dt;
    update_gap_lock(world, cfg);

    StepResult out;
    out.reward = immediate_reward(world, ego_accel, weights);

    const auto hit = detect_collision(world, cfg);
    const bool hit_front = hit == CollisionSide::Front;
    const bool hit_back = hit == CollisionSide::Back;
    if (hit_front || hit_back) {
        world.status = EpisodeStatus::Collision;
        // Terminal penalties are booked on the component that caused them so
        // the four-way decomposition stays exact.
        (hit_front ? out.reward.r_front : out.reward.r_back) += tr.collision_penalty;
    } else if (world.ego.x >= world.geometry.success_x) {
        world.status = EpisodeStatus::Success;
    } else if (world.t >= tr.max_episode_s - 1e-9) {
        world.status = EpisodeStatus::Timeout;
        out.reward.r_speed += tr.timeout_penalty;
    }
    out.reward.recompute_total();
    out.status = world.status;
    out.terminal = world.status != EpisodeStatus::Running;
    out.observation = observe(world);
    return out;
}

/// Owning wrapper: configuration, world snapshot and random stream.
class MergeEnv {
public:
    explicit MergeEnv(EnvConfig cfg = {}, RewardWeights weights = {}) : cfg_(std::move(cfg)), weights_(weights) {
        cfg_.validate();
        weights_.validate();
    }

    const WorldState& reset(std::uint64_t seed) {
        world_ = reset_world(seed, cfg_, rng_);
        return world_;
    }

    StepResult step(double ego_accel) { return step_world(world_, ego_accel, weights_, cfg_, rng_); }

    Observation observation() const { return observe(world_); }
    const WorldState& world() const { return world_; }
    WorldState& mutable_world() { return world_; }
    const EnvConfig& config() const { return cfg_; }
    const RewardWeights& weights() const { return weights_; }

private:
    EnvConfig cfg_;
    RewardWeights weights_;
    WorldState world_;
    Rng rng_;
};

}  // namespace merge_rl
