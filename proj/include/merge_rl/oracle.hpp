#pragma once

// Tabular reference solution of the toy speed-tracking MDP.
//
// Speeds and actions are put on uniform grids; Q is swept with the Bellman
// optimality operator until the largest change falls below tol. Next-state
// values between speed grid points are interpolated linearly, which keeps the
// sweep a sup-norm contraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "merge_rl/errors.hpp"
#include "merge_rl/eval.hpp"
#include "merge_rl/toy_mdp.hpp"

namespace merge_rl {

struct OracleTable {
    std::vector<double> v_grid;
    std::vector<double> a_grid;
    std::vector<double> q;  // v-major: q[i * a_grid.size() + j]
    std::int64_t iterations = 0;
    double max_residual = 0.0;
    std::vector<double> residuals;  // one per sweep
    double gamma = 0.0;

    double at(std::size_t vi, std::size_t aj) const { return q[vi * a_grid.size() + aj]; }

    /// Q(v, a_j) with v interpolated between grid rows.
    double interpolated(double v, std::size_t aj) const {
        const double step = v_grid[1] - v_grid[0];
        const double pos = std::clamp((v - v_grid.front()) / step, 0.0, static_cast<double>(v_grid.size() - 1));
        const auto lo = std::min(static_cast<std::size_t>(pos), v_grid.size() - 2);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * at(lo, aj) + w * at(lo + 1, aj);
    }

    double greedy_action(double v) const {
        std::size_t best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a_grid.size(); ++j) {
            const double qj = interpolated(v, j);
            if (qj > best_q) {
                best_q = qj;
                best = j;
            }
        }
        return a_grid[best];
    }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

inline OracleTable oracle_q_iteration(const ToyMdpConfig& mdp, std::size_t v_bins = 121, std::size_t a_bins = 29,
                                      double gamma = 0.95, double tol = 1e-8, std::int64_t max_sweeps = 100'000) {
    if (v_bins < 2 || a_bins < 2) throw ConfigError("oracle grids need at least two bins");
    if (!(gamma >= 0 && gamma < 1)) throw ConfigError("oracle discount must lie in [0, 1)");

    OracleTable t;
    t.gamma = gamma;
    t.v_grid = linspace(0.0, mdp.v_max, v_bins);
    t.a_grid = linspace(kAccelMin, kAccelMax, a_bins);
    const std::size_t nv = v_bins, na = a_bins;

    // Transition model: reward and interpolation stencil for every (v, a).
    std::vector<double> reward(nv * na), weight(nv * na);
    std::vector<std::size_t> lower(nv * na);
    const double step = t.v_grid[1] - t.v_grid[0];
    for (std::size_t i = 0; i < nv; ++i)
        for (std::size_t j = 0; j < na; ++j) {
            const double v_next = toy_next_speed(t.v_grid[i], t.a_grid[j], mdp);
            reward[i * na + j] = toy_reward(t.a_grid[j], v_next, mdp);
            const double pos = std::clamp(v_next / step, 0.0, static_cast<double>(nv - 1));
            const auto lo = std::min(static_cast<std::size_t>(pos), nv - 2);
            lower[i * na + j] = lo;
            weight[i * na + j] = pos - static_cast<double>(lo);
        }

    t.q.assign(nv * na, 0.0);
    std::vector<double> value(nv), next(nv * na);
    for (std::int64_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < nv; ++i)
            value[i] = *std::max_element(t.q.begin() + static_cast<std::ptrdiff_t>(i * na),
                                         t.q.begin() + static_cast<std::ptrdiff_t>((i + 1) * na));
        double residual = 0.0;
        for (std::size_t c = 0; c < nv * na; ++c) {
            const double w = weight[c];
            const double v_next = (1.0 - w) * value[lower[c]] + w * value[lower[c] + 1];
            next[c] = reward[c] + gamma * v_next;
            residual = std::max(residual, std::abs(next[c] - t.q[c]));
        }
        t.q.swap(next);
        t.iterations = sweep;
        t.max_residual = residual;
        t.residuals.push_back(residual);
        if (residual < tol) return t;
    }
    throw NumericError("oracle value iteration did not converge within " + std::to_string(max_sweeps) + " sweeps");
}

/// Discounted return of a speed-feedback policy on the toy MDP from one seeded start.
template <class Policy>
double toy_policy_return(const ToyMdpConfig& mdp, std::uint64_t seed, double gamma, Policy&& policy) {
    ToyMdpState s = toy_reset(seed, mdp);
    std::vector<double> rewards;
    for (;;) {
        const auto r = toy_step(s, policy(s.v), mdp);
        rewards.push_back(r.reward);
        s = r.state;
        if (r.terminal) break;
    }
    return episode_return(rewards, gamma);
}

/// Training setup used for the toy problem: one-tick blocks, so learner and
/// oracle act on the same decision interval, and a short replay window with a
/// narrow exploration schedule so late, low-noise data dominates the fit.
inline TrainConfig toy_train_config(std::uint64_t seed, std::int64_t total_steps = 100'000) {
    TrainConfig c;
    c.seed = seed;
    c.total_steps = total_steps;
    c.action_hold = 1;
    c.sigma_start = 0.5;
    c.sigma_min = 0.01;
    c.decay_fraction = 0.3;
    c.replay_capacity = 10'000;
    return c;
}

inline QNetConfig toy_net_config() {
    QNetConfig c;
    c.state_dim = 1;
    return c;
}

struct OracleComparison {
    double oracle_return = 0.0;   // mean over episodes
    double learned_return = 0.0;
    double relative_gap = 0.0;    // |learned - oracle| / |oracle|
};

/// Both greedy policies on the same seeded starts seed0, seed0 + 1, ...
inline OracleComparison compare_with_oracle(const QNet& q, const OracleTable& table, const ToyMdpConfig& mdp,
                                            std::uint64_t seed0, std::int64_t episodes) {
    OracleComparison out;
    for (std::int64_t i = 0; i < episodes; ++i) {
        const auto seed = seed0 + static_cast<std::uint64_t>(i);
        out.oracle_return += toy_policy_return(mdp, seed, table.gamma, [&](double v) { return table.greedy_action(v); });
        out.learned_return += toy_policy_return(mdp, seed, table.gamma, [&](double v) {
            return optimal_action(q, std::vector<double>{v / mdp.v_max});
        });
    }
    out.oracle_return /= static_cast<double>(episodes);
    out.learned_return /= static_cast<double>(episodes);
    out.relative_gap = std::abs(out.learned_return - out.oracle_return) / std::abs(out.oracle_return);
    return out;
}

}  // namespace merge_rl
