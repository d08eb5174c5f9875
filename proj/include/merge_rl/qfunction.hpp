#pragma once

// Quadratic action-value model
//
//     Q(s, a) = A(s) * (B(s) - a)^2 + C(s)
//
// with A, B, C each produced by its own small network. A is forced strictly
// negative and B is squashed into the action bounds, so for every state the
// greedy action is B(s) and the greedy value is C(s).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/merge_env.hpp"
#include "merge_rl/neuralnet.hpp"

namespace merge_rl {

struct QNetConfig {
    std::size_t state_dim = 6;
    std::size_t hidden_units = 64;
    nn::Activation hidden_activation = nn::Activation::Tanh;
    double a_min = kAccelMin;
    double a_max = kAccelMax;
    double curvature_floor = 0.01;  // A(s) <= -curvature_floor

    void validate() const {
        if (state_dim == 0 || hidden_units == 0) throw ConfigError("net dimensions must be positive");
        if (!(a_min < a_max)) throw ConfigError("net action bounds must satisfy a_min < a_max");
        if (!(curvature_floor > 0)) throw ConfigError("net.curvature_floor must be positive");
    }

    std::vector<nn::LayerSpec> head_specs() const {
        return {{state_dim, hidden_units, hidden_activation}, {hidden_units, 1, nn::Activation::Identity}};
    }
};

struct QNet {
    nn::NetParams head_a;
    nn::NetParams head_b;
    nn::NetParams head_c;
    double a_min = kAccelMin;
    double a_max = kAccelMax;
    double curvature_floor = 0.01;

    std::size_t state_dim() const { return head_a.input_dim(); }

    friend bool operator==(const QNet&, const QNet&) = default;
};

/// Prediction network (trained every update) and its periodically synced copy.
struct QTargetPair {
    QNet prediction;
    QNet target;
};

inline QNet init_qnet(const QNetConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto specs = cfg.head_specs();
    QNet q;
    q.head_a = nn::init(specs, rng);
    q.head_b = nn::init(specs, rng);
    q.head_c = nn::init(specs, rng);
    q.a_min = cfg.a_min;
    q.a_max = cfg.a_max;
    q.curvature_floor = cfg.curvature_floor;
    return q;
}

inline QTargetPair init_pair(const QNetConfig& cfg, Rng& rng) {
    QTargetPair p;
    p.prediction = init_qnet(cfg, rng);
    p.target = p.prediction;
    return p;
}

inline void sync_target(QTargetPair& pair) { pair.target = pair.prediction; }

// ---------------------------------------------------------------------------
// Input scaling

struct NormalizationConstants {
    double speed_scale = kSpeedLimit;
    double distance_scale = 150.0;
    double merge_point_x = 0.0;
};

/// Speeds over the speed limit; ego position relative to the merge point and
/// neighbor positions relative to the ego, both over the sensing range.
inline std::vector<double> normalize(const Observation& o, const NormalizationConstants& k = {}) {
    return {o.v_ev / k.speed_scale,
            (o.p_ev - k.merge_point_x) / k.distance_scale,
            o.v_gfv / k.speed_scale,
            (o.p_gfv - o.p_ev) / k.distance_scale,
            o.v_gbv / k.speed_scale,
            (o.p_gbv - o.p_ev) / k.distance_scale};
}

// ---------------------------------------------------------------------------
// Coefficients and the two graphs (greedy action, Q value)

inline double a_from_raw(double raw, const QNet& q) { return -nn::softplus(raw) - q.curvature_floor; }
/// The sigmoid saturates in double for |raw| beyond ~37; the clamp keeps B strictly inside the bounds.
inline double b_from_raw(double raw, const QNet& q) {
    const double b = q.a_min + (q.a_max - q.a_min) * nn::sigmoid(raw);
    return std::clamp(b, std::nextafter(q.a_min, q.a_max), std::nextafter(q.a_max, q.a_min));
}

struct Coeffs {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

inline Coeffs coeffs(const QNet& q, std::span<const double> s) {
    return {a_from_raw(nn::predict(q.head_a, s)[0], q), b_from_raw(nn::predict(q.head_b, s)[0], q),
            nn::predict(q.head_c, s)[0]};
}

inline double quadratic_q(const Coeffs& c, double a) {
    const double d = c.B - a;
    return c.A * d * d + c.C;
}

/// Greedy action: the vertex B(s). Only the B head is evaluated.
inline double optimal_action(const QNet& q, std::span<const double> s) {
    return b_from_raw(nn::predict(q.head_b, s)[0], q);
}

inline double q_value(const QNet& q, std::span<const double> s, double a) { return quadratic_q(coeffs(q, s), a); }

/// r + gamma * max_a' Q(s', a'; target), or r alone at a terminal transition.
/// Reads only the target network.
inline double td_target(const QTargetPair& pair, double r, std::span<const double> s_next, bool terminal,
                        double gamma) {
    if (terminal) return r;
    const QNet& t = pair.target;
    return r + gamma * q_value(t, s_next, optimal_action(t, s_next));
}

// ---------------------------------------------------------------------------
// Loss

struct Transition {
    std::vector<double> s;
    double a = 0.0;
    double r = 0.0;
    std::vector<double> s_next;
    bool terminal = false;

    bool operator==(const Transition&) const = default;
};

struct QGradients {
    nn::Gradients head_a;
    nn::Gradients head_b;
    nn::Gradients head_c;
};

struct LossAndGrads {
    double loss = 0.0;
    QGradients grads;
};

/// Mean squared TD error over the batch. Evaluated with forward passes only;
/// this is the function the finite-difference checks differentiate.
inline double batch_loss(const QTargetPair& pair, std::span<const Transition> batch, double gamma) {
    if (batch.empty()) throw UsageError("loss on an empty batch");
    double sum = 0.0;
    for (const auto& t : batch) {
        const double e = td_target(pair, t.r, t.s_next, t.terminal, gamma) - q_value(pair.prediction, t.s, t.a);
        sum += e * e;
    }
    return sum / static_cast<double>(batch.size());
}

/// Loss and its gradient with respect to the prediction heads. Targets are
/// treated as constants.
inline LossAndGrads loss_and_grads(const QTargetPair& pair, std::span<const Transition> batch, double gamma) {
    if (batch.empty()) throw UsageError("loss on an empty batch");
    const QNet& q = pair.prediction;
    LossAndGrads out{0.0, {nn::zeros_like(q.head_a), nn::zeros_like(q.head_b), nn::zeros_like(q.head_c)}};
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    for (const auto& t : batch) {
        const double target = td_target(pair, t.r, t.s_next, t.terminal, gamma);
        auto fa = nn::forward(q.head_a, t.s);
        auto fb = nn::forward(q.head_b, t.s);
        auto fc = nn::forward(q.head_c, t.s);
        const double raw_a = fa.y[0], raw_b = fb.y[0];
        const double A = a_from_raw(raw_a, q);
        const double sig_b = nn::sigmoid(raw_b);
        const double B = q.a_min + (q.a_max - q.a_min) * sig_b;
        const double C = fc.y[0];
        const double d = B - t.a;
        const double err = A * d * d + C - target;
        out.loss += err * err * inv_m;

        const double dL_dq = 2.0 * err * inv_m;
        const double g_raw_a = dL_dq * d * d * (-nn::sigmoid(raw_a));
        const double g_raw_b = dL_dq * 2.0 * A * d * (q.a_max - q.a_min) * sig_b * (1.0 - sig_b);
        const double g_c = dL_dq;
        nn::backward_accumulate(q.head_a, fa.cache, std::span<const double>(&g_raw_a, 1), out.grads.head_a);
        nn::backward_accumulate(q.head_b, fb.cache, std::span<const double>(&g_raw_b, 1), out.grads.head_b);
        nn::backward_accumulate(q.head_c, fc.cache, std::span<const double>(&g_c, 1), out.grads.head_c);
    }
    return out;
}

inline void apply_sgd(QNet& q, const QGradients& g, double alpha) {
    if (!g.head_a.all_finite() || !g.head_b.all_finite() || !g.head_c.all_finite())
        throw NumericError("non-finite gradient, update rejected");
    nn::sgd_step(q.head_a, g.head_a, alpha);
    nn::sgd_step(q.head_b, g.head_b, alpha);
    nn::sgd_step(q.head_c, g.head_c, alpha);
}

}  // namespace merge_rl
