#pragma once

// Central finite-difference gradient checks.
//
// The reference side re-implements the forward computations in long double
// and shares no code with the analytic reverse pass. The extra precision keeps
// roundoff in (L(+h) - L(-h)) / 2h around 1e-13, so relative errors stay
// meaningful for gradient components that are many orders below the largest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/neuralnet.hpp"
#include "merge_rl/qfunction.hpp"

namespace merge_rl::gradcheck {

using Real = long double;

/// |a - b| / max(|a|, |b|, floor). The floor keeps the ratio meaningful for
/// components that are zero up to rounding.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace reference {

inline Real sigmoid(Real x) { return 1.0L / (1.0L + std::exp(-x)); }

inline Real softplus(Real x) { return x > 30 ? x : std::log1p(std::exp(x)); }

inline Real activate(nn::Activation act, Real z) {
    switch (act) {
        case nn::Activation::Tanh: return std::tanh(z);
        case nn::Activation::ReLU: return z > 0 ? z : 0.0L;
        case nn::Activation::Sigmoid: return sigmoid(z);
        case nn::Activation::Softplus: return softplus(z);
        case nn::Activation::Identity: return z;
    }
    return z;
}

inline std::vector<Real> evaluate_net(const nn::NetParams& p, std::span<const double> x) {
    std::vector<Real> h(x.begin(), x.end());
    for (const auto& l : p.layers) {
        std::vector<Real> next(l.spec.output_dim);
        for (std::size_t o = 0; o < l.spec.output_dim; ++o) {
            Real z = l.bias[o];
            for (std::size_t i = 0; i < l.spec.input_dim; ++i) z += static_cast<Real>(l.w(o, i)) * h[i];
            next[o] = activate(l.spec.activation, z);
        }
        h = std::move(next);
    }
    return h;
}

inline Real head(const nn::NetParams& p, std::span<const double> s) { return evaluate_net(p, s).front(); }

/// A, B, C from the three raw head outputs.
inline std::array<Real, 3> coefficients(const QNet& q, Real ra, Real rb, Real rc) {
    const Real A = -softplus(ra) - q.curvature_floor;
    const Real B = q.a_min + (q.a_max - q.a_min) * sigmoid(rb);
    return {A, B, rc};
}

inline Real quadratic(const std::array<Real, 3>& c, Real a) { return c[0] * (c[1] - a) * (c[1] - a) + c[2]; }

/// r, or r + gamma * max_a Q_target(s', a), which is the target net's C(s').
inline Real td_target(const QNet& target, const Transition& t, double gamma) {
    if (t.terminal) return t.r;
    const auto c = coefficients(target, head(target.head_a, t.s_next), head(target.head_b, t.s_next),
                                head(target.head_c, t.s_next));
    return t.r + gamma * quadratic(c, c[1]);
}

}  // namespace reference

/// Mean squared TD error with per-head caching: only the head under
/// perturbation is re-evaluated. Targets never depend on the prediction net.
class QLossReference {
public:
    QLossReference(const QTargetPair& pair, std::span<const Transition> batch, double gamma)
        : pair_(pair), batch_(batch) {
        for (const auto& t : batch_) {
            targets_.push_back(reference::td_target(pair_.target, t, gamma));
            raw_[0].push_back(reference::head(pair_.prediction.head_a, t.s));
            raw_[1].push_back(reference::head(pair_.prediction.head_b, t.s));
            raw_[2].push_back(reference::head(pair_.prediction.head_c, t.s));
        }
    }

    /// Loss with head `which` (0 = A, 1 = B, 2 = C) evaluated from its current weights.
    Real loss(int which) const {
        const nn::NetParams* heads[] = {&pair_.prediction.head_a, &pair_.prediction.head_b, &pair_.prediction.head_c};
        Real sum = 0.0L;
        for (std::size_t i = 0; i < batch_.size(); ++i) {
            std::array<Real, 3> raw{raw_[0][i], raw_[1][i], raw_[2][i]};
            raw[static_cast<std::size_t>(which)] = reference::head(*heads[which], batch_[i].s);
            const Real q = reference::quadratic(reference::coefficients(pair_.prediction, raw[0], raw[1], raw[2]),
                                                batch_[i].a);
            const Real d = targets_[i] - q;
            sum += d * d;
        }
        return sum / static_cast<Real>(batch_.size());
    }

    Real loss() const { return loss(0); }

private:
    const QTargetPair& pair_;
    std::span<const Transition> batch_;
    std::vector<Real> targets_;
    std::array<std::vector<Real>, 3> raw_;
};

/// d loss / d theta for every scalar of `params`, by central differences.
/// `loss` is re-evaluated with `params` perturbed in place and restored afterwards.
template <class Loss>
nn::Gradients finite_difference(nn::NetParams& params, Loss&& loss, double h = 1e-5) {
    nn::Gradients g = nn::zeros_like(params);
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        auto fd = [&](std::vector<double>& values, std::vector<double>& out) {
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                const double up_x = saved + h;
                const double down_x = saved - h;
                values[i] = up_x;
                const Real up = loss();
                values[i] = down_x;
                const Real down = loss();
                values[i] = saved;
                // Divide by the step actually taken after rounding.
                out[i] = static_cast<double>((up - down) / (static_cast<Real>(up_x) - static_cast<Real>(down_x)));
            }
        };
        fd(params.layers[li].weights, g.layers[li].weights);
        fd(params.layers[li].bias, g.layers[li].bias);
    }
    return g;
}

inline double max_relative_error(const nn::Gradients& analytic, const nn::Gradients& numeric) {
    std::vector<double> a, n;
    analytic.for_each_value([&](double v) { a.push_back(v); });
    numeric.for_each_value([&](double v) { n.push_back(v); });
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], n[i]));
    return worst;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(rng, lo, hi);
    return v;
}

/// Random transition in normalized-state units with an action inside the bounds.
inline Transition random_transition(std::size_t state_dim, Rng& rng) {
    Transition t;
    t.s = random_vector(state_dim, rng);
    t.s_next = random_vector(state_dim, rng);
    t.a = uniform(rng, kAccelMin, kAccelMax);
    t.r = uniform(rng, -3.0, 0.0);
    t.terminal = bernoulli(rng, 0.2);
    return t;
}

/// Perturbs network weights so the check does not only see Glorot-sized values.
inline void jitter(QNet& q, Rng& rng, double scale) {
    for (auto* h : {&q.head_a, &q.head_b, &q.head_c})
        h->for_each_value([&](double& v) { v += uniform(rng, -scale, scale); });
}

/// Worst relative error of the composite TD loss gradient over `batches`
/// random (network, batch) draws, all three prediction heads included.
inline double qloss_max_error(std::size_t batches, std::size_t batch_size, std::uint64_t seed,
                              const QNetConfig& cfg = {}, double gamma = 0.95, double h = 1e-5) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        QTargetPair pair = init_pair(cfg, rng);
        jitter(pair.prediction, rng, 0.1);
        jitter(pair.target, rng, 0.1);
        std::vector<Transition> batch;
        for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(random_transition(cfg.state_dim, rng));

        const auto analytic = loss_and_grads(pair, batch, gamma);
        const QLossReference ref(pair, batch, gamma);
        const auto ga = finite_difference(pair.prediction.head_a, [&] { return ref.loss(0); }, h);
        const auto gb = finite_difference(pair.prediction.head_b, [&] { return ref.loss(1); }, h);
        const auto gc = finite_difference(pair.prediction.head_c, [&] { return ref.loss(2); }, h);
        worst = std::max({worst, max_relative_error(analytic.grads.head_a, ga),
                          max_relative_error(analytic.grads.head_b, gb), max_relative_error(analytic.grads.head_c, gc)});
    }
    return worst;
}

/// Worst relative error of plain network gradients for a loss 0.5 * |y - target|^2
/// at `points` random inputs.
inline double network_max_error(std::span<const nn::LayerSpec> specs, std::size_t points, std::uint64_t seed,
                                double h = 1e-5) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
        nn::NetParams net = nn::init(specs, rng);
        for (auto& l : net.layers)
            for (auto& b : l.bias) b = uniform(rng, -0.5, 0.5);
        const auto x = random_vector(net.input_dim(), rng);
        const auto target = random_vector(net.output_dim(), rng);
        auto loss = [&] {
            const auto y = reference::evaluate_net(net, x);
            Real s = 0.0L;
            for (std::size_t i = 0; i < y.size(); ++i) s += 0.5L * (y[i] - target[i]) * (y[i] - target[i]);
            return s;
        };
        const auto fwd = nn::forward(net, x);
        std::vector<double> dy(fwd.y.size());
        for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = fwd.y[i] - target[i];
        const auto analytic = nn::backward(net, fwd.cache, dy);
        const auto numeric = finite_difference(net, loss, h);
        worst = std::max(worst, max_relative_error(analytic.grads, numeric));
    }
    return worst;
}

}  // namespace merge_rl::gradcheck
