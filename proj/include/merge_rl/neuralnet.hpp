#pragma once

// Small fully connected networks with hand-written reverse mode. Everything
// is double precision; a network is a plain value (copy = deep copy).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"

namespace merge_rl::nn {

enum class Activation { Tanh, ReLU, Sigmoid, Softplus, Identity };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softplus: return "softplus";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_string(std::string_view s) {
    for (auto a : {Activation::Tanh, Activation::ReLU, Activation::Sigmoid, Activation::Softplus, Activation::Identity})
        if (to_string(a) == s) return a;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double activate(Activation act, double z) {
    switch (act) {
        case Activation::Tanh: return std::tanh(z);
        case Activation::ReLU: return z > 0 ? z : 0.0;
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Softplus: return softplus(z);
        case Activation::Identity: return z;
    }
    return z;
}

/// d activation / dz, given the pre-activation z and the output y.
inline double activation_slope(Activation act, double z, double y) {
    switch (act) {
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::ReLU: return z > 0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Softplus: return sigmoid(z);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::Identity;

    bool operator==(const LayerSpec&) const = default;
};

struct Layer {
    LayerSpec spec;
    std::vector<double> weights;  // row-major, output_dim x input_dim
    std::vector<double> bias;     // output_dim

    double& w(std::size_t out, std::size_t in) { return weights[out * spec.input_dim + in]; }
    double w(std::size_t out, std::size_t in) const { return weights[out * spec.input_dim + in]; }

    bool operator==(const Layer&) const = default;
};

struct NetParams {
    std::vector<Layer> layers;
    // Bumped on every in-place update so forward caches can be checked for staleness.
    std::uint64_t revision = 0;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().spec.input_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().spec.output_dim; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Visits every scalar parameter in a fixed order (weights then bias, layer by layer).
    template <class F>
    void for_each_value(F&& f) {
        for (auto& l : layers) {
            for (auto& w : l.weights) f(w);
            for (auto& b : l.bias) f(b);
        }
    }
    template <class F>
    void for_each_value(F&& f) const {
        for (const auto& l : layers) {
            for (const auto& w : l.weights) f(w);
            for (const auto& b : l.bias) f(b);
        }
    }

    bool all_finite() const {
        bool ok = true;
        for_each_value([&](double v) { ok = ok && std::isfinite(v); });
        return ok;
    }

    /// Value equality; the revision counter is bookkeeping and not compared.
    friend bool operator==(const NetParams& a, const NetParams& b) { return a.layers == b.layers; }
};

/// Same shape as the network it belongs to.
using Gradients = NetParams;

inline void validate_specs(std::span<const LayerSpec> specs) {
    if (specs.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].input_dim == 0 || specs[i].output_dim == 0) throw ConfigError("layer dimensions must be positive");
        if (i > 0 && specs[i].input_dim != specs[i - 1].output_dim)
            throw ConfigError("layer " + std::to_string(i) + " input_dim " + std::to_string(specs[i].input_dim) +
                              " does not match previous output_dim " + std::to_string(specs[i - 1].output_dim));
    }
}

inline NetParams zeros(std::span<const LayerSpec> specs) {
    validate_specs(specs);
    NetParams p;
    for (const auto& s : specs)
        p.layers.push_back({s, std::vector<double>(s.input_dim * s.output_dim, 0.0), std::vector<double>(s.output_dim, 0.0)});
    return p;
}

inline std::vector<LayerSpec> specs_of(const NetParams& p) {
    std::vector<LayerSpec> out;
    for (const auto& l : p.layers) out.push_back(l.spec);
    return out;
}

inline Gradients zeros_like(const NetParams& p) { return zeros(specs_of(p)); }

inline bool same_shape(const NetParams& p, std::span<const LayerSpec> specs) {
    if (p.layers.size() != specs.size()) return false;
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (!(p.layers[i].spec == specs[i])) return false;
    return true;
}

inline bool same_shape(const NetParams& a, const NetParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        if (!(a.layers[i].spec == b.layers[i].spec)) return false;
    return true;
}

/// Glorot-uniform weights, zero biases.
inline NetParams init(std::span<const LayerSpec> specs, Rng& rng) {
    NetParams p = zeros(specs);
    for (auto& l : p.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.spec.input_dim + l.spec.output_dim));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : l.weights) w = dist(rng);
    }
    return p;
}

struct ForwardCache {
    std::vector<std::vector<double>> inputs;  // input to each layer
    std::vector<std::vector<double>> pre;     // pre-activation of each layer
    std::vector<std::vector<double>> post;    // output of each layer
    std::uint64_t revision = 0;
    std::vector<LayerSpec> specs;
};

struct ForwardResult {
    std::vector<double> y;
    ForwardCache cache;
};

struct BackwardResult {
    Gradients grads;
    std::vector<double> dL_dx;
};

namespace detail {

inline void affine(const Layer& l, std::span<const double> x, std::vector<double>& z) {
    z.assign(l.bias.begin(), l.bias.end());
    const std::size_t in = l.spec.input_dim;
    for (std::size_t o = 0; o < l.spec.output_dim; ++o) {
        const double* row = l.weights.data() + o * in;
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        z[o] += acc;
    }
}

inline void check_input(const NetParams& p, std::span<const double> x) {
    if (p.layers.empty()) throw UsageError("forward on an empty network");
    if (x.size() != p.input_dim())
        throw UsageError("network input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(p.input_dim()));
}

}  // namespace detail

/// Forward pass without keeping intermediates.
inline std::vector<double> predict(const NetParams& p, std::span<const double> x) {
    detail::check_input(p, x);
    std::vector<double> cur(x.begin(), x.end()), z;
    for (const auto& l : p.layers) {
        detail::affine(l, cur, z);
        for (auto& v : z) v = activate(l.spec.activation, v);
        cur.swap(z);
    }
    return cur;
}

inline ForwardResult forward(const NetParams& p, std::span<const double> x) {
    detail::check_input(p, x);
    ForwardResult r;
    r.cache.revision = p.revision;
    r.cache.specs = specs_of(p);
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& l : p.layers) {
        std::vector<double> z;
        detail::affine(l, cur, z);
        std::vector<double> y(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) y[i] = activate(l.spec.activation, z[i]);
        r.cache.inputs.push_back(std::move(cur));
        r.cache.pre.push_back(std::move(z));
        r.cache.post.push_back(y);
        cur = std::move(y);
    }
    r.y = std::move(cur);
    return r;
}

/// Reverse pass that adds this sample's parameter gradients into `grads`.
/// Returns dL/dx.
inline std::vector<double> backward_accumulate(const NetParams& p, const ForwardCache& cache,
                                               std::span<const double> dL_dy, Gradients& grads) {
    if (cache.revision != p.revision || !same_shape(p, cache.specs))
        throw UsageError("forward cache does not belong to the current parameters");
    if (dL_dy.size() != p.output_dim()) throw UsageError("output cotangent has the wrong length");
    if (!same_shape(grads, p)) throw UsageError("gradient buffer shape does not match the network");

    std::vector<double> delta(dL_dy.begin(), dL_dy.end());
    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const Layer& l = p.layers[li];
        Layer& g = grads.layers[li];
        const auto& z = cache.pre[li];
        const auto& y = cache.post[li];
        const auto& x = cache.inputs[li];
        const std::size_t in = l.spec.input_dim;
        for (std::size_t o = 0; o < l.spec.output_dim; ++o) delta[o] *= activation_slope(l.spec.activation, z[o], y[o]);
        std::vector<double> prev(in, 0.0);
        for (std::size_t o = 0; o < l.spec.output_dim; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            g.bias[o] += d;
            double* grow = g.weights.data() + o * in;
            const double* wrow = l.weights.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                grow[i] += d * x[i];
                prev[i] += d * wrow[i];
            }
        }
        delta.swap(prev);
    }
    return delta;
}

inline BackwardResult backward(const NetParams& p, const ForwardCache& cache, std::span<const double> dL_dy) {
    BackwardResult r{zeros_like(p), {}};
    r.dL_dx = backward_accumulate(p, cache, dL_dy, r.grads);
    return r;
}

/// Plain gradient descent, w <- w - alpha * g. Rejects non-finite gradients
/// without touching the parameters.
inline void sgd_step(NetParams& p, const Gradients& g, double alpha) {
    if (!same_shape(p, g)) throw UsageError("gradient shape does not match parameters");
    if (!g.all_finite()) throw NumericError("non-finite gradient, update rejected");
    if (!std::isfinite(alpha)) throw NumericError("non-finite learning rate");
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        auto& l = p.layers[li];
        const auto& gl = g.layers[li];
        for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= alpha * gl.weights[i];
        for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] -= alpha * gl.bias[i];
    }
    ++p.revision;
}

inline void scale(Gradients& g, double s) {
    g.for_each_value([s](double& v) { v *= s; });
}

inline void add_into(Gradients& acc, const Gradients& g) {
    for (std::size_t li = 0; li < acc.layers.size(); ++li) {
        for (std::size_t i = 0; i < acc.layers[li].weights.size(); ++i) acc.layers[li].weights[i] += g.layers[li].weights[i];
        for (std::size_t i = 0; i < acc.layers[li].bias.size(); ++i) acc.layers[li].bias[i] += g.layers[li].bias[i];
    }
}

}  // namespace merge_rl::nn
