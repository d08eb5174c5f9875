#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "merge_rl/core.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/qfunction.hpp"

namespace merge_rl {

/// Fixed-capacity FIFO experience memory with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 100'000) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
        storage_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return storage_.size(); }
    bool empty() const { return storage_.empty(); }

    /// i = 0 is the oldest entry still held.
    const Transition& at(std::size_t i) const {
        if (i >= size()) throw UsageError("replay index out of range");
        return storage_[(head_ + i) % storage_.size()];
    }

    void push(Transition t) {
        validate(t);
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::vector<Transition> sample(std::size_t m, Rng& rng) const {
        if (m == 0) throw UsageError("sample size must be positive");
        if (size() < m)
            throw InsufficientDataError("replay holds " + std::to_string(size()) + " transitions, " +
                                        std::to_string(m) + " requested");
        std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
        std::vector<Transition> out;
        out.reserve(m);
        for (std::size_t i = 0; i < m; ++i) out.push_back(storage_[pick(rng)]);
        return out;
    }

    /// Same draws as sample(), returning storage indices in FIFO order terms.
    std::vector<std::size_t> sample_indices(std::size_t m, Rng& rng) const {
        if (size() < m) throw InsufficientDataError("replay holds too few transitions");
        std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
        std::vector<std::size_t> out(m);
        for (auto& i : out) i = (pick(rng) + size() - head_) % size();
        return out;
    }

private:
    void validate(const Transition& t) {
        if (!accel_in_range(t.a) || !std::isfinite(t.a)) throw UsageError("transition action outside [-4.5, 2.5]");
        if (!std::isfinite(t.r) || t.r > 0.0) throw UsageError("transition reward must be finite and non-positive");
        if (t.s.empty() || t.s.size() != t.s_next.size()) throw UsageError("transition states have inconsistent sizes");
        if (!storage_.empty() && t.s.size() != storage_.front().s.size())
            throw UsageError("transition state size differs from stored transitions");
        for (std::size_t i = 0; i < t.s.size(); ++i)
            if (!std::isfinite(t.s[i]) || !std::isfinite(t.s_next[i])) throw UsageError("transition state not finite");
    }

    std::size_t capacity_;
    std::vector<Transition> storage_;
    std::size_t head_ = 0;  // oldest element once full
};

}  // namespace merge_rl
