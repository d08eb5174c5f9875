#include <gtest/gtest.h>

#include <cmath>

#include "merge_rl/replay.hpp"

using namespace merge_rl;

namespace {

Transition tagged(double tag) {
    Transition t;
    t.s = {tag, 0.0};
    t.s_next = {tag, 1.0};
    t.a = 0.0;
    t.r = -1.0;
    return t;
}

}  // namespace

TEST(Replay, PushCounts) {
    ReplayBuffer b(10);
    EXPECT_TRUE(b.empty());
    b.push(tagged(1));
    EXPECT_EQ(b.size(), 1u);
}

TEST(Replay, FifoEviction) {
    ReplayBuffer b(2);
    b.push(tagged(1));
    b.push(tagged(2));
    b.push(tagged(3));
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b.at(0).s[0], 2.0);
    EXPECT_EQ(b.at(1).s[0], 3.0);
    b.push(tagged(4));
    EXPECT_EQ(b.at(0).s[0], 3.0);
    EXPECT_EQ(b.at(1).s[0], 4.0);
}

TEST(Replay, RejectsInvalidTransitions) {
    ReplayBuffer b(4);
    auto t = tagged(1);
    t.a = 3.0;
    EXPECT_THROW(b.push(t), UsageError);
    t = tagged(1);
    t.r = 0.5;
    EXPECT_THROW(b.push(t), UsageError);
    t = tagged(1);
    t.s_next = {1.0};
    EXPECT_THROW(b.push(t), UsageError);
    t = tagged(1);
    t.s[1] = NAN;
    EXPECT_THROW(b.push(t), UsageError);
    b.push(tagged(1));
    t = tagged(2);
    t.s = {1, 2, 3};
    t.s_next = {1, 2, 3};
    EXPECT_THROW(b.push(t), UsageError);
    EXPECT_EQ(b.size(), 1u);
}

TEST(Replay, InsufficientData) {
    ReplayBuffer b(100);
    for (int i = 0; i < 31; ++i) b.push(tagged(i));
    Rng rng(1);
    EXPECT_THROW(b.sample(32, rng), InsufficientDataError);
}

TEST(Replay, Singleton) {
    ReplayBuffer b(5);
    b.push(tagged(7));
    Rng rng(1);
    const auto s = b.sample(1, rng);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], tagged(7));
}

TEST(Replay, UniformFrequencies) {
    ReplayBuffer b(10);
    for (int i = 0; i < 13; ++i) b.push(tagged(i));  // wrapped ring
    Rng rng(123);
    std::vector<int> count(10, 0);
    const int n = 100000;
    for (int draw = 0; draw < n / 10; ++draw)
        for (const auto& t : b.sample(10, rng)) ++count[static_cast<std::size_t>(t.s[0]) - 3];
    const double bound = 3.0 * std::sqrt(n * 0.1 * 0.9);
    for (int c : count) EXPECT_NEAR(c, 10000, bound);
}

TEST(Replay, SampleIndicesAgreeWithSample) {
    ReplayBuffer b(4);
    for (int i = 0; i < 6; ++i) b.push(tagged(i));
    Rng r1(5), r2(5);
    for (int round = 0; round < 25; ++round) {
        const auto idx = b.sample_indices(4, r1);
        const auto ts = b.sample(4, r2);
        for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(b.at(idx[i]), ts[i]);
    }
}
