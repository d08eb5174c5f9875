#include <gtest/gtest.h>

#include <cmath>

#include "merge_rl/core.hpp"
#include "merge_rl/reward.hpp"

using namespace merge_rl;

TEST(RewardAccel, HandValues) {
    EXPECT_EQ(r_accel(0.0), 0.0);
    EXPECT_DOUBLE_EQ(r_accel(2.5), -1.25);
    EXPECT_DOUBLE_EQ(r_accel(-4.5), -2.25);
}

TEST(RewardDistance, InactiveIsZero) {
    const auto d = r_distance(-3.0, 0.5, false);
    EXPECT_EQ(d.r_front, 0.0);
    EXPECT_EQ(d.r_back, 0.0);
}

TEST(RewardDistance, QuadraticRampValue) {
    // ((15 - 8.5) / 13)^2 = 0.25
    EXPECT_DOUBLE_EQ(distance_penalty_shape(8.5), 0.25);
    EXPECT_DOUBLE_EQ(r_distance(8.5, 30.0, true).r_front, -0.5);
    EXPECT_EQ(r_distance(8.5, 30.0, true).r_back, 0.0);
}

TEST(RewardDistance, SafeBoundaryIsZero) {
    const auto d = r_distance(15.0, 15.0, true);
    EXPECT_EQ(d.r_front, 0.0);
    EXPECT_EQ(d.r_back, 0.0);
}

TEST(RewardDistance, ShapeIsContinuousAndGrowsLinearlyIntoCollision) {
    RewardWeights w;
    EXPECT_DOUBLE_EQ(distance_penalty_shape(w.d_min, w), 1.0);
    EXPECT_NEAR(distance_penalty_shape(w.d_min + 1e-9, w), 1.0, 1e-8);
    EXPECT_DOUBLE_EQ(distance_penalty_shape(w.d_min - 3.0, w), 4.0);
    EXPECT_DOUBLE_EQ(distance_penalty_shape(-1.0, w), 1.0 + w.d_min + 1.0);
}

TEST(RewardSpeed, HandValues) {
    EXPECT_EQ(r_speed(27.0), 0.0);
    EXPECT_DOUBLE_EQ(r_speed(20.0), -0.04);
    EXPECT_DOUBLE_EQ(r_speed(0.0), -0.2);
}

TEST(RewardCompose, FarUpstreamCruiseIsZero) {
    EXPECT_EQ(compose_reward(0.0, 27.0, -50.0, -50.0, false).total, 0.0);
}

TEST(RewardCompose, SumOfComponents) {
    const auto r = compose_reward(2.5, 20.0, 8.5, 30.0, true);
    EXPECT_DOUBLE_EQ(r.r_accel, -1.25);
    EXPECT_DOUBLE_EQ(r.r_front, -0.5);
    EXPECT_EQ(r.r_back, 0.0);
    EXPECT_DOUBLE_EQ(r.r_speed, -0.04);
    EXPECT_NEAR(r.total, -1.79, 1e-12);
    EXPECT_EQ(r.total, r.r_accel + r.r_front + r.r_back + r.r_speed);
}

TEST(RewardCompose, RandomInputsNeverPositive) {
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const auto r = compose_reward(uniform(rng, kAccelMin, kAccelMax), uniform(rng, 0, 40), uniform(rng, -10, 200),
                                      uniform(rng, -10, 200), bernoulli(rng, 0.5));
        ASSERT_LE(r.r_accel, 0.0);
        ASSERT_LE(r.r_front, 0.0);
        ASSERT_LE(r.r_back, 0.0);
        ASSERT_LE(r.r_speed, 0.0);
        ASSERT_LE(r.total, 0.0);
    }
}

TEST(RewardBreakdownAccumulate, AddsComponentwise) {
    RewardBreakdown a = compose_reward(1.0, 20.0, 5.0, 5.0, true);
    const RewardBreakdown b = compose_reward(-1.0, 10.0, 3.0, 30.0, true);
    RewardBreakdown sum = a;
    sum += b;
    EXPECT_DOUBLE_EQ(sum.r_accel, a.r_accel + b.r_accel);
    EXPECT_DOUBLE_EQ(sum.r_front, a.r_front + b.r_front);
    EXPECT_EQ(sum.total, sum.r_accel + sum.r_front + sum.r_back + sum.r_speed);
}

TEST(RewardWeightsValidate, RejectsBackHeavierThanFront) {
    RewardWeights w;
    w.w_back = 3.0;
    EXPECT_THROW(w.validate(), ConfigError);
    RewardWeights n;
    n.w_accel = -1.0;
    EXPECT_THROW(n.validate(), ConfigError);
}
