#include <gtest/gtest.h>

#include "geval/error.hpp"
#include "geval/stopping.hpp"

using namespace geval;

TEST(Stopping, ConstantTime) {
    auto lat = Lattice::build({1.0, 4, 1});
    auto tau = StoppingTime::constant(*lat, 2);
    const auto v = tau.to_values(*lat);
    for (double x : v.values) EXPECT_EQ(x, 2.0);
    EXPECT_EQ(stop_nodes(*lat, tau).size(), 4u);
}

TEST(Stopping, AnticipatingCandidateIsRejected) {
    auto lat = Lattice::build({1.0, 3, 1});
    // Stop at 1 iff the second move is up: decided by information from time 2.
    RandomVariable bad = tabulate(*lat, 3, [](std::size_t leaf) { return (leaf >> 1) & 1U ? 1.0 : 3.0; });
    EXPECT_FALSE(is_stopping_time(*lat, bad));
    try {
        StoppingTime::from_values(*lat, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotAStoppingTime);
    }
    // Stop at 1 iff the first move is up.
    RandomVariable good = tabulate(*lat, 3, [](std::size_t leaf) { return (leaf >> 2) & 1U ? 1.0 : 3.0; });
    EXPECT_TRUE(is_stopping_time(*lat, good));
    EXPECT_EQ(StoppingTime::from_values(*lat, good).to_values(*lat).values, good.values);
    EXPECT_FALSE(is_stopping_time(*lat, constant(*lat, 3, 1.5)));
}

TEST(Stopping, HittingTimeAgreesWithPathScan) {
    auto lat = Lattice::build({1.0, 6, 1});
    const AdaptedProcess B = brownian_process(*lat);
    const double level = 0.5;
    const auto tau = StoppingTime::hitting(*lat, B, level, true).to_values(*lat);
    for (std::size_t leaf = 0; leaf < tau.size(); ++leaf) {
        int expect = 6;
        for (int k = 0; k <= 6; ++k)
            if (lat->brownian(k, lat->ancestor(6, leaf, k)) >= level) {
                expect = k;
                break;
            }
        EXPECT_EQ(tau[leaf], expect);
    }
}

TEST(Stopping, OrderAndEarliest) {
    auto lat = Lattice::build({1.0, 5, 1});
    const AdaptedProcess B = brownian_process(*lat);
    auto up = StoppingTime::hitting(*lat, B, 0.4, true);
    auto down = StoppingTime::hitting(*lat, B, -0.4, false);
    auto first = StoppingTime::earliest(*lat, up, down);
    EXPECT_TRUE(precedes(*lat, first, up));
    EXPECT_TRUE(precedes(*lat, first, down));
    EXPECT_FALSE(precedes(*lat, up, down) && precedes(*lat, down, up));
    const auto a = first.to_values(*lat), u = up.to_values(*lat), d = down.to_values(*lat);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], std::min(u[i], d[i]));
}

TEST(Stopping, StoppedValueAndTerminalMeasurability) {
    auto lat = Lattice::build({1.0, 4, 1});
    const AdaptedProcess B = brownian_process(*lat);
    auto tau = StoppingTime::hitting(*lat, B, 0.5, true);
    const auto when = tau.to_values(*lat);
    const auto Bt = stopped_value(*lat, B, tau);
    for (std::size_t leaf = 0; leaf < Bt.size(); ++leaf) {
        const int k = static_cast<int>(when[leaf]);
        EXPECT_EQ(Bt[leaf], lat->brownian(k, lat->ancestor(4, leaf, k)));
    }
    EXPECT_NO_THROW(values_at_stop(*lat, tau, Bt));
    EXPECT_THROW(values_at_stop(*lat, tau, brownian(*lat, 4)), Error);
}
