#include <gtest/gtest.h>

#include "geval/dividend.hpp"
#include "geval/error.hpp"

using namespace geval;

TEST(Dividend, AdaptedAndPredictableIncrementsAdd) {
    auto lat = Lattice::build({1.0, 3, 1});
    const auto B = brownian_process(*lat);
    const Dividend K = Dividend::from_process(B) + Dividend::from_rate(*lat, constant_process(*lat, 2.0));
    for (int k = 0; k < 3; ++k)
        for (std::size_t n = 0; n < lat->node_count(k); ++n)
            for (std::size_t b = 0; b < 2; ++b)
                EXPECT_NEAR(K.increment(k, n, lat->child(k, n, b)), lat->increment(b, 0) + 2.0 * lat->dt(), 1e-15);
}

TEST(Dividend, CumulativeSumsIncrements) {
    auto lat = Lattice::build({1.0, 4, 1});
    const Dividend A = Dividend::from_increments(tabulate_process(*lat, [](int k, std::size_t) { return 0.1 * k; }));
    const auto C = A.cumulative(*lat);
    for (std::size_t n = 0; n < C.at(4).size(); ++n) EXPECT_NEAR(C.at(4)[n], 0.1 * (0 + 1 + 2 + 3), 1e-15);
    EXPECT_EQ(A.worst_decrease(*lat), 0.0);
    EXPECT_NEAR((-A).worst_decrease(*lat), 0.3, 1e-15);
}

TEST(Dividend, ZeroAndScaling) {
    auto lat = Lattice::build({1.0, 2, 1});
    EXPECT_TRUE(Dividend{}.is_zero());
    const Dividend K = 3.0 * Dividend::from_process(brownian_process(*lat));
    EXPECT_FALSE(K.is_zero());
    EXPECT_NEAR(K.increment(0, 0, 1), 3.0 * lat->sqrt_dt(), 1e-15);
    EXPECT_THROW(Dividend::from_process(AdaptedProcess{}).check(*lat), Error);
}
