#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "geval/error.hpp"
#include "geval/lattice.hpp"

using namespace geval;

namespace {

LatticePtr tree(int steps, int dim = 1) { return Lattice::build({1.0, steps, dim}); }

LatticePtr hybrid(int steps, int path_steps, int dim = 1) {
    LatticeOptions opt;
    opt.path_steps = path_steps;
    return Lattice::build({1.0, steps, dim}, opt);
}

// Conditional expectation by brute force: average the leaves that share a time-s ancestor.
RandomVariable leaf_average(const Lattice& lat, const RandomVariable& X, int s) {
    std::vector<double> sum(lat.node_count(s), 0.0), count(lat.node_count(s), 0.0);
    for (std::size_t leaf = 0; leaf < X.size(); ++leaf) {
        const std::size_t a = lat.ancestor(X.time, leaf, s);
        sum[a] += X[leaf];
        count[a] += 1.0;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
    return {s, sum};
}

}  // namespace

TEST(Lattice, PathTreeNodeCounts) {
    auto lat = tree(5, 2);
    EXPECT_TRUE(lat->is_path_tree());
    EXPECT_EQ(lat->branches(), 4u);
    for (int k = 0; k <= 5; ++k) EXPECT_EQ(lat->node_count(k), std::size_t{1} << (2 * k));
}

TEST(Lattice, HybridNodeCounts) {
    auto lat = hybrid(10, 3);
    EXPECT_FALSE(lat->is_path_tree());
    EXPECT_EQ(lat->node_count(3), 8u);
    // After the path prefix, each slice holds prefix x (up-count + 1).
    EXPECT_EQ(lat->node_count(4), 8u * 2);
    EXPECT_EQ(lat->node_count(10), 8u * 8);
}

TEST(Lattice, ChildIndexingIsBigEndianPathWord) {
    auto lat = tree(3);
    EXPECT_EQ(lat->child(0, 0, 1), 1u);
    EXPECT_EQ(lat->child(1, 1, 0), 2u);
    EXPECT_EQ(lat->child(2, 2, 1), 5u);
    EXPECT_EQ(lat->ancestor(3, 5, 1), 1u);
    EXPECT_EQ(lat->parent(3, 5), 2u);
}

TEST(Lattice, BrownianMatchesSumOfSigns) {
    auto lat = tree(4);
    const double h = std::sqrt(0.25);
    // Leaf 0b1011: up, down, up, up.
    EXPECT_NEAR(lat->brownian(4, 0b1011, 0), 2.0 * h, 1e-15);
    auto hyb = hybrid(6, 2);
    for (std::size_t n = 0; n < hyb->node_count(5); ++n)
        for (std::size_t b = 0; b < 2; ++b)
            EXPECT_NEAR(hyb->brownian(6, hyb->child(5, n, b), 0) - hyb->brownian(5, n, 0), hyb->increment(b, 0), 1e-12);
}

TEST(Lattice, CondExpectMatchesLeafAverage) {
    auto lat = tree(6, 2);
    RandomVariable X = tabulate(*lat, 6, [](std::size_t n) { return std::sin(0.37 * static_cast<double>(n)); });
    for (int s = 0; s <= 6; ++s) {
        const auto a = cond_expect(*lat, X, s);
        const auto b = leaf_average(*lat, X, s);
        EXPECT_LT(sup_distance(a, b), 1e-12) << "s = " << s;
    }
}

TEST(Lattice, HybridCondExpectOfBrownianSquare) {
    auto lat = hybrid(32, 4);
    // E[B_T^2 | F_s] = B_s^2 + (T - t_s).
    RandomVariable X = tabulate(*lat, 32, [&](std::size_t n) { return std::pow(lat->brownian(32, n), 2); });
    for (int s : {0, 3, 4, 10, 31}) {
        const auto ce = cond_expect(*lat, X, s);
        for (std::size_t n = 0; n < ce.size(); ++n)
            EXPECT_NEAR(ce[n], std::pow(lat->brownian(s, n), 2) + 1.0 - lat->time(s), 1e-12);
    }
}

TEST(Lattice, Measurability) {
    auto lat = tree(5);
    auto B2 = brownian(*lat, 2);
    EXPECT_TRUE(is_measurable(*lat, broadcast(*lat, B2, 5), 2));
    EXPECT_FALSE(is_measurable(*lat, brownian(*lat, 5), 4));
    EXPECT_THROW(broadcast(*lat, brownian(*lat, 4), 3), Error);
}

TEST(Lattice, CapacityIsEnforced) {
    try {
        Lattice::build({1.0, 30, 1});
        FAIL() << "expected CapacityExceeded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CapacityExceeded);
    }
    EXPECT_THROW(Lattice::build({1.0, 0, 1}), Error);
    EXPECT_THROW(Lattice::build({-1.0, 4, 1}), Error);
}

TEST(Lattice, AncestorBeyondPrefixNeedsPathTree) {
    auto lat = hybrid(8, 2);
    EXPECT_NO_THROW(lat->ancestor(8, 3, 2));
    try {
        lat->ancestor(8, 3, 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RequiresPathTree);
    }
}

TEST(Lattice, JsonRoundTrip) {
    auto lat = tree(3);
    AdaptedProcess P = tabulate_process(*lat, [](int k, std::size_t n) { return k + 0.5 * static_cast<double>(n); });
    const AdaptedProcess Q = process_from_json(to_json(P));
    EXPECT_EQ(sup_distance(P, Q), 0.0);
    const RandomVariable X = variable_from_json(to_json(P.at(2)), 2);
    EXPECT_EQ(X.values, P.at(2).values);
}

TEST(Lattice, ArithmeticAndShortfall) {
    auto lat = tree(2);
    auto X = constant(*lat, 2, 1.0);
    auto Y = brownian(*lat, 2);
    EXPECT_LE(sup_norm(X + Y - Y - X), 1e-15);
    EXPECT_NEAR(max_shortfall(X, Y), std::max(0.0, sup_norm(Y) - 1.0), 1e-15);
    EXPECT_THROW(check_variable(*lat, RandomVariable{2, {1.0}}), Error);
}
