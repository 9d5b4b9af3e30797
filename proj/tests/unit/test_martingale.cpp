#include <gtest/gtest.h>

#include <cmath>

#include "geval/error.hpp"
#include "geval/martingale.hpp"
#include "geval/sampling.hpp"

using namespace geval;

namespace {

LatticePtr hybrid(int steps, int path_steps) {
    LatticeOptions opt;
    opt.path_steps = path_steps;
    return Lattice::build({1.0, steps, 1}, opt);
}

}  // namespace

TEST(Classify, ByDividendSign) {
    auto lat = hybrid(10, 3);
    auto E = from_driver(lat, g_mu(0.5));
    Sampler rng(1);
    const RandomVariable X = rng.claim(*lat, 10);
    const Dividend up = rng.increasing_dividend(*lat);
    EXPECT_EQ(classify(*E, apply_process(*E, X)).kind, MartingaleKind::Martingale);
    EXPECT_EQ(classify(*E, apply_process(*E, X, up)).kind, MartingaleKind::Supermartingale);
    EXPECT_EQ(classify(*E, apply_process(*E, X, -up)).kind, MartingaleKind::Submartingale);
    EXPECT_EQ(classify(*E, apply_process(*E, X, up), up).kind, MartingaleKind::Martingale);
}

TEST(DoobMeyer, ConditionalExpectationClosedForm) {
    // Under E[.] the compensator of Y = E[X + sum dA] is dA itself.
    auto lat = hybrid(12, 3);
    auto E = conditional_expectation(lat);
    const AdaptedProcess dA = tabulate_process(*lat, [](int k, std::size_t n) { return 0.01 * (1 + k % 3) + 0.001 * static_cast<double>(n % 2); });
    Sampler rng(2);
    const AdaptedProcess Y = apply_process(*E, rng.claim(*lat, 12), Dividend::from_increments(dA));
    const Decomposition d = doob_meyer_direct(*E, Y, 1e-12);
    for (int k = 0; k < 12; ++k) EXPECT_LT(sup_distance(d.increments.at(k), dA.at(k)), 1e-10);
    EXPECT_LT(d.residual, 1e-9);
}

TEST(DoobMeyer, RejectsSubmartingale) {
    auto lat = hybrid(6, 2);
    auto E = from_driver(lat, g_mu(0.5));
    Sampler rng(3);
    const AdaptedProcess Y = apply_process(*E, rng.claim(*lat, 6), -rng.increasing_dividend(*lat));
    try {
        doob_meyer_direct(*E, Y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSupermartingale);
    }
}

TEST(DoobMeyer, PenalizationIsMonotoneAndBelow) {
    auto lat = hybrid(16, 3);
    auto E = from_driver(lat, g_mu(0.5));
    Sampler rng(4);
    const AdaptedProcess Y = apply_process(*E, rng.smooth_claim(*lat, 16), rng.increasing_dividend(*lat));
    const auto trace = doob_meyer_penalized(*E, Y, {1, 4, 16, 64});
    ASSERT_EQ(trace.steps.size(), 4u);
    for (const auto& s : trace.steps) {
        EXPECT_TRUE(s.monotone);
        EXPECT_TRUE(s.below_target);
    }
    EXPECT_LT(trace.steps.back().gap, trace.steps.front().gap);
}

TEST(Representation, ExtractedGeneratorMatchesDriver) {
    auto lat = hybrid(10, 3);
    const Driver g = linear_driver(0.3, {-0.2}, 0.0);
    auto E = from_driver(lat, g);
    Sampler rng(5);
    const auto rep = extract_representation(*E, rng.smooth_claim(*lat, 10));
    for (int k = 0; k < 10; ++k)
        for (std::size_t n = 0; n < lat->node_count(k); ++n) {
            const double z[] = {rep.z[0].at(k)[n]};
            EXPECT_NEAR(rep.g.at(k)[n], g(k, n, rep.Y.at(k)[n], z), 1e-10);
        }
    EXPECT_EQ(rep.bound_violation, 0.0);
}

TEST(Upcrossings, CountsCompletedPassages) {
    auto lat = Lattice::build({1.0, 4, 1});
    // Y_k = B_k: leaf 0b0101 visits 0, -h, 0, -h, 0 and 0b1010 visits 0, h, 0, h, 0.
    const AdaptedProcess B = brownian_process(*lat);
    const double h = lat->sqrt_dt();
    const auto U = upcrossings(*lat, B, -0.9 * h, -0.1 * h);
    EXPECT_EQ(U[0b0101], 2.0);
    EXPECT_EQ(U[0b1010], 0.0);
    EXPECT_EQ(U[0b0000], 0.0);
    EXPECT_EQ(U[0b0011], 1.0);
    EXPECT_THROW(upcrossings(*lat, B, 1.0, 1.0), Error);
}

TEST(Upcrossings, InequalityHoldsForSupermartingale) {
    auto lat = Lattice::build({1.0, 8, 1});
    Sampler rng(6);
    auto E = from_driver(lat, g_mu(0.5));
    const AdaptedProcess Y = apply_process(*E, rng.claim(*lat, 8), rng.increasing_dividend(*lat));
    const auto rep = upcrossing_check(lat, Y, -0.2, 0.2, g_mu(0.5));
    EXPECT_TRUE(rep.holds);
    EXPECT_GE(rep.lhs, 0.0);
    EXPECT_LE(rep.rhs_signed, rep.rhs);
}

TEST(OptionalStopping, SupermartingaleAndMartingale) {
    auto lat = Lattice::build({1.0, 7, 1});
    auto E = from_driver(lat, kappa_abs_z(0.3));
    Sampler rng(7);
    const RandomVariable X = rng.claim(*lat, 7);
    const StoppingTime tau = rng.stopping_time(*lat, 0.2);
    const StoppingTime sigma = StoppingTime::earliest(*lat, tau, rng.stopping_time(*lat, 0.2));
    EXPECT_TRUE(optional_stopping_check(*E, apply_process(*E, X), sigma, tau).holds);
    const auto sup = optional_stopping_check(*E, apply_process(*E, X, rng.increasing_dividend(*lat)), sigma, tau);
    EXPECT_EQ(sup.kind, MartingaleKind::Supermartingale);
    EXPECT_TRUE(sup.holds);
    EXPECT_THROW(optional_stopping_check(*E, apply_process(*E, X), tau, StoppingTime::constant(*lat, 0)), Error);
}
