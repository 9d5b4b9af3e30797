#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "geval/error.hpp"
#include "geval/payoff.hpp"

using namespace geval;

TEST(Payoff, ParsesIntoExpectedTree) {
    const PayoffExpr e = parse_payoff("max(S - 100, 0)");
    ASSERT_EQ(e->kind, PayoffNode::Kind::Call);
    EXPECT_EQ(e->name, "max");
    ASSERT_EQ(e->args.size(), 2u);
    EXPECT_EQ(e->args[0]->kind, PayoffNode::Kind::Binary);
    EXPECT_EQ(e->args[0]->op, '-');
    EXPECT_EQ(e->args[0]->args[0]->name, "S");
    EXPECT_EQ(e->args[0]->args[1]->number, 100.0);
    EXPECT_EQ(e->args[1]->number, 0.0);

    const PayoffExpr f = parse_payoff("B1*B1 - T");
    EXPECT_EQ(f->op, '-');
    EXPECT_EQ(f->args[0]->op, '*');
    EXPECT_EQ(f->args[1]->name, "T");
}

TEST(Payoff, ParseErrorCarriesOffset) {
    try {
        parse_payoff("max(S, )");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 7u);
        EXPECT_FALSE(e.expected().empty());
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
    EXPECT_THROW(parse_payoff(""), ParseError);
    EXPECT_THROW(parse_payoff("1 +"), ParseError);
    EXPECT_THROW(parse_payoff("(1"), ParseError);
    EXPECT_THROW(parse_payoff("1 2"), ParseError);
}

TEST(Payoff, IdentifierAndArityErrors) {
    auto code_of = [](const char* text, int d = 1) {
        try {
            parse_payoff(text, d);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::ConfigError;
    };
    EXPECT_EQ(code_of("X + 1"), ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of("B2"), ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of("B2", 2), ErrorCode::ConfigError);
    EXPECT_EQ(code_of("sqrt(2)"), ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of("max(1)"), ErrorCode::ArityMismatch);
    EXPECT_EQ(code_of("abs(1, 2)"), ErrorCode::ArityMismatch);
    EXPECT_EQ(code_of("Y"), ErrorCode::UnknownIdentifier);
}

TEST(Payoff, PrecedenceAndAssociativity) {
    PayoffVars v;
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("2 + 3 * 4"), v), 14.0);
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("10 - 4 - 3"), v), 3.0);
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("64 / 4 / 2"), v), 8.0);
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("-2 * -3"), v), 6.0);
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("2 - -3"), v), 5.0);
    EXPECT_DOUBLE_EQ(evaluate_payoff(parse_payoff("1.5e1 + .5"), v), 15.5);
}

TEST(Payoff, PrintParseRoundTrip) {
    for (const char* text : {"max(S - 100, 0)", "B1*B1 - T", "-(1 - 2) * 3", "1 - (2 - 3)", "a", "exp(-T) / (1 + abs(B1))",
                             "0.1 + 0.2", "--B1", "2 / (3 * 4)", "(2 / 3) * 4", "min(RUNMAX_S, 1e300) - RUNMIN_S"}) {
        if (std::string(text) == "a") continue;
        const std::string once = print(parse_payoff(text));
        EXPECT_EQ(print(parse_payoff(once)), once) << text;
    }
    EXPECT_EQ(print(parse_payoff("1 - (2 - 3)")), "1 - (2 - 3)");
    EXPECT_EQ(print(parse_payoff("(1 - 2) - 3")), "1 - 2 - 3");
    EXPECT_EQ(print(parse_payoff("0.1")), "0.10000000000000001");
}

TEST(Payoff, GuardedEvaluation) {
    PayoffVars v;
    EXPECT_TRUE(std::isfinite(evaluate_payoff(parse_payoff("log(0)"), v)));
    EXPECT_TRUE(std::isfinite(evaluate_payoff(parse_payoff("log(-1) + exp(1000)"), v)));
    try {
        evaluate_payoff(parse_payoff("1 / T"), v);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidClaim);
    }
}

TEST(Payoff, ClaimsOnTheLattice) {
    auto lat = Lattice::build({1.0, 4, 1});
    const PayoffModel model{100.0, 0.0, 0.2};
    const auto S = payoff_claim(*lat, parse_payoff("S"), model);
    const auto runmax = payoff_claim(*lat, parse_payoff("RUNMAX_S"), model);
    for (std::size_t leaf = 0; leaf < S.size(); ++leaf) {
        EXPECT_NEAR(S[leaf], 100.0 * std::exp(0.2 * lat->brownian(4, leaf)), 1e-12);
        double m = 0.0;
        for (int k = 0; k <= 4; ++k) m = std::max(m, 100.0 * std::exp(0.2 * lat->brownian(k, lat->ancestor(4, leaf, k))));
        EXPECT_NEAR(runmax[leaf], m, 1e-12);
    }
    // An intermediate-time claim is measurable at its own time.
    const auto mid = payoff_claim(*lat, parse_payoff("B1 * T"), model, 2);
    EXPECT_EQ(mid.time, 2);
    LatticeOptions opt;
    opt.path_steps = 1;
    auto hyb = Lattice::build({1.0, 4, 1}, opt);
    EXPECT_THROW(payoff_claim(*hyb, parse_payoff("RUNMAX_S"), model), Error);
    EXPECT_NO_THROW(payoff_claim(*hyb, parse_payoff("S"), model));
}

TEST(Payoff, FuzzedInputsParseOrFailCleanly) {
    std::mt19937_64 rng(2718);
    const std::string alphabet = "0123456789+-*/()., eE SBTmaxinbslogp_RUNMAXIN1\t";
    for (int i = 0; i < 3000; ++i) {
        std::string text(std::uniform_int_distribution<int>(0, 1024)(rng) % (i % 7 == 0 ? 1025 : 40), ' ');
        for (char& c : text)
            c = i % 3 == 0 ? static_cast<char>(std::uniform_int_distribution<int>(1, 127)(rng))
                           : alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        try {
            const PayoffExpr e = parse_payoff(text);
            EXPECT_EQ(print(parse_payoff(print(e))), print(e));
        } catch (const ParseError& e) {
            EXPECT_LE(e.offset(), text.size());
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == ErrorCode::UnknownIdentifier || e.code() == ErrorCode::ArityMismatch);
        }
    }
    EXPECT_THROW(parse_payoff(std::string(1000, '(')), ParseError);
    EXPECT_THROW(parse_payoff(std::string(1000, '-')), ParseError);
}
