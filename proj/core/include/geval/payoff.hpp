#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "geval/error.hpp"
#include "geval/lattice.hpp"

namespace geval {

/// Parse failure with the byte offset where it happened and what the parser
/// would have accepted there.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message);

    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

struct PayoffNode;
using PayoffExpr = std::shared_ptr<const PayoffNode>;

struct PayoffNode {
    enum class Kind { Number, Variable, Negate, Binary, Call };

    Kind kind = Kind::Number;
    double number = 0.0;
    /// Variable or function name.
    std::string name;
    /// One of + - * / for Binary.
    char op = 0;
    std::vector<PayoffExpr> args;
};

/// expr := term (('+'|'-') term)*; term := factor (('*'|'/') factor)*;
/// factor := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')' | '-' factor.
/// Variables: B1..Bd, S, RUNMAX_S, RUNMIN_S, T. Functions: max/2, min/2, abs/1, exp/1, log/1.
/// With allow_y the state variable Y is accepted too (source terms).
PayoffExpr parse_payoff(std::string_view text, int dimension = 1, bool allow_y = false);

/// Canonical text with minimal parentheses; parse(print(e)) prints identically.
std::string print(const PayoffExpr& e);

/// Whether the expression reads running extrema of S.
bool uses_running_extrema(const PayoffExpr& e);

/// S_t = S0 exp(nu t + sigma B1_t).
struct PayoffModel {
    double S0 = 100.0;
    double nu = 0.0;
    double sigma = 0.2;
};

struct PayoffVars {
    std::array<double, 8> B{};
    double S = 0.0;
    double runmax = 0.0;
    double runmin = 0.0;
    double T = 0.0;
    double Y = 0.0;
};

/// Throws InvalidClaim on division by zero or a non-finite result. log is
/// evaluated at max(x, 1e-300) and exp at min(x, 700).
double evaluate_payoff(const PayoffExpr& e, const PayoffVars& vars);

/// The claim at time t (default N). Running extrema need a path tree.
RandomVariable payoff_claim(const Lattice& lattice, const PayoffExpr& e, const PayoffModel& model, int t = -1);

}  // namespace geval
