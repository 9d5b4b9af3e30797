#include "geval/payoff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace geval {

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message)
    : Error(ErrorCode::ParseError, message + " at offset " + std::to_string(offset)),
      offset_(offset),
      expected_(std::move(expected)) {}

namespace {

const std::vector<std::string> kFactorStart{"number", "identifier", "'('", "'-'"};
constexpr int kMaxDepth = 200;

struct Arity {
    const char* name;
    std::size_t args;
};
constexpr Arity kFunctions[] = {{"max", 2}, {"min", 2}, {"abs", 1}, {"exp", 1}, {"log", 1}};

class Parser {
public:
    Parser(std::string_view text, int dimension, bool allow_y) : text_(text), dimension_(dimension), allow_y_(allow_y) {}

    PayoffExpr run() {
        skip();
        if (pos_ == text_.size()) throw ParseError(pos_, kFactorStart, "empty expression");
        PayoffExpr e = expr(0);
        skip();
        if (pos_ != text_.size())
            throw ParseError(pos_, {"operator", "end of input"}, std::string("unexpected '") + text_[pos_] + "'");
        return e;
    }

private:
    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    static PayoffExpr binary(char op, PayoffExpr a, PayoffExpr b) {
        auto n = std::make_shared<PayoffNode>();
        n->kind = PayoffNode::Kind::Binary;
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    PayoffExpr expr(int depth) {
        PayoffExpr lhs = term(depth);
        while (peek('+') || peek('-')) {
            const char op = text_[pos_++];
            lhs = binary(op, lhs, term(depth));
        }
        return lhs;
    }

    PayoffExpr term(int depth) {
        PayoffExpr lhs = factor(depth);
        while (peek('*') || peek('/')) {
            const char op = text_[pos_++];
            lhs = binary(op, lhs, factor(depth));
        }
        return lhs;
    }

    PayoffExpr factor(int depth) {
        if (depth > kMaxDepth) throw ParseError(pos_, kFactorStart, "expression nested too deeply");
        skip();
        if (pos_ >= text_.size()) throw ParseError(pos_, kFactorStart, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '-') {
            ++pos_;
            auto n = std::make_shared<PayoffNode>();
            n->kind = PayoffNode::Kind::Negate;
            n->args = {factor(depth + 1)};
            return n;
        }
        if (c == '(') {
            ++pos_;
            PayoffExpr inner = expr(depth + 1);
            if (!peek(')')) throw ParseError(pos_, {"')'", "operator"}, "missing ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier(depth);
        throw ParseError(pos_, kFactorStart, std::string("unexpected '") + c + "'");
    }

    PayoffExpr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t from = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            return pos_ - from;
        };
        std::size_t mant = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mant += digits();
        }
        if (mant == 0) throw ParseError(start, {"digit"}, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError(pos_, {"digit"}, "malformed exponent");
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || !std::isfinite(v)) throw ParseError(start, {"finite number"}, "number out of range");
        auto n = std::make_shared<PayoffNode>();
        n->kind = PayoffNode::Kind::Number;
        n->number = v;
        return n;
    }

    bool known_variable(const std::string& id) const {
        if (allow_y_ && id == "Y") return true;
        if (id == "S" || id == "RUNMAX_S" || id == "RUNMIN_S" || id == "T") return true;
        if (id.size() >= 2 && id[0] == 'B' && std::all_of(id.begin() + 1, id.end(), [](char ch) {
                return std::isdigit(static_cast<unsigned char>(ch));
            })) {
            const int i = std::atoi(id.c_str() + 1);
            return id[1] != '0' && i >= 1 && i <= dimension_;
        }
        return false;
    }

    PayoffExpr identifier(int depth) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        std::string id(text_.substr(start, pos_ - start));
        if (peek('(')) {
            const Arity* fn = nullptr;
            for (const auto& f : kFunctions)
                if (id == f.name) fn = &f;
            if (!fn) throw Error(ErrorCode::UnknownIdentifier, "unknown function '" + id + "' at offset " + std::to_string(start));
            ++pos_;
            auto n = std::make_shared<PayoffNode>();
            n->kind = PayoffNode::Kind::Call;
            n->name = id;
            if (!peek(')')) {
                n->args.push_back(expr(depth + 1));
                while (peek(',')) {
                    ++pos_;
                    n->args.push_back(expr(depth + 1));
                }
            }
            if (!peek(')')) throw ParseError(pos_, {"','", "')'", "operator"}, "malformed argument list");
            ++pos_;
            if (n->args.size() != fn->args)
                throw Error(ErrorCode::ArityMismatch, id + " takes " + std::to_string(fn->args) + " arguments, got " +
                                                          std::to_string(n->args.size()));
            return n;
        }
        if (!known_variable(id)) throw Error(ErrorCode::UnknownIdentifier, "unknown variable '" + id + "' at offset " + std::to_string(start));
        auto n = std::make_shared<PayoffNode>();
        n->kind = PayoffNode::Kind::Variable;
        n->name = id;
        return n;
    }

    std::string_view text_;
    int dimension_;
    bool allow_y_;
    std::size_t pos_ = 0;
};

int precedence(const PayoffNode& n) {
    switch (n.kind) {
        case PayoffNode::Kind::Binary: return (n.op == '+' || n.op == '-') ? 1 : 2;
        case PayoffNode::Kind::Negate: return 3;
        default: return 4;
    }
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_into(const PayoffNode& n, std::string& out) {
    switch (n.kind) {
        case PayoffNode::Kind::Number: out += format_number(n.number); return;
        case PayoffNode::Kind::Variable: out += n.name; return;
        case PayoffNode::Kind::Negate: {
            out += '-';
            const bool wrap = precedence(*n.args[0]) < 3;
            if (wrap) out += '(';
            print_into(*n.args[0], out);
            if (wrap) out += ')';
            return;
        }
        case PayoffNode::Kind::Binary: {
            const int p = precedence(n);
            const bool wrap_l = precedence(*n.args[0]) < p;
            // Left associativity: an equal-precedence right operand needs parentheses.
            const bool wrap_r = precedence(*n.args[1]) <= p;
            if (wrap_l) out += '(';
            print_into(*n.args[0], out);
            if (wrap_l) out += ')';
            out += ' ';
            out += n.op;
            out += ' ';
            if (wrap_r) out += '(';
            print_into(*n.args[1], out);
            if (wrap_r) out += ')';
            return;
        }
        case PayoffNode::Kind::Call: {
            out += n.name;
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                print_into(*n.args[i], out);
            }
            out += ')';
            return;
        }
    }
}

double eval(const PayoffNode& n, const PayoffVars& v) {
    switch (n.kind) {
        case PayoffNode::Kind::Number: return n.number;
        case PayoffNode::Kind::Variable:
            if (n.name == "S") return v.S;
            if (n.name == "RUNMAX_S") return v.runmax;
            if (n.name == "RUNMIN_S") return v.runmin;
            if (n.name == "T") return v.T;
            if (n.name == "Y") return v.Y;
            return v.B[static_cast<std::size_t>(std::atoi(n.name.c_str() + 1) - 1)];
        case PayoffNode::Kind::Negate: return -eval(*n.args[0], v);
        case PayoffNode::Kind::Binary: {
            const double a = eval(*n.args[0], v);
            const double b = eval(*n.args[1], v);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                default:
                    if (b == 0.0) fail(ErrorCode::InvalidClaim, "division by zero in claim");
                    return a / b;
            }
        }
        case PayoffNode::Kind::Call: {
            const double a = eval(*n.args[0], v);
            if (n.name == "abs") return std::abs(a);
            if (n.name == "exp") return std::exp(std::min(a, 700.0));
            if (n.name == "log") return std::log(std::max(a, 1e-300));
            const double b = eval(*n.args[1], v);
            return n.name == "max" ? std::max(a, b) : std::min(a, b);
        }
    }
    return 0.0;
}

bool reads_extrema(const PayoffNode& n) {
    if (n.kind == PayoffNode::Kind::Variable) return n.name == "RUNMAX_S" || n.name == "RUNMIN_S";
    return std::any_of(n.args.begin(), n.args.end(), [](const PayoffExpr& a) { return reads_extrema(*a); });
}

}  // namespace

PayoffExpr parse_payoff(std::string_view text, int dimension, bool allow_y) {
    return Parser(text, dimension, allow_y).run();
}

std::string print(const PayoffExpr& e) {
    std::string out;
    print_into(*e, out);
    return out;
}

bool uses_running_extrema(const PayoffExpr& e) { return reads_extrema(*e); }

double evaluate_payoff(const PayoffExpr& e, const PayoffVars& vars) {
    const double v = eval(*e, vars);
    if (!std::isfinite(v)) fail(ErrorCode::InvalidClaim, "claim evaluates to a non-finite value");
    return v;
}

RandomVariable payoff_claim(const Lattice& lattice, const PayoffExpr& e, const PayoffModel& model, int t) {
    if (t < 0) t = lattice.steps();
    lattice.check_time(t);
    const bool path = uses_running_extrema(e);
    if (path) lattice.require_path_tree("claims on running extrema");
    auto S_at = [&](int k, std::size_t node) {
        return model.S0 * std::exp(model.nu * lattice.time(k) + model.sigma * lattice.brownian(k, node, 0));
    };
    RandomVariable X = tabulate(lattice, t, [&](std::size_t n) {
        PayoffVars v;
        for (int i = 0; i < lattice.dimension(); ++i) v.B[static_cast<std::size_t>(i)] = lattice.brownian(t, n, i);
        v.S = S_at(t, n);
        v.T = lattice.horizon();
        v.runmax = v.runmin = v.S;
        if (path)
            for (int k = 0; k < t; ++k) {
                const double s = S_at(k, lattice.ancestor(t, n, k));
                v.runmax = std::max(v.runmax, s);
                v.runmin = std::min(v.runmin, s);
            }
        return evaluate_payoff(e, v);
    });
    check_variable(lattice, X);
    return X;
}

}  // namespace geval
