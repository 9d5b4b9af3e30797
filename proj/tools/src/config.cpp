#include "geval_cli/config.hpp"

#include <cstdio>
#include <fstream>

#include "geval/error.hpp"

namespace geval::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing key '") + key + "'");
    return j.at(key);
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        bad("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

/// A number or an expression string as a per-node process.
AdaptedProcess number_or_expression(const json& j, const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    if (j.is_number()) return constant_process(lat, j.get<double>());
    if (!j.is_string()) bad("dividend entries must be numbers or expressions");
    return expression_process(lat, parse_payoff(j.get<std::string>(), lat.dimension()), sc.model);
}

}  // namespace

std::filesystem::path Scenario::resolve(const std::string& path) const {
    const std::filesystem::path p(path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::uint64_t Scenario::require_seed(const char* command) const {
    if (!seed) bad(std::string(command) + " samples at random and needs a seed");
    return *seed;
}

LatticePtr parse_lattice(const json& j) {
    LatticeSpec spec;
    spec.horizon = value_or(j, "horizon", 1.0);
    spec.steps = require(j, "steps").get<int>();
    spec.dimension = value_or(j, "dimension", 1);
    LatticeOptions opt;
    if (j.contains("path_steps")) opt.path_steps = j.at("path_steps").get<int>();
    opt.max_path_bits = value_or(j, "max_path_bits", opt.max_path_bits);
    return Lattice::build(spec, opt);
}

SolverConfig parse_solver(const json& j) {
    SolverConfig cfg;
    if (j.is_null()) return cfg;
    cfg.fixed_point_tol = value_or(j, "tol", cfg.fixed_point_tol);
    cfg.max_fixed_point_iters = value_or(j, "max_iterations", cfg.max_fixed_point_iters);
    cfg.monotonicity_guard = value_or(j, "guard", cfg.monotonicity_guard);
    cfg.damping = value_or(j, "damping", cfg.damping);
    const std::string scheme = value_or<std::string>(j, "scheme", "implicit");
    if (scheme == "implicit")
        cfg.scheme = Scheme::Implicit;
    else if (scheme == "explicit")
        cfg.scheme = Scheme::Explicit;
    else
        bad("unknown scheme '" + scheme + "'");
    cfg.validate();
    return cfg;
}

Driver parse_driver(const json& j, int dimension) {
    if (j.is_string()) return builtin(j.get<std::string>(), json::object(), dimension);
    return builtin(require(j, "name").get<std::string>(), value_or(j, "params", json::object()), dimension);
}

EvaluationPtr parse_evaluation(const json& spec, const Scenario& sc) {
    const std::string kind = require(spec, "kind").get<std::string>();
    const LatticePtr& lat = sc.lattice;
    if (kind == "driver") {
        const json& d = spec.contains("driver") ? spec.at("driver") : spec;
        return from_driver(lat, parse_driver(d, lat->dimension()), parse_solver(value_or(spec, "solver", sc.raw.value("solver", json()))));
    }
    if (kind == "cond_expect") return conditional_expectation(lat);
    if (kind == "tabulated") {
        const json table = spec.contains("file") ? read_json_file(sc.resolve(spec.at("file").get<std::string>()))
                                                 : require(spec, "table");
        return from_driver(lat, TabulatedDriver::from_json(table).to_driver(),
                           parse_solver(value_or(spec, "solver", sc.raw.value("solver", json()))));
    }
    if (kind == "concatenate") {
        std::vector<Segment> segments;
        for (const json& s : require(spec, "segments"))
            segments.push_back({parse_evaluation(require(s, "evaluation"), sc), require(s, "begin").get<int>(),
                                require(s, "end").get<int>()});
        return concatenate(segments);
    }
    if (kind == "lifted") return lift_with_dividend(parse_evaluation(require(spec, "base"), sc), parse_dividend(require(spec, "dividend"), sc));
    if (kind == "black_box") {
        // Only the one-step map survives; the domination constant is withheld.
        EvaluationPtr base = parse_evaluation(require(spec, "base"), sc);
        std::optional<double> mu;
        if (spec.contains("mu")) mu = spec.at("mu").get<double>();
        return black_box(
            lat, [base](int k, std::size_t node, std::span<const double> c) { return base->one_step(k, node, c); }, mu);
    }
    bad("unknown evaluation kind '" + kind + "'");
}

EvaluationPtr scenario_evaluation(const Scenario& sc) {
    if (sc.raw.contains("evaluation")) return parse_evaluation(sc.raw.at("evaluation"), sc);
    if (sc.raw.contains("driver")) return parse_evaluation(json{{"kind", "driver"}, {"driver", sc.raw.at("driver")}}, sc);
    bad("the scenario names neither an evaluation nor a driver");
}

AdaptedProcess expression_process(const Lattice& lattice, const PayoffExpr& e, const PayoffModel& model) {
    AdaptedProcess P;
    for (int k = 0; k <= lattice.steps(); ++k) P.slices.push_back(payoff_claim(lattice, e, model, k));
    return P;
}

Dividend parse_dividend(const json& j, const Scenario& sc) {
    if (j.is_null()) return {};
    const Lattice& lat = *sc.lattice;
    Dividend K;
    bool any = false;
    if (j.contains("rate")) {
        K = K + Dividend::from_rate(lat, number_or_expression(j.at("rate"), sc));
        any = true;
    }
    if (j.contains("increments")) {
        K = K + Dividend::from_increments(number_or_expression(j.at("increments"), sc));
        any = true;
    }
    if (j.contains("process")) {
        K = K + Dividend::from_process(number_or_expression(j.at("process"), sc));
        any = true;
    }
    if (!any) bad("dividend needs one of 'rate', 'increments' or 'process'");
    K.check(lat);
    return K;
}

RandomVariable scenario_claim(const Scenario& sc, int t) {
    const int time = t >= 0 ? t : value_or(sc.raw, "claim_time", sc.lattice->steps());
    const std::string text = require(sc.raw, "claim").get<std::string>();
    return payoff_claim(*sc.lattice, parse_payoff(text, sc.lattice->dimension()), sc.model, time);
}

Scenario load_scenario(const json& config, std::filesystem::path base_dir, std::optional<std::uint64_t> seed_override) {
    if (!config.is_object()) bad("the scenario must be a JSON object");
    Scenario sc;
    sc.raw = config;
    sc.base_dir = std::move(base_dir);
    sc.lattice = parse_lattice(require(config, "lattice"));
    if (config.contains("model")) {
        const json& m = config.at("model");
        sc.model.S0 = value_or(m, "S0", sc.model.S0);
        sc.model.nu = value_or(m, "nu", sc.model.nu);
        sc.model.sigma = value_or(m, "sigma", sc.model.sigma);
    }
    if (seed_override)
        sc.seed = seed_override;
    else if (config.contains("seed"))
        sc.seed = config.at("seed").get<std::uint64_t>();
    return sc;
}

std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace geval::cli
