#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "geval/bsde.hpp"
#include "geval/dividend.hpp"
#include "geval/driver.hpp"
#include "geval/evaluation.hpp"
#include "geval/lattice.hpp"
#include "geval/payoff.hpp"

namespace geval::cli {

/// A parsed scenario document. Sections are interpreted lazily by the
/// commands; the lattice and payoff model are shared by all of them.
struct Scenario {
    nlohmann::json raw;
    LatticePtr lattice;
    PayoffModel model;
    /// Relative paths inside the document resolve against this directory.
    std::filesystem::path base_dir;
    std::optional<std::uint64_t> seed;

    std::filesystem::path resolve(const std::string& path) const;
    /// The seed, or ConfigError for commands that sample.
    std::uint64_t require_seed(const char* command) const;
};

Scenario load_scenario(const nlohmann::json& config, std::filesystem::path base_dir = {},
                       std::optional<std::uint64_t> seed_override = std::nullopt);

LatticePtr parse_lattice(const nlohmann::json& j);
SolverConfig parse_solver(const nlohmann::json& j);
/// Either a builtin name or {"name", "params"}.
Driver parse_driver(const nlohmann::json& j, int dimension);

/// Evaluation sources by kind: driver, cond_expect, tabulated, concatenate,
/// lifted, black_box. The top-level "driver" key is shorthand for kind driver.
EvaluationPtr parse_evaluation(const nlohmann::json& spec, const Scenario& scenario);
EvaluationPtr scenario_evaluation(const Scenario& scenario);

/// {"rate": e} pays e dt per step, {"increments": e} pays e per step and
/// {"process": e} is the cumulative process itself; e is a number or an
/// expression over the time-k state.
Dividend parse_dividend(const nlohmann::json& j, const Scenario& scenario);

/// Expression evaluated slice by slice.
AdaptedProcess expression_process(const Lattice& lattice, const PayoffExpr& e, const PayoffModel& model);

/// The claim of the scenario at time t (default N).
RandomVariable scenario_claim(const Scenario& scenario, int t = -1);

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace geval::cli
