#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geval/evaluation.hpp"

namespace geval {

struct AxiomCheck {
    std::string name;
    /// Worst violation observed; zero or positive.
    double worst = 0.0;
    bool pass = true;
    int instances = 0;
    /// Where the worst violation happened: sample, times, node.
    nlohmann::json witness;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    std::uint64_t seed = 0;
    int samples = 0;
    double slack = 1e-9;
    /// mu used for the domination check (declared, overridden or scanned).
    std::optional<double> mu;
    /// Set when mu was not declared and had to be scanned.
    bool mu_scanned = false;

    bool all_pass() const;
    const AxiomCheck& at(const std::string& name) const;
    nlohmann::json to_json() const;
    std::string summary() const;
};

struct AxiomSuiteOptions {
    int samples = 100;
    std::uint64_t seed = 42;
    double slack = 1e-9;
    double claim_scale = 1.0;
    /// Also check E_{s,t}[X] = X for F_s-measurable X.
    bool check_a2_prime = false;
    /// Also check (B1)-(B4) for E[.|F_t] := E_{t,N} (path trees only).
    bool check_b = false;
    /// Replaces the declared mu for the domination check.
    std::optional<double> mu;
    /// Scan start and number of doublings when no mu is available.
    double mu_scan_start = 1.0 / 64.0;
    int mu_scan_steps = 16;
};

/// Samples (s, t, X, X', A) and measures every axiom on them:
/// A1 monotonicity, A2, A3 consistency, A4 zero-one law, A4' and A4_0,
/// the split identity eA4 and A5 domination by g_mu.
AxiomReport axiom_suite(const Evaluation& E, const AxiomSuiteOptions& options = {});

}  // namespace geval
