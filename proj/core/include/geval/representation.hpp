#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "geval/evaluation.hpp"

namespace geval {

struct ProbeResult {
    /// Value at the reference node (node 0 of the probe time).
    double value = 0.0;
    /// max - min of the probe across the time-t nodes.
    double dispersion = 0.0;
    RandomVariable per_node;
};

/// (T - t)^{-1} E_{t,N}[z . (B_N - B_t)], which equals g(z) for a z-only driver.
ProbeResult probe_constant_z(const Evaluation& E, int t, std::span<const double> z_bar);

/// (E_{t,t+1}[y + p . dB_t] - y) / dt, the one-step difference quotient.
ProbeResult probe_infinitesimal(const Evaluation& E, int t, double y, std::span<const double> p);

struct ProbeGrid {
    std::vector<int> times;
    std::vector<double> ys;
    /// One axis per Brownian coordinate.
    std::vector<std::vector<double>> zs;
};

enum class ReconstructMethod { OneStep, TestProcess };

struct Reconstruction {
    TabulatedDriver table;
    /// Dispersion of each cell across the time-t nodes (same layout as table).
    std::vector<double> dispersion;
    double grid_lipschitz = 0.0;
    double origin_defect = 0.0;
    /// grid_lipschitz <= mu (1 + 0.05).
    bool lipschitz_ok = false;
    /// |g_hat(t, 0, 0)| <= 1e-8.
    bool origin_ok = false;
};

/// Tabulates g_hat over the grid. OneStep uses the probe quotient with claim
/// y + z.dB. TestProcess runs the forward step y - mu(|y|+|z|) dt + z.dB of
/// the test process, decomposes it as an E-supermartingale and reads the
/// generator off the decomposition. mu defaults to the declared one.
/// Throws AxiomsFailed if a test process is not an E-supermartingale.
Reconstruction reconstruct_driver(const Evaluation& E, const ProbeGrid& grid, ReconstructMethod method,
                                  std::optional<double> mu = std::nullopt);

struct RoundtripCase {
    RandomVariable X;
    Dividend K;
};

struct RoundtripReport {
    double max_diff = 0.0;
    std::vector<double> per_case;
    double threshold = 0.05;
    bool pass = false;
};

/// sup over cases, times and nodes of |E_{s,t}[X; K] - E^{g_hat}_{s,t}[X; K]|.
RoundtripReport verify_roundtrip(const Evaluation& E, const TabulatedDriver& g_hat,
                                 const std::vector<RoundtripCase>& cases, double threshold = 0.05);

/// Source term f(k, node, y) with Lipschitz constant c in y.
struct Source {
    std::function<double(int k, std::size_t node, double y)> fn;
    double c = 0.0;
    std::string label;
};

/// Builtins: zero, linear {a, b}: a y + b, abs {c}: c |y|, saturate {c}: c y / (1 + |y|).
Source builtin_source(const std::string& name, const nlohmann::json& params);

struct FixedPointTrace {
    /// Weighted distances between consecutive iterates.
    std::vector<double> distances;
    /// distances[m+1] / distances[m], recorded only while distances[m] is
    /// above noise_floor; below it the quotient measures rounding, not contraction.
    std::vector<double> ratios;
    /// Weighted norm of a 64 ulp perturbation of the current iterate.
    double noise_floor = 0.0;
    /// Sup-norm change per iterate.
    std::vector<double> sup_changes;
    int iterations = 0;
    double weight_rate = 0.0;
};

struct FixedPointResult {
    AdaptedProcess Y;
    /// Dividend K_k = sum_{j<k} f(j, Y_j) dt of the solution.
    Dividend K;
    FixedPointTrace trace;
};

struct FixedPointOptions {
    double tol = 1e-10;
    int max_iterations = 500;
    /// Overrides the declared mu in the weight e^{2Ct}, C = c^2 e^{beta T}.
    std::optional<double> mu;
};

/// Y = E_{.,N}[X; int f(Y) dt] by Picard iteration from Y = 0, with distances
/// measured in the norm (sum_k E[|Y_k|^2] e^{2C(t_k - T)} dt)^{1/2}. Stops once
/// both that distance and the sup-norm change are below tol.
FixedPointResult solve_bsde_under_E(const Evaluation& E, const Source& f, const RandomVariable& X,
                                    const FixedPointOptions& options = {});

/// Predictable increments f(k, Y_k) dt.
Dividend source_dividend(const Lattice& lattice, const Source& f, const AdaptedProcess& Y);

}  // namespace geval
