#pragma once

#include <array>
#include <span>
#include <vector>

#include "geval/dividend.hpp"
#include "geval/driver.hpp"
#include "geval/lattice.hpp"
#include "geval/stopping.hpp"

namespace geval {

enum class Scheme { Implicit, Explicit };

struct SolverConfig {
    double fixed_point_tol = 1e-12;
    int max_fixed_point_iters = 100;
    /// Require mu * sqrt(d * dt) <= 0.5 so every step is monotone in its successors.
    bool monotonicity_guard = true;
    Scheme scheme = Scheme::Implicit;
    /// Relaxation weight of the implicit fixed point, in (0, 1].
    double damping = 1.0;

    void validate() const;
};

/// Outcome of one backward step at a single node.
struct StepResult {
    double y = 0.0;
    std::array<double, 8> z{};
    int iterations = 0;
    double residual = 0.0;
    /// Norm of the part of the successor values not spanned by the increments.
    double projection_residual = 0.0;
};

/// Conditional mean and representation coefficients of successor values v
/// (one per branch) at a node: z_i = E[v dB_i] / dt.
StepResult represent(const Lattice& lattice, std::span<const double> v);

/// Solves y = E[v] + g(k, node, y, z) dt (implicit) or y = E[v] + g(k, node, E[v], z) dt.
StepResult driver_step(const Lattice& lattice, const Driver& g, int k, std::size_t node, std::span<const double> v,
                       const SolverConfig& cfg);

/// Throws StepTooLarge / MonotonicityViolated for a driver that the scheme cannot handle.
void check_step_size(const Lattice& lattice, const Driver& g, const SolverConfig& cfg);

struct BSDEDiagnostics {
    /// Fixed-point iterations per node (slices 0..t-1).
    std::vector<std::vector<int>> iterations;
    int max_iterations = 0;
    double max_residual = 0.0;
    double projection_residual = 0.0;
};

struct BSDESolution {
    AdaptedProcess Y;
    /// One process per Brownian coordinate; Z_k acts on step k -> k+1, zero at the last slice.
    std::vector<AdaptedProcess> Z;
    BSDEDiagnostics diagnostics;
};

/// BSDE with deterministic terminal time X.time:
/// Y_k = E_k[Y_{k+1} + dK_k] + g(k, Y_k, Z_k) dt, Y_t = X. Y and Z cover 0..t.
BSDESolution solve_bsde(const Lattice& lattice, const Driver& g, const RandomVariable& X,
                        const Dividend& K = {}, const SolverConfig& cfg = {});

/// BSDE stopped at tau with leaf claim X (F_tau-measurable). Path trees only,
/// except for constant tau. On and after tau, Y equals X and Z vanishes.
BSDESolution solve_bsde(const Lattice& lattice, const Driver& g, const StoppingTime& tau, const RandomVariable& X,
                        const Dividend& K = {}, const SolverConfig& cfg = {});

/// E^g_{s,t}[X; K] at time s for X at time t.
RandomVariable evaluate(const Lattice& lattice, const Driver& g, int s, const RandomVariable& X,
                        const Dividend& K = {}, const SolverConfig& cfg = {});

/// E^g_{sigma,tau}[X; K] as a leaf variable (value Y_sigma on each path).
/// Throws StoppingOrder unless sigma <= tau.
RandomVariable evaluate(const Lattice& lattice, const Driver& g, const StoppingTime& sigma, const StoppingTime& tau,
                        const RandomVariable& X, const Dividend& K = {}, const SolverConfig& cfg = {});

struct PicardResult {
    BSDESolution solution;
    int sweeps = 0;
    /// Sup-norm change of Y per sweep.
    std::vector<double> changes;
};

/// Global Jacobi iteration y^{m+1}_k = E_k[y^m_{k+1} + dK_k] + g(y^m_k, z^m_k) dt over all
/// slices at once, started from the conditional expectation of X plus dividends.
PicardResult picard_solve(const Lattice& lattice, const Driver& g, const RandomVariable& X, const Dividend& K = {},
                          double tol = 1e-12, int max_sweeps = 10000);

struct AprioriReport {
    int time = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// For g_mu with source g0 (an adapted process, integrated as a predictable
/// dividend), checks E[(E^{g_mu}_{t,T}[X; int g0])^2] <= E[X^2] e^{beta(T-t)}
/// + E[sum_{s>=t} e^{beta(s-t)} |g0_s|^2 dt] with beta = 2 mu^2 + 2 mu + 2,
/// at every grid time t.
std::vector<AprioriReport> apriori_bound(const Lattice& lattice, double mu, const AdaptedProcess& g0,
                                         const RandomVariable& X, const SolverConfig& cfg = {});

}  // namespace geval
