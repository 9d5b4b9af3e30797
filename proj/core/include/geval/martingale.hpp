#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "geval/evaluation.hpp"

namespace geval {

enum class MartingaleKind { Martingale, Supermartingale, Submartingale, None };

std::string to_string(MartingaleKind kind);

struct Classification {
    MartingaleKind kind = MartingaleKind::None;
    /// max |E_{k,k+1}[Y_{k+1}; K] - Y_k|.
    double defect = 0.0;
    /// max (E_{k,k+1}[Y_{k+1}; K] - Y_k), positive part.
    double excess = 0.0;
    /// max (Y_k - E_{k,k+1}[Y_{k+1}; K]), positive part.
    double deficit = 0.0;
};

/// One-step test of Y against E[.; K]; one step suffices by dynamic consistency.
Classification classify(const Evaluation& E, const AdaptedProcess& Y, const Dividend& K = {}, double tol = 1e-9);

/// Largest |sum_{j<k} dA_j| along any path and time, for predictable increments.
double path_sup(const Lattice& lattice, const AdaptedProcess& increments);

/// Nondecreasing predictable A with A_0 = 0, stored by its increments
/// (slice k is the increment over k -> k+1).
struct Decomposition {
    AdaptedProcess increments;
    /// sup |Y - E_{.,N}[Y_N; A]|.
    double residual = 0.0;

    Dividend as_dividend() const { return Dividend::from_increments(increments); }
    /// max over paths of A_N.
    double sup_norm(const Lattice& lattice) const { return path_sup(lattice, increments); }
};

/// Per node, the c >= 0 with E_{k,k+1}[Y_{k+1} + c] = Y_k, by bisection.
/// Throws NotSupermartingale or RootBracketFailure.
Decomposition doob_meyer_direct(const Evaluation& E, const AdaptedProcess& Y, double tol = 1e-9);

struct PenalizationStep {
    int n = 0;
    AdaptedProcess y;
    AdaptedProcess increments;
    double gap = 0.0;
    /// y^n <= Y + 1e-9 nodewise.
    bool below_target = true;
    /// y^n <= y^{next n} + 1e-9 nodewise (true for the last entry).
    bool monotone = true;
};

struct PenalizationTrace {
    std::vector<PenalizationStep> steps;
    std::vector<int> schedule;
};

/// y^n_k = E_{k,k+1}[y^n_{k+1} + n (Y_k - y^n_k) dt], solved per node as a monotone scalar root.
PenalizationTrace doob_meyer_penalized(const Evaluation& E, const AdaptedProcess& Y, const std::vector<int>& schedule,
                                       double tol = 1e-9);

struct RepresentationPair {
    AdaptedProcess Y;
    AdaptedProcess g;
    std::vector<AdaptedProcess> z;
    /// Worst excess of |g| over mu (|Y| + |z|); zero when no mu is declared.
    double bound_violation = 0.0;
};

/// With Y_k = E_{k,t}[X; K]: z_k from the representation of Y_{k+1} + dK and
/// g_k = (Y_k - E_k[Y_{k+1} + dK]) / dt. Throws ExtractInconsistent in strict
/// mode when the growth bound fails by more than 1e-9.
RepresentationPair extract_representation(const Evaluation& E, const RandomVariable& X, const Dividend& K = {},
                                          bool strict = false);

/// Worst excess of |g - g'| over mu (|Y - Y'| + |z - z'|).
double representation_difference_violation(const RepresentationPair& a, const RepresentationPair& b, double mu);

/// Completed passages from <= a to >= b along each path (path tree only).
RandomVariable upcrossings(const Lattice& lattice, const AdaptedProcess& Y, double a, double b);

struct UpcrossReport {
    double lhs = 0.0;
    /// Bound with the level term |a| mu T.
    double rhs = 0.0;
    /// The same bound with a mu T; negative levels can push it below zero.
    double rhs_signed = 0.0;
    bool holds = false;
    double max_count = 0.0;
};

/// E^{-mu|z|}[U] against e^{2 mu T}/(b-a) (E^{mu|z|}[(Y_T - a)^-] + E^{mu|z|}[sum e^{mu t} |g(t,0,0)| dt] + |a| mu T),
/// for an E^g-supermartingale Y. Throws BadLevels or NotSupermartingale.
UpcrossReport upcrossing_check(const LatticePtr& lattice_ptr, const AdaptedProcess& Y, double a, double b, const Driver& g,
                               const SolverConfig& cfg = {});

struct OptionalStoppingReport {
    MartingaleKind kind = MartingaleKind::None;
    /// Worst violation of the relation implied by the classification.
    double violation = 0.0;
    bool holds = false;
};

/// Compares E_{sigma,tau}[Y_tau; K] with Y_sigma: equal for martingales, <= for
/// supermartingales, >= for submartingales.
OptionalStoppingReport optional_stopping_check(const Evaluation& E, const AdaptedProcess& Y, const StoppingTime& sigma,
                                               const StoppingTime& tau, const Dividend& K = {}, double slack = 1e-9);

nlohmann::json to_json(const Decomposition& d, const Lattice& lattice);
nlohmann::json to_json(const PenalizationTrace& trace, const Lattice& lattice);

}  // namespace geval
