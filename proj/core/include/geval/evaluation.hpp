#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geval/bsde.hpp"
#include "geval/dividend.hpp"
#include "geval/driver.hpp"
#include "geval/lattice.hpp"
#include "geval/stopping.hpp"

namespace geval {

/// A filtration-consistent evaluation E_{s,t}, represented by its one-step
/// operators E_{k,k+1}. Multi-step values are compositions of one-step maps,
/// so dynamic consistency holds by construction and the axioms left to check
/// are the pointwise ones.
class Evaluation {
public:
    explicit Evaluation(LatticePtr lattice);
    virtual ~Evaluation() = default;

    const Lattice& lattice() const noexcept { return *lattice_; }
    const LatticePtr& lattice_ptr() const noexcept { return lattice_; }

    /// E_{k,k+1} at one time-k node; `children` holds one value per branch.
    virtual double one_step(int k, std::size_t node, std::span<const double> children) const = 0;

    /// Constant of the g_mu domination, when the source declares one.
    virtual std::optional<double> declared_mu() const = 0;

    virtual std::string describe() const = 0;

    /// The driver behind a driver-backed evaluation, else null.
    virtual const Driver* driver() const { return nullptr; }

private:
    LatticePtr lattice_;
};

using EvaluationPtr = std::shared_ptr<const Evaluation>;
using OneStepMap = std::function<double(int k, std::size_t node, std::span<const double> children)>;

/// E^g through the implicit backward step. Throws StepTooLarge or
/// MonotonicityViolated up front when the driver does not fit the lattice.
EvaluationPtr from_driver(LatticePtr lattice, Driver g, SolverConfig cfg = {});

/// Classical conditional expectation (the zero driver).
EvaluationPtr conditional_expectation(LatticePtr lattice);

/// Opaque one-step map with an optional declared domination constant.
EvaluationPtr black_box(LatticePtr lattice, OneStepMap map, std::optional<double> mu, std::string label = "black_box");

struct Segment {
    EvaluationPtr evaluation;
    int begin = 0;
    int end = 0;
};

/// Pastes evaluations over consecutive grid intervals [begin, end) that
/// partition [0, N]. Throws BadPartition otherwise.
EvaluationPtr concatenate(const std::vector<Segment>& segments);

/// E[.; K]: one step of the lift is E_{k,k+1}[X + K_{k+1} - K_k].
EvaluationPtr lift_with_dividend(EvaluationPtr base, Dividend K);

/// E_{s,t}[X; K] with t = X.time.
RandomVariable apply(const Evaluation& E, int s, const RandomVariable& X, const Dividend& K = {});

/// The process k -> E_{k,t}[X; K] for k = 0..t.
AdaptedProcess apply_process(const Evaluation& E, const RandomVariable& X, const Dividend& K = {});

/// The process E_{k wedge tau, tau}[X; K] on a path tree: equal to X on and
/// after tau, built backwards with one-step maps before it.
AdaptedProcess stopped_process(const Evaluation& E, const StoppingTime& tau, const RandomVariable& X,
                               const Dividend& K = {});

/// E_{sigma,tau}[X; K] as a leaf variable. Throws StoppingOrder unless sigma <= tau
/// and NotMeasurable unless X is F_tau-measurable.
RandomVariable extend_to_stopping(const Evaluation& E, const StoppingTime& sigma, const StoppingTime& tau,
                                  const RandomVariable& X, const Dividend& K = {});

}  // namespace geval
