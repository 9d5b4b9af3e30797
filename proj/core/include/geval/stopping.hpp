#pragma once

#include <cstdint>
#include <vector>

#include "geval/lattice.hpp"

namespace geval {

/// Discrete stopping time stored as first-entry flags: the path stops at the
/// first time k whose node carries a set flag. Slice N is always flagged.
///
/// On a path tree the flags are closed under descendants, so a flag at
/// (k, node) means tau <= k on that atom.
class StoppingTime {
public:
    static StoppingTime constant(const Lattice& lattice, int k);

    /// From a candidate at the leaves of a path tree. Throws NotAStoppingTime
    /// if some {tau = k} is not a union of time-k atoms.
    static StoppingTime from_values(const Lattice& lattice, const RandomVariable& tau);

    /// From raw first-entry flags (slices 0..N); slice N is forced to stop.
    static StoppingTime from_flags(const Lattice& lattice, std::vector<std::vector<std::uint8_t>> flags);

    /// First k >= start with Y_k >= level (upward) or Y_k <= level, else N.
    static StoppingTime hitting(const Lattice& lattice, const AdaptedProcess& Y, double level, bool upward,
                                int start = 0);

    /// Pathwise minimum.
    static StoppingTime earliest(const Lattice& lattice, const StoppingTime& a, const StoppingTime& b);

    bool stops_at(int k, std::size_t node) const { return flags_[static_cast<std::size_t>(k)][node] != 0; }
    int steps() const noexcept { return static_cast<int>(flags_.size()) - 1; }

    /// tau per leaf (path tree only).
    RandomVariable to_values(const Lattice& lattice) const;

private:
    explicit StoppingTime(std::vector<std::vector<std::uint8_t>> flags) : flags_(std::move(flags)) {}
    void close_on_path_tree(const Lattice& lattice);

    std::vector<std::vector<std::uint8_t>> flags_;
};

/// Atom scan: values must be integers in [0, N] and {tau <= k} a union of
/// time-k atoms. Returns false on any violation.
bool is_stopping_time(const Lattice& lattice, const RandomVariable& candidate);

/// True iff sigma <= tau on every path.
bool precedes(const Lattice& lattice, const StoppingTime& sigma, const StoppingTime& tau);

struct StopNode {
    int time;
    std::size_t node;
};

/// Reachable first-entry nodes of tau, in time order.
std::vector<StopNode> stop_nodes(const Lattice& lattice, const StoppingTime& tau);

/// Y_tau per leaf (path tree only).
RandomVariable stopped_value(const Lattice& lattice, const AdaptedProcess& Y, const StoppingTime& tau);

/// Terminal values indexed by stop node: the process whose value at each
/// stop node of tau is X on that atom. Throws NotMeasurable if the leaf
/// variable X is not F_tau-measurable (path tree only).
AdaptedProcess values_at_stop(const Lattice& lattice, const StoppingTime& tau, const RandomVariable& X,
                              double tol = 0.0);

}  // namespace geval
