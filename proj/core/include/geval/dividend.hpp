#pragma once

#include <optional>

#include "geval/lattice.hpp"

namespace geval {

/// Cumulative dividend stream K, seen through its one-step increments.
///
/// Two representations are combined linearly: an adapted process K whose
/// increment over the edge (k, node) -> (k+1, child) is K_{k+1}(child) - K_k(node),
/// and predictable increments dA_k(node) paid over step k -> k+1. The second form
/// is what decompositions produce; on recombining steps a cumulative A is not a
/// function of the node, while its increments are.
class Dividend {
public:
    Dividend() = default;

    static Dividend from_process(AdaptedProcess K);
    /// Slice k (k < N) holds the increment over step k -> k+1; slice N is ignored.
    static Dividend from_increments(AdaptedProcess dA);
    /// dA_k = rate_k * dt.
    static Dividend from_rate(const Lattice& lattice, const AdaptedProcess& rate);

    bool is_zero() const noexcept { return !adapted_ && !predictable_; }
    const std::optional<AdaptedProcess>& adapted() const noexcept { return adapted_; }
    const std::optional<AdaptedProcess>& predictable() const noexcept { return predictable_; }

    double increment(int k, std::size_t node, std::size_t child) const {
        double inc = 0.0;
        if (adapted_) inc += adapted_->at(k + 1).values[child] - adapted_->at(k).values[node];
        if (predictable_) inc += predictable_->at(k).values[node];
        return inc;
    }

    /// Fills out[b] with the increment along branch b.
    void increments(const Lattice& lattice, int k, std::size_t node, std::span<double> out) const;

    /// Largest violation of "every increment >= 0".
    double worst_decrease(const Lattice& lattice) const;

    /// Cumulative process starting from 0 at time 0. Throws NotMeasurable when
    /// the predictable part is not representable after recombination.
    AdaptedProcess cumulative(const Lattice& lattice) const;

    void check(const Lattice& lattice) const;

    friend Dividend operator+(const Dividend& a, const Dividend& b);
    friend Dividend operator-(const Dividend& a, const Dividend& b);
    friend Dividend operator*(double c, const Dividend& a);
    Dividend operator-() const { return -1.0 * *this; }

private:
    std::optional<AdaptedProcess> adapted_;
    std::optional<AdaptedProcess> predictable_;
};

}  // namespace geval
