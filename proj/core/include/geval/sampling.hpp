#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "geval/dividend.hpp"
#include "geval/lattice.hpp"
#include "geval/stopping.hpp"

namespace geval {

/// An event A in F_s, stored as a set of atoms at time base <= s. On a path
/// tree base == s; after recombining steps the atoms are the path prefixes.
struct Event {
    int time = 0;
    int base = 0;
    std::vector<std::uint8_t> atoms;

    bool contains(const Lattice& lattice, int k, std::size_t node) const {
        return atoms[lattice.ancestor(k, node, base)] != 0;
    }
};

/// 1_A as a random variable at time k >= A.time.
RandomVariable indicator(const Lattice& lattice, const Event& A, int k);

/// Seeded source for every randomized instance. One generator per run keeps
/// results reproducible from the seed alone.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);
    bool coin(double p = 0.5);

    /// Values i.i.d. uniform in [-scale, scale].
    RandomVariable claim(const Lattice& lattice, int t, double scale = 1.0);
    /// Smooth claim a + b.B_t + c.|B_t|^2 with random coefficients.
    RandomVariable smooth_claim(const Lattice& lattice, int t, double scale = 1.0);
    /// A random function of the time-min(s, path_steps) atoms, seen at time t.
    RandomVariable measurable_claim(const Lattice& lattice, int s, int t, double scale = 1.0);
    /// Atoms included with probability 1/2.
    Event event(const Lattice& lattice, int s);
    /// Stops at each node with probability p (path tree only).
    StoppingTime stopping_time(const Lattice& lattice, double p = 0.15);
    /// Predictable increments uniform in [0, max_rate] dt.
    Dividend increasing_dividend(const Lattice& lattice, double max_rate = 1.0);
    /// Adapted process with entries uniform in [-scale, scale].
    AdaptedProcess adapted(const Lattice& lattice, double scale = 1.0);

    std::mt19937_64& engine() noexcept { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace geval
