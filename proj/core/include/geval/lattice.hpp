#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace geval {

/// Horizon, step count and Brownian dimension of a lattice.
struct LatticeSpec {
    double horizon = 1.0;
    int steps = 1;
    int dimension = 1;

    double dt() const noexcept { return horizon / steps; }
    double sqrt_dt() const;
    void validate() const;
};

struct LatticeOptions {
    /// Number of leading steps resolved as full binary paths. The remaining
    /// steps recombine: a node there is (path prefix, up-count per coordinate).
    /// Unset means the whole horizon is a path tree.
    std::optional<int> path_steps;
    /// Cap on dimension * path_steps (bits of path index).
    int max_path_bits = 24;
    /// Cap on the number of nodes in any single time slice.
    std::size_t max_slice_nodes = std::size_t{1} << 26;
};

/// Scenario tree discretising d-dimensional Brownian motion with 2^d
/// equally weighted sign branches per step.
///
/// Node indexing at time k:
///   - k <= path_steps: the path word as an integer, first step most
///     significant; within one step, bit i of the branch is coordinate i
///     (set = up).
///   - k > path_steps: prefix * r^d + sum_i u_i * r^i with r = k - path_steps + 1
///     and u_i the number of up moves of coordinate i after the prefix.
class Lattice {
public:
    static std::shared_ptr<const Lattice> build(const LatticeSpec& spec, const LatticeOptions& options = {});

    const LatticeSpec& spec() const noexcept { return spec_; }
    int steps() const noexcept { return spec_.steps; }
    int dimension() const noexcept { return spec_.dimension; }
    double horizon() const noexcept { return spec_.horizon; }
    double dt() const noexcept { return dt_; }
    double sqrt_dt() const noexcept { return sqrt_dt_; }
    double time(int k) const noexcept { return k * dt_; }

    int path_steps() const noexcept { return path_steps_; }
    bool is_path_tree() const noexcept { return path_steps_ == spec_.steps; }

    std::size_t branches() const noexcept { return branches_; }
    double branch_weight() const noexcept { return 1.0 / static_cast<double>(branches_); }
    std::size_t node_count(int k) const;
    std::size_t child(int k, std::size_t node, std::size_t branch) const;

    /// +1 or -1: sign of coordinate `coord` on `branch`.
    double sign(std::size_t branch, int coord) const noexcept {
        return ((branch >> coord) & 1U) ? 1.0 : -1.0;
    }
    double increment(std::size_t branch, int coord) const noexcept { return sign(branch, coord) * sqrt_dt_; }

    /// Coordinate `coord` of B at time-k node.
    double brownian(int k, std::size_t node, int coord = 0) const;

    /// Time-e ancestor of a time-k node; requires e <= min(k, path_steps).
    std::size_t ancestor(int k, std::size_t node, int e) const;

    /// Parent of a time-k node (k >= 1) on a path tree.
    std::size_t parent(int k, std::size_t node) const;

    /// Throws LatticeMismatch unless k is in [0, steps].
    void check_time(int k) const;
    void require_path_tree(const char* what) const;

private:
    Lattice(const LatticeSpec& spec, int path_steps);

    std::size_t state_radix_power(int k) const;
    std::size_t prefix_of(int k, std::size_t node) const;

    LatticeSpec spec_;
    int path_steps_;
    double dt_;
    double sqrt_dt_;
    std::size_t branches_;
    std::vector<std::uint64_t> coord_masks_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

/// An F_k-measurable random variable: one value per time-k node.
struct RandomVariable {
    int time = 0;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
    double& operator[](std::size_t i) noexcept { return values[i]; }
};

/// One random variable per time index 0..N (slice k has time k).
struct AdaptedProcess {
    std::vector<RandomVariable> slices;

    const RandomVariable& at(int k) const { return slices.at(static_cast<std::size_t>(k)); }
    RandomVariable& at(int k) { return slices.at(static_cast<std::size_t>(k)); }
    int last_time() const noexcept { return static_cast<int>(slices.size()) - 1; }
};

/// Throws LatticeMismatch if X does not fit the lattice, NotMeasurable on
/// non-finite entries.
void check_variable(const Lattice& lattice, const RandomVariable& X);
void check_process(const Lattice& lattice, const AdaptedProcess& P);

RandomVariable constant(const Lattice& lattice, int k, double c);
RandomVariable brownian(const Lattice& lattice, int k, int coord = 0);
RandomVariable tabulate(const Lattice& lattice, int k, const std::function<double(std::size_t)>& f);

AdaptedProcess constant_process(const Lattice& lattice, double c);
AdaptedProcess tabulate_process(const Lattice& lattice, const std::function<double(int, std::size_t)>& f);
AdaptedProcess brownian_process(const Lattice& lattice, int coord = 0);

/// Classical conditional expectation E[X | F_s].
RandomVariable cond_expect(const Lattice& lattice, const RandomVariable& X, int s);

/// E[X] as a number.
double expectation(const Lattice& lattice, const RandomVariable& X);

/// True iff X (at its time t) is F_s-measurable: constant on the future of every time-s node.
bool is_measurable(const Lattice& lattice, const RandomVariable& X, int s, double tol = 0.0);

/// Re-expresses an F_s random variable at a later time t. Throws
/// NotMeasurable when recombination makes the value ambiguous.
RandomVariable broadcast(const Lattice& lattice, const RandomVariable& X, int t);

RandomVariable map(const RandomVariable& X, const std::function<double(double)>& f);
RandomVariable zip(const RandomVariable& X, const RandomVariable& Y, const std::function<double(double, double)>& f);
RandomVariable operator+(const RandomVariable& X, const RandomVariable& Y);
RandomVariable operator-(const RandomVariable& X, const RandomVariable& Y);
RandomVariable operator-(const RandomVariable& X);
RandomVariable operator*(double a, const RandomVariable& X);
RandomVariable operator+(const RandomVariable& X, double c);

AdaptedProcess operator+(const AdaptedProcess& X, const AdaptedProcess& Y);
AdaptedProcess operator-(const AdaptedProcess& X, const AdaptedProcess& Y);
AdaptedProcess operator*(double a, const AdaptedProcess& X);

double sup_norm(const RandomVariable& X);
double sup_distance(const RandomVariable& X, const RandomVariable& Y);
double sup_distance(const AdaptedProcess& X, const AdaptedProcess& Y);

/// Largest violation of X >= Y nodewise (0 when it holds).
double max_shortfall(const RandomVariable& X, const RandomVariable& Y);

nlohmann::json to_json(const RandomVariable& X);
nlohmann::json to_json(const AdaptedProcess& P);
RandomVariable variable_from_json(const nlohmann::json& j, int time);
AdaptedProcess process_from_json(const nlohmann::json& j);

}  // namespace geval
