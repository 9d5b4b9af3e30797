#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "geval/lattice.hpp"
#include "geval/stopping.hpp"

namespace geval {

/// Euclidean norm of a z-vector.
double norm(std::span<const double> z);

/// Generator g(k, node, y, z) with a declared Lipschitz constant mu, in the
/// sense |g(y,z) - g(y',z')| <= mu (|y - y'| + |z - z'|).
struct Driver {
    using Fn = std::function<double(int k, std::size_t node, double y, std::span<const double> z)>;

    Fn fn;
    double mu = 0.0;
    /// g(., 0, 0) == 0.
    bool zero_at_origin = false;
    /// g(., y, 0) == 0 for every y; implies zero_at_origin.
    bool zero_at_z0 = false;
    std::string label;

    double operator()(int k, std::size_t node, double y, std::span<const double> z) const { return fn(k, node, y, z); }
};

Driver zero_driver();
Driver g_mu(double mu);
Driver neg_g_mu(double mu);
Driver kappa_abs_z(double kappa);
/// g = -r y - theta . z with theta the market prices of risk.
Driver black_scholes(double r, std::vector<double> theta);
/// g = a y + b . z + c.
Driver linear_driver(double a, std::vector<double> b, double c = 0.0);

/// Builtin by name. Recognised: zero, g_mu {mu}, neg_g_mu {mu}, kappa_abs_z {kappa},
/// black_scholes {r, theta | b + sigma}, linear {a, b, c}. Vector parameters
/// may be given as a scalar for d = 1.
Driver builtin(const std::string& name, const nlohmann::json& params, int dimension = 1);

/// g_*(y, z) = -g(-y, -z).
Driver reflect(const Driver& g);

/// g_bar(k, y, z) = g(k, y - K_k, z) before tau and 0 from tau on.
Driver shift_by_dividend(const Driver& g, const AdaptedProcess& K, const StoppingTime& tau);

struct LipschitzSample {
    int k = 0;
    std::size_t node = 0;
    double y = 0.0;
    std::vector<double> z;
    double y2 = 0.0;
    std::vector<double> z2;
};

struct LipschitzEstimate {
    double estimate = 0.0;
    /// Estimate above the declared mu by more than a relative 1e-9.
    bool exceeds_declared = false;
};

/// Largest observed |dg| / (|dy| + |dz|). Throws DegenerateGrid if every pair coincides.
LipschitzEstimate estimate_lipschitz(const Driver& g, std::span<const LipschitzSample> samples);

/// Axis-aligned neighbour pairs over a y/z grid at the root node and time 0.
std::vector<LipschitzSample> axis_pairs(int dimension, std::span<const double> ys, std::span<const double> zs);

/// Driver tabulated on (t-index, y, z_1..z_d) with multilinear interpolation
/// and clamped extrapolation. Values are stored row-major with t slowest.
class TabulatedDriver {
public:
    TabulatedDriver(std::vector<int> times, std::vector<double> ys, std::vector<std::vector<double>> zs, double mu);

    int dimension() const noexcept { return static_cast<int>(zs_.size()); }
    const std::vector<int>& times() const noexcept { return times_; }
    const std::vector<double>& ys() const noexcept { return ys_; }
    const std::vector<std::vector<double>>& zs() const noexcept { return zs_; }
    double declared_mu() const noexcept { return mu_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Flat index of the grid cell (ti, yi, zi...).
    std::size_t index(std::size_t ti, std::size_t yi, std::span<const std::size_t> zi) const;
    double& at(std::size_t flat) { return values_[flat]; }
    double at(std::size_t flat) const { return values_[flat]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double value(int k, double y, std::span<const double> z) const;

    /// Largest difference quotient between neighbours along the y and z axes,
    /// measured against |dy| + |dz|.
    double grid_lipschitz() const;
    /// max over t of |g(t, 0, 0)| using the interpolant.
    double origin_defect() const;

    Driver to_driver(std::string label = "tabulated") const;

    nlohmann::json to_json() const;
    static TabulatedDriver from_json(const nlohmann::json& j);

    /// Tabulates g on the grid, evaluated at node 0 of each time.
    static TabulatedDriver sample(const Driver& g, std::vector<int> times, std::vector<double> ys,
                                  std::vector<std::vector<double>> zs);

private:
    void validate() const;

    std::vector<int> times_;
    std::vector<double> ys_;
    std::vector<std::vector<double>> zs_;
    double mu_;
    std::vector<double> values_;
    std::vector<std::size_t> strides_;
};

}  // namespace geval
