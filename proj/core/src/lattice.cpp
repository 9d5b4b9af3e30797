#include "geval/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "geval/error.hpp"
#include "geval/parallel.hpp"

namespace geval {

namespace {

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

void require_same_shape(const RandomVariable& X, const RandomVariable& Y) {
    if (X.time != Y.time || X.values.size() != Y.values.size())
        fail(ErrorCode::LatticeMismatch, "random variables live on different slices");
}

}  // namespace

double LatticeSpec::sqrt_dt() const { return std::sqrt(dt()); }

void LatticeSpec::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        fail(ErrorCode::InvalidSpec, "horizon must be positive and finite");
    if (steps < 1) fail(ErrorCode::InvalidSpec, "steps must be >= 1");
    if (dimension < 1) fail(ErrorCode::InvalidSpec, "dimension must be >= 1");
    if (dimension > 8) fail(ErrorCode::InvalidSpec, "dimension above 8 is not supported");
}

std::shared_ptr<const Lattice> Lattice::build(const LatticeSpec& spec, const LatticeOptions& options) {
    spec.validate();
    const int path_steps = options.path_steps.value_or(spec.steps);
    if (path_steps < 0 || path_steps > spec.steps)
        fail(ErrorCode::InvalidSpec, "path_steps must lie in [0, steps]");
    if (static_cast<long>(path_steps) * spec.dimension > options.max_path_bits)
        fail(ErrorCode::CapacityExceeded,
             "path tree with d*N = " + std::to_string(path_steps * spec.dimension) +
                 " exceeds cap " + std::to_string(options.max_path_bits));
    if (path_steps * spec.dimension > 62)
        fail(ErrorCode::CapacityExceeded, "path index does not fit in 64 bits");
    // Largest slice is the terminal one.
    const double prefix_nodes = std::ldexp(1.0, path_steps * spec.dimension);
    const double state_nodes = std::pow(static_cast<double>(spec.steps - path_steps + 1), spec.dimension);
    if (prefix_nodes * state_nodes > static_cast<double>(options.max_slice_nodes))
        fail(ErrorCode::CapacityExceeded, "terminal slice exceeds node cap");
    return std::shared_ptr<const Lattice>(new Lattice(spec, path_steps));
}

Lattice::Lattice(const LatticeSpec& spec, int path_steps)
    : spec_(spec),
      path_steps_(path_steps),
      dt_(spec.dt()),
      sqrt_dt_(std::sqrt(spec.dt())),
      branches_(std::size_t{1} << spec.dimension),
      coord_masks_(static_cast<std::size_t>(spec.dimension), 0) {
    for (int i = 0; i < spec.dimension; ++i)
        for (int j = 0; j < path_steps; ++j)
            coord_masks_[static_cast<std::size_t>(i)] |= std::uint64_t{1} << (j * spec.dimension + i);
}

void Lattice::check_time(int k) const {
    if (k < 0 || k > spec_.steps)
        fail(ErrorCode::LatticeMismatch, "time index " + std::to_string(k) + " outside [0, N]");
}

void Lattice::require_path_tree(const char* what) const {
    if (!is_path_tree())
        fail(ErrorCode::RequiresPathTree, std::string(what) + " needs a lattice without recombining steps");
}

std::size_t Lattice::state_radix_power(int k) const {
    return ipow(static_cast<std::size_t>(k - path_steps_ + 1), spec_.dimension);
}

std::size_t Lattice::node_count(int k) const {
    check_time(k);
    if (k <= path_steps_) return std::size_t{1} << (k * spec_.dimension);
    return (std::size_t{1} << (path_steps_ * spec_.dimension)) * state_radix_power(k);
}

std::size_t Lattice::prefix_of(int k, std::size_t node) const {
    if (k <= path_steps_) return node;
    return node / state_radix_power(k);
}

std::size_t Lattice::child(int k, std::size_t node, std::size_t branch) const {
    const int d = spec_.dimension;
    if (k < path_steps_) return (node << d) | branch;
    const std::size_t r_old = static_cast<std::size_t>(k - path_steps_ + 1);
    const std::size_t r_new = r_old + 1;
    const std::size_t span_old = ipow(r_old, d);
    const std::size_t prefix = node / span_old;
    std::size_t state = node % span_old;
    std::size_t next = 0;
    std::size_t place = 1;
    for (int i = 0; i < d; ++i) {
        const std::size_t u = state % r_old + ((branch >> i) & 1U);
        state /= r_old;
        next += u * place;
        place *= r_new;
    }
    return prefix * ipow(r_new, d) + next;
}

double Lattice::brownian(int k, std::size_t node, int coord) const {
    const int prefix_steps = std::min(k, path_steps_);
    const std::uint64_t prefix = prefix_of(k, node);
    // Coordinate bits of a shorter prefix sit at the low end of the mask.
    const std::uint64_t mask = coord_masks_[static_cast<std::size_t>(coord)] &
                               (prefix_steps * spec_.dimension >= 64
                                    ? ~std::uint64_t{0}
                                    : (std::uint64_t{1} << (prefix_steps * spec_.dimension)) - 1);
    const int ups = std::popcount(prefix & mask);
    double b = (2.0 * ups - prefix_steps) * sqrt_dt_;
    if (k > path_steps_) {
        const std::size_t r = static_cast<std::size_t>(k - path_steps_ + 1);
        std::size_t state = node % state_radix_power(k);
        for (int i = 0; i < coord; ++i) state /= r;
        const auto u = static_cast<double>(state % r);
        b += (2.0 * u - (k - path_steps_)) * sqrt_dt_;
    }
    return b;
}

std::size_t Lattice::ancestor(int k, std::size_t node, int e) const {
    if (e > k || e > path_steps_)
        fail(ErrorCode::RequiresPathTree, "ancestor at time " + std::to_string(e) + " is not unique");
    const std::size_t prefix = prefix_of(k, node);
    const int prefix_steps = std::min(k, path_steps_);
    return prefix >> ((prefix_steps - e) * spec_.dimension);
}

std::size_t Lattice::parent(int k, std::size_t node) const {
    if (k < 1) fail(ErrorCode::TimeOrder, "time-0 node has no parent");
    return ancestor(k, node, k - 1);
}

void check_variable(const Lattice& lattice, const RandomVariable& X) {
    lattice.check_time(X.time);
    if (X.values.size() != lattice.node_count(X.time))
        fail(ErrorCode::LatticeMismatch, "random variable at time " + std::to_string(X.time) + " has " +
                                             std::to_string(X.values.size()) + " values, expected " +
                                             std::to_string(lattice.node_count(X.time)));
    for (double v : X.values)
        if (!std::isfinite(v)) fail(ErrorCode::NotMeasurable, "non-finite value in random variable");
}

void check_process(const Lattice& lattice, const AdaptedProcess& P) {
    if (P.slices.empty() || P.last_time() > lattice.steps())
        fail(ErrorCode::LatticeMismatch, "process length does not match lattice");
    for (std::size_t k = 0; k < P.slices.size(); ++k) {
        if (P.slices[k].time != static_cast<int>(k))
            fail(ErrorCode::LatticeMismatch, "process slice carries the wrong time index");
        check_variable(lattice, P.slices[k]);
    }
}

RandomVariable constant(const Lattice& lattice, int k, double c) {
    return RandomVariable{k, std::vector<double>(lattice.node_count(k), c)};
}

RandomVariable brownian(const Lattice& lattice, int k, int coord) {
    return tabulate(lattice, k, [&](std::size_t n) { return lattice.brownian(k, n, coord); });
}

RandomVariable tabulate(const Lattice& lattice, int k, const std::function<double(std::size_t)>& f) {
    RandomVariable X{k, std::vector<double>(lattice.node_count(k))};
    for (std::size_t n = 0; n < X.values.size(); ++n) X.values[n] = f(n);
    return X;
}

AdaptedProcess constant_process(const Lattice& lattice, double c) {
    AdaptedProcess P;
    for (int k = 0; k <= lattice.steps(); ++k) P.slices.push_back(constant(lattice, k, c));
    return P;
}

AdaptedProcess tabulate_process(const Lattice& lattice, const std::function<double(int, std::size_t)>& f) {
    AdaptedProcess P;
    for (int k = 0; k <= lattice.steps(); ++k)
        P.slices.push_back(tabulate(lattice, k, [&](std::size_t n) { return f(k, n); }));
    return P;
}

AdaptedProcess brownian_process(const Lattice& lattice, int coord) {
    return tabulate_process(lattice, [&](int k, std::size_t n) { return lattice.brownian(k, n, coord); });
}

RandomVariable cond_expect(const Lattice& lattice, const RandomVariable& X, int s) {
    check_variable(lattice, X);
    if (s > X.time) fail(ErrorCode::TimeOrder, "cond_expect needs s <= t");
    if (s < 0) fail(ErrorCode::TimeOrder, "negative time index");
    RandomVariable cur = X;
    const std::size_t B = lattice.branches();
    const double w = lattice.branch_weight();
    for (int k = X.time - 1; k >= s; --k) {
        RandomVariable prev{k, std::vector<double>(lattice.node_count(k))};
        parallel_for(prev.values.size(), [&](std::size_t n) {
            double acc = 0.0;
            for (std::size_t b = 0; b < B; ++b) acc += cur.values[lattice.child(k, n, b)];
            prev.values[n] = acc * w;
        });
        cur = std::move(prev);
    }
    return cur;
}

double expectation(const Lattice& lattice, const RandomVariable& X) { return cond_expect(lattice, X, 0).values[0]; }

bool is_measurable(const Lattice& lattice, const RandomVariable& X, int s, double tol) {
    check_variable(lattice, X);
    if (s > X.time) fail(ErrorCode::TimeOrder, "is_measurable needs s <= t");
    std::vector<double> lo = X.values, hi = X.values;
    for (int k = X.time - 1; k >= s; --k) {
        const std::size_t n_nodes = lattice.node_count(k);
        std::vector<double> nlo(n_nodes), nhi(n_nodes);
        for (std::size_t n = 0; n < n_nodes; ++n) {
            double a = std::numeric_limits<double>::infinity(), b = -a;
            for (std::size_t br = 0; br < lattice.branches(); ++br) {
                const std::size_t c = lattice.child(k, n, br);
                a = std::min(a, lo[c]);
                b = std::max(b, hi[c]);
            }
            nlo[n] = a;
            nhi[n] = b;
        }
        lo = std::move(nlo);
        hi = std::move(nhi);
    }
    for (std::size_t n = 0; n < lo.size(); ++n)
        if (hi[n] - lo[n] > tol) return false;
    return true;
}

RandomVariable broadcast(const Lattice& lattice, const RandomVariable& X, int t) {
    check_variable(lattice, X);
    if (t < X.time) fail(ErrorCode::TimeOrder, "broadcast needs t >= time of X");
    RandomVariable cur = X;
    for (int k = X.time; k < t; ++k) {
        const std::size_t n_next = lattice.node_count(k + 1);
        std::vector<double> next(n_next, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t n = 0; n < cur.values.size(); ++n) {
            for (std::size_t br = 0; br < lattice.branches(); ++br) {
                const std::size_t c = lattice.child(k, n, br);
                if (std::isnan(next[c])) {
                    next[c] = cur.values[n];
                } else if (next[c] != cur.values[n]) {
                    fail(ErrorCode::NotMeasurable,
                         "value is not representable after recombination at time " + std::to_string(k + 1));
                }
            }
        }
        cur = RandomVariable{k + 1, std::move(next)};
    }
    return cur;
}

RandomVariable map(const RandomVariable& X, const std::function<double(double)>& f) {
    RandomVariable R{X.time, std::vector<double>(X.values.size())};
    std::transform(X.values.begin(), X.values.end(), R.values.begin(), f);
    return R;
}

RandomVariable zip(const RandomVariable& X, const RandomVariable& Y, const std::function<double(double, double)>& f) {
    require_same_shape(X, Y);
    RandomVariable R{X.time, std::vector<double>(X.values.size())};
    std::transform(X.values.begin(), X.values.end(), Y.values.begin(), R.values.begin(), f);
    return R;
}

RandomVariable operator+(const RandomVariable& X, const RandomVariable& Y) {
    return zip(X, Y, [](double a, double b) { return a + b; });
}
RandomVariable operator-(const RandomVariable& X, const RandomVariable& Y) {
    return zip(X, Y, [](double a, double b) { return a - b; });
}
RandomVariable operator-(const RandomVariable& X) {
    return map(X, [](double a) { return -a; });
}
RandomVariable operator*(double a, const RandomVariable& X) {
    return map(X, [a](double v) { return a * v; });
}
RandomVariable operator+(const RandomVariable& X, double c) {
    return map(X, [c](double v) { return v + c; });
}

namespace {
AdaptedProcess combine(const AdaptedProcess& X, const AdaptedProcess& Y, double sign) {
    if (X.slices.size() != Y.slices.size()) fail(ErrorCode::LatticeMismatch, "process lengths differ");
    AdaptedProcess R;
    for (std::size_t k = 0; k < X.slices.size(); ++k)
        R.slices.push_back(zip(X.slices[k], Y.slices[k], [sign](double a, double b) { return a + sign * b; }));
    return R;
}
}  // namespace

AdaptedProcess operator+(const AdaptedProcess& X, const AdaptedProcess& Y) { return combine(X, Y, 1.0); }
AdaptedProcess operator-(const AdaptedProcess& X, const AdaptedProcess& Y) { return combine(X, Y, -1.0); }
AdaptedProcess operator*(double a, const AdaptedProcess& X) {
    AdaptedProcess R;
    for (const auto& s : X.slices) R.slices.push_back(a * s);
    return R;
}

double sup_norm(const RandomVariable& X) {
    double m = 0.0;
    for (double v : X.values) m = std::max(m, std::abs(v));
    return m;
}

double sup_distance(const RandomVariable& X, const RandomVariable& Y) {
    require_same_shape(X, Y);
    double m = 0.0;
    for (std::size_t i = 0; i < X.values.size(); ++i) m = std::max(m, std::abs(X.values[i] - Y.values[i]));
    return m;
}

double sup_distance(const AdaptedProcess& X, const AdaptedProcess& Y) {
    if (X.slices.size() != Y.slices.size()) fail(ErrorCode::LatticeMismatch, "process lengths differ");
    double m = 0.0;
    for (std::size_t k = 0; k < X.slices.size(); ++k) m = std::max(m, sup_distance(X.slices[k], Y.slices[k]));
    return m;
}

double max_shortfall(const RandomVariable& X, const RandomVariable& Y) {
    require_same_shape(X, Y);
    double m = 0.0;
    for (std::size_t i = 0; i < X.values.size(); ++i) m = std::max(m, Y.values[i] - X.values[i]);
    return m;
}

nlohmann::json to_json(const RandomVariable& X) { return nlohmann::json{{"time", X.time}, {"values", X.values}}; }

nlohmann::json to_json(const AdaptedProcess& P) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : P.slices) arr.push_back(s.values);
    return arr;
}

RandomVariable variable_from_json(const nlohmann::json& j, int time) {
    if (j.is_object()) return RandomVariable{j.at("time").get<int>(), j.at("values").get<std::vector<double>>()};
    return RandomVariable{time, j.get<std::vector<double>>()};
}

AdaptedProcess process_from_json(const nlohmann::json& j) {
    AdaptedProcess P;
    int k = 0;
    for (const auto& slice : j) P.slices.push_back(RandomVariable{k++, slice.get<std::vector<double>>()});
    return P;
}

}  // namespace geval
