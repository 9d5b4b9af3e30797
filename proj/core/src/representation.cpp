#include "geval/representation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "geval/error.hpp"
#include "geval/parallel.hpp"

namespace geval {

namespace {

ProbeResult summarize(RandomVariable per_node) {
    ProbeResult r;
    const auto [lo, hi] = std::minmax_element(per_node.values.begin(), per_node.values.end());
    r.value = per_node.values.front();
    r.dispersion = *hi - *lo;
    r.per_node = std::move(per_node);
    return r;
}

void check_probe_time(const Lattice& lat, int t) {
    if (t < 0 || t >= lat.steps()) fail(ErrorCode::TimeOrder, "probe time must lie in [0, N)");
}

void check_z(const Lattice& lat, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(lat.dimension()))
        fail(ErrorCode::LatticeMismatch, "probe vector needs one entry per Brownian coordinate");
}

double dot_increment(const Lattice& lat, std::size_t branch, std::span<const double> p) {
    double s = 0.0;
    for (int i = 0; i < lat.dimension(); ++i) s += p[static_cast<std::size_t>(i)] * lat.increment(branch, i);
    return s;
}

// One cell of the test-process reconstruction at a single node.
double test_process_cell(const Evaluation& E, int k, std::size_t node, double y, std::span<const double> z, double mu) {
    const Lattice& lat = E.lattice();
    const std::size_t B = lat.branches();
    const double dt = lat.dt();
    const double drift = mu * (std::abs(y) + norm(z));
    std::array<double, 256> v{};
    for (std::size_t b = 0; b < B; ++b) v[b] = y - drift * dt + dot_increment(lat, b, z);
    auto shifted = [&](double c) {
        std::array<double, 256> w{};
        for (std::size_t b = 0; b < B; ++b) w[b] = v[b] + c;
        return E.one_step(k, node, std::span<const double>(w.data(), B)) - y;
    };
    const double base = shifted(0.0);
    if (base > 1e-9)
        fail(ErrorCode::AxiomsFailed, "test process is not an E-supermartingale at time " + std::to_string(k) +
                                          "; the declared mu is too small for domination");
    double c = 0.0;
    if (base < 0.0) {
        double hi = -base * std::exp(mu * lat.horizon()) + 1.0;
        if (shifted(hi) < 0.0) fail(ErrorCode::RootBracketFailure, "test-process decomposition has no root");
        std::uintmax_t iters = 60;
        const auto [a, b] = boost::math::tools::bisect(
            shifted, 0.0, hi, [](double lo, double up) { return up - lo <= 0.0; }, iters);
        c = 0.5 * (a + b);
    }
    // The decomposed process has generator drift - c/dt at s = t.
    return drift - c / dt;
}

}  // namespace

ProbeResult probe_constant_z(const Evaluation& E, int t, std::span<const double> z_bar) {
    const Lattice& lat = E.lattice();
    check_probe_time(lat, t);
    check_z(lat, z_bar);
    const int N = lat.steps();
    const RandomVariable claim = tabulate(lat, N, [&](std::size_t n) {
        const std::size_t anc = lat.ancestor(N, n, t);
        double s = 0.0;
        for (int i = 0; i < lat.dimension(); ++i)
            s += z_bar[static_cast<std::size_t>(i)] * (lat.brownian(N, n, i) - lat.brownian(t, anc, i));
        return s;
    });
    RandomVariable vals = apply(E, t, claim);
    const double span = lat.horizon() - lat.time(t);
    for (double& v : vals.values) v /= span;
    return summarize(std::move(vals));
}

ProbeResult probe_infinitesimal(const Evaluation& E, int t, double y, std::span<const double> p) {
    const Lattice& lat = E.lattice();
    check_probe_time(lat, t);
    check_z(lat, p);
    const std::size_t B = lat.branches();
    std::array<double, 256> v{};
    for (std::size_t b = 0; b < B; ++b) v[b] = y + dot_increment(lat, b, p);
    RandomVariable vals{t, std::vector<double>(lat.node_count(t))};
    parallel_for(vals.values.size(), [&](std::size_t n) {
        vals.values[n] = (E.one_step(t, n, std::span<const double>(v.data(), B)) - y) / lat.dt();
    });
    return summarize(std::move(vals));
}

Reconstruction reconstruct_driver(const Evaluation& E, const ProbeGrid& grid, ReconstructMethod method,
                                  std::optional<double> mu) {
    const Lattice& lat = E.lattice();
    if (grid.zs.size() != static_cast<std::size_t>(lat.dimension()))
        fail(ErrorCode::LatticeMismatch, "probe grid needs one z axis per Brownian coordinate");
    for (int t : grid.times) check_probe_time(lat, t);
    const std::optional<double> m = mu ? mu : E.declared_mu();
    if (method == ReconstructMethod::TestProcess && !m)
        fail(ErrorCode::AxiomsFailed, "test-process reconstruction needs a domination constant mu");

    Reconstruction rec{TabulatedDriver(grid.times, grid.ys, grid.zs, m.value_or(0.0)), {}, 0.0, 0.0, false, false};
    TabulatedDriver& table = rec.table;
    if (table.size() > (std::size_t{1} << 24)) fail(ErrorCode::CapacityExceeded, "probe grid has too many cells");
    rec.dispersion.assign(table.size(), 0.0);

    const std::size_t d = grid.zs.size();
    std::vector<std::size_t> dims{grid.times.size(), grid.ys.size()};
    for (const auto& z : grid.zs) dims.push_back(z.size());
    std::vector<std::size_t> stride(dims.size(), 1);
    for (std::size_t a = dims.size() - 1; a-- > 0;) stride[a] = stride[a + 1] * dims[a + 1];

    parallel_for(table.size(), [&](std::size_t flat) {
        const int t = grid.times[(flat / stride[0]) % dims[0]];
        const double y = grid.ys[(flat / stride[1]) % dims[1]];
        std::array<double, 8> z{};
        for (std::size_t c = 0; c < d; ++c) z[c] = grid.zs[c][(flat / stride[c + 2]) % dims[c + 2]];
        const std::span<const double> zs(z.data(), d);
        double ref = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t n = 0; n < lat.node_count(t); ++n) {
            double v;
            if (method == ReconstructMethod::OneStep) {
                std::array<double, 256> w{};
                for (std::size_t b = 0; b < lat.branches(); ++b) w[b] = y + dot_increment(lat, b, zs);
                v = (E.one_step(t, n, std::span<const double>(w.data(), lat.branches())) - y) / lat.dt();
            } else {
                v = test_process_cell(E, t, n, y, zs, *m);
            }
            if (n == 0) ref = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        table.at(flat) = ref;
        rec.dispersion[flat] = hi - lo;
    });

    rec.grid_lipschitz = table.grid_lipschitz();
    rec.origin_defect = table.origin_defect();
    rec.lipschitz_ok = !m || rec.grid_lipschitz <= *m * 1.05;
    rec.origin_ok = rec.origin_defect <= 1e-8;
    return rec;
}

RoundtripReport verify_roundtrip(const Evaluation& E, const TabulatedDriver& g_hat,
                                 const std::vector<RoundtripCase>& cases, double threshold) {
    const Lattice& lat = E.lattice();
    SolverConfig cfg;
    cfg.monotonicity_guard = false;
    const Driver g = g_hat.to_driver();
    RoundtripReport rep;
    rep.threshold = threshold;
    for (const auto& c : cases) {
        const AdaptedProcess lhs = apply_process(E, c.X, c.K);
        const AdaptedProcess rhs = solve_bsde(lat, g, c.X, c.K, cfg).Y;
        const double diff = sup_distance(lhs, rhs);
        rep.per_case.push_back(diff);
        rep.max_diff = std::max(rep.max_diff, diff);
    }
    rep.pass = rep.max_diff <= threshold;
    return rep;
}

Source builtin_source(const std::string& name, const nlohmann::json& params) {
    const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
    auto num = [&](const char* key, double fallback) {
        if (!p.contains(key)) return fallback;
        if (!p.at(key).is_number()) fail(ErrorCode::BadParams, std::string("parameter '") + key + "' must be a number");
        return p.at(key).get<double>();
    };
    if (name == "zero") return {[](int, std::size_t, double) { return 0.0; }, 0.0, "zero"};
    if (name == "linear") {
        const double a = num("a", 0.0), b = num("b", 0.0);
        return {[a, b](int, std::size_t, double y) { return a * y + b; }, std::abs(a), "linear"};
    }
    if (name == "abs") {
        const double c = num("c", 1.0);
        return {[c](int, std::size_t, double y) { return c * std::abs(y); }, std::abs(c), "abs"};
    }
    if (name == "saturate") {
        const double c = num("c", 1.0);
        return {[c](int, std::size_t, double y) { return c * y / (1.0 + std::abs(y)); }, std::abs(c), "saturate"};
    }
    fail(ErrorCode::UnknownBuiltin, "unknown source '" + name + "'");
}

Dividend source_dividend(const Lattice& lattice, const Source& f, const AdaptedProcess& Y) {
    AdaptedProcess inc = tabulate_process(lattice, [&](int k, std::size_t n) {
        return k < lattice.steps() ? f.fn(k, n, Y.at(k).values[n]) * lattice.dt() : 0.0;
    });
    return Dividend::from_increments(std::move(inc));
}

FixedPointResult solve_bsde_under_E(const Evaluation& E, const Source& f, const RandomVariable& X,
                                    const FixedPointOptions& options) {
    const Lattice& lat = E.lattice();
    check_variable(lat, X);
    if (X.time != lat.steps()) fail(ErrorCode::LatticeMismatch, "terminal claim must live at time N");
    const double mu = options.mu.value_or(E.declared_mu().value_or(0.0));
    const double beta = 2.0 * mu * mu + 2.0 * mu + 2.0;
    const double C = f.c * f.c * std::exp(beta * lat.horizon());
    const double T = lat.horizon();

    double weight_mass = 0.0;
    for (int k = 0; k <= lat.steps(); ++k) weight_mass += std::exp(2.0 * C * (lat.time(k) - T)) * lat.dt();

    auto weighted = [&](const AdaptedProcess& a, const AdaptedProcess& b) {
        double acc = 0.0;
        for (int k = 0; k <= lat.steps(); ++k) {
            const RandomVariable d2 = zip(a.at(k), b.at(k), [](double x, double y) { return (x - y) * (x - y); });
            acc += expectation(lat, d2) * std::exp(2.0 * C * (lat.time(k) - T)) * lat.dt();
        }
        return std::sqrt(acc);
    };

    FixedPointResult out;
    out.trace.weight_rate = C;
    AdaptedProcess Y = constant_process(lat, 0.0);
    for (int m = 1;; ++m) {
        const Dividend K = source_dividend(lat, f, Y);
        AdaptedProcess next = apply_process(E, X, K);
        const double dist = weighted(next, Y);
        auto& tr = out.trace;
        double scale = 1.0;
        for (const auto& slice : next.slices) scale = std::max(scale, sup_norm(slice));
        tr.noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale * std::sqrt(weight_mass);
        if (!tr.distances.empty() && tr.distances.back() > tr.noise_floor)
            tr.ratios.push_back(dist / tr.distances.back());
        tr.distances.push_back(dist);
        const double sup_change = sup_distance(next, Y);
        tr.sup_changes.push_back(sup_change);
        tr.iterations = m;
        Y = std::move(next);
        // The weight makes early times nearly invisible, so the sup norm must settle too.
        if (dist <= options.tol && sup_change <= options.tol) break;
        if (m >= options.max_iterations) fail(ErrorCode::NoConvergence, "fixed point did not converge");
    }
    out.K = source_dividend(lat, f, Y);
    out.Y = std::move(Y);
    return out;
}

}  // namespace geval
