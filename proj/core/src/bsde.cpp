#include "geval/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geval/error.hpp"
#include "geval/parallel.hpp"

namespace geval {

void SolverConfig::validate() const {
    if (!(fixed_point_tol > 0.0)) fail(ErrorCode::InvalidSpec, "fixed_point_tol must be > 0");
    if (max_fixed_point_iters < 1) fail(ErrorCode::InvalidSpec, "max_fixed_point_iters must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) fail(ErrorCode::InvalidSpec, "damping must lie in (0, 1]");
}

StepResult represent(const Lattice& lattice, std::span<const double> v) {
    StepResult r;
    const std::size_t B = lattice.branches();
    const int d = lattice.dimension();
    const double w = lattice.branch_weight();
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) acc += v[b];
    r.y = acc * w;
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t b = 0; b < B; ++b) s += v[b] * lattice.sign(b, i);
        r.z[static_cast<std::size_t>(i)] = s * w / lattice.sqrt_dt();
    }
    if (d > 1) {
        double ss = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            double fit = r.y;
            for (int i = 0; i < d; ++i) fit += r.z[static_cast<std::size_t>(i)] * lattice.increment(b, i);
            ss += (v[b] - fit) * (v[b] - fit);
        }
        r.projection_residual = std::sqrt(ss * w);
    }
    return r;
}

void check_step_size(const Lattice& lattice, const Driver& g, const SolverConfig& cfg) {
    if (g.mu * lattice.dt() >= 1.0)
        fail(ErrorCode::StepTooLarge, "mu*dt = " + std::to_string(g.mu * lattice.dt()) + " must be < 1");
    const double guard = g.mu * std::sqrt(lattice.dimension() * lattice.dt());
    if (cfg.monotonicity_guard && guard > 0.5)
        fail(ErrorCode::MonotonicityViolated,
             "mu*sqrt(d*dt) = " + std::to_string(guard) + " exceeds 0.5; refine the lattice or disable the guard");
}

StepResult driver_step(const Lattice& lattice, const Driver& g, int k, std::size_t node, std::span<const double> v,
                       const SolverConfig& cfg) {
    StepResult r = represent(lattice, v);
    const double a = r.y;
    const double dt = lattice.dt();
    const std::span<const double> z(r.z.data(), static_cast<std::size_t>(lattice.dimension()));
    if (cfg.scheme == Scheme::Explicit) {
        r.y = a + g(k, node, a, z) * dt;
        r.iterations = 1;
        return r;
    }
    double y = a + g(k, node, a, z) * dt;
    int it = 1;
    for (;; ++it) {
        const double target = a + g(k, node, y, z) * dt;
        const double next = y + cfg.damping * (target - y);
        const double change = std::abs(next - y);
        y = next;
        if (change <= cfg.fixed_point_tol * (1.0 + std::abs(y))) break;
        if (it >= cfg.max_fixed_point_iters)
            fail(ErrorCode::NoConvergence, "implicit step did not converge at time " + std::to_string(k));
    }
    r.y = y;
    r.iterations = it;
    r.residual = std::abs(y - a - g(k, node, y, z) * dt);
    return r;
}

namespace {

// Backward induction from slice t_end down to k_min. `stop` marks frozen nodes whose value
// comes from `frozen`; both may be null for a deterministic terminal time.
BSDESolution backward(const Lattice& lattice, const Driver& g, const RandomVariable& terminal,
                      const StoppingTime* stop, const AdaptedProcess* frozen, const Dividend& K,
                      const SolverConfig& cfg, int k_min = 0) {
    cfg.validate();
    check_step_size(lattice, g, cfg);
    K.check(lattice);
    const int t_end = terminal.time;
    const int d = lattice.dimension();
    const std::size_t B = lattice.branches();

    BSDESolution sol;
    sol.Y.slices.resize(static_cast<std::size_t>(t_end + 1));
    sol.Z.resize(static_cast<std::size_t>(d));
    for (auto& Zi : sol.Z) Zi.slices.resize(static_cast<std::size_t>(t_end + 1));
    sol.Y.at(t_end) = terminal;
    for (auto& Zi : sol.Z) Zi.at(t_end) = constant(lattice, t_end, 0.0);
    sol.diagnostics.iterations.resize(static_cast<std::size_t>(t_end));

    for (int k = t_end - 1; k >= k_min; --k) {
        const std::size_t nn = lattice.node_count(k);
        RandomVariable Yk{k, std::vector<double>(nn)};
        std::vector<RandomVariable> Zk(static_cast<std::size_t>(d), RandomVariable{k, std::vector<double>(nn, 0.0)});
        std::vector<int> iters(nn, 0);
        std::vector<double> resid(nn, 0.0), proj(nn, 0.0);
        const auto& next = sol.Y.at(k + 1).values;
        parallel_for(nn, [&](std::size_t n) {
            if (stop && stop->stops_at(k, n)) {
                Yk.values[n] = frozen->at(k).values[n];
                return;
            }
            std::array<double, 256> v{};
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t c = lattice.child(k, n, b);
                v[b] = next[c] + K.increment(k, n, c);
            }
            const StepResult r = driver_step(lattice, g, k, n, std::span<const double>(v.data(), B), cfg);
            Yk.values[n] = r.y;
            for (int i = 0; i < d; ++i) Zk[static_cast<std::size_t>(i)].values[n] = r.z[static_cast<std::size_t>(i)];
            iters[n] = r.iterations;
            resid[n] = r.residual;
            proj[n] = r.projection_residual;
        });
        auto& diag = sol.diagnostics;
        for (std::size_t n = 0; n < nn; ++n) {
            diag.max_iterations = std::max(diag.max_iterations, iters[n]);
            diag.max_residual = std::max(diag.max_residual, resid[n]);
            diag.projection_residual = std::max(diag.projection_residual, proj[n]);
        }
        diag.iterations[static_cast<std::size_t>(k)] = std::move(iters);
        sol.Y.at(k) = std::move(Yk);
        for (int i = 0; i < d; ++i) sol.Z[static_cast<std::size_t>(i)].at(k) = std::move(Zk[static_cast<std::size_t>(i)]);
    }
    return sol;
}

// Constant stopping time: the first k at which node 0 is flagged, provided
// every node of that slice is flagged.
std::optional<int> constant_time(const Lattice& lattice, const StoppingTime& tau) {
    for (int k = 0; k <= lattice.steps(); ++k) {
        if (!tau.stops_at(k, 0)) continue;
        for (std::size_t n = 0; n < lattice.node_count(k); ++n)
            if (!tau.stops_at(k, n)) return std::nullopt;
        for (int j = 0; j < k; ++j)
            for (std::size_t n = 0; n < lattice.node_count(j); ++n)
                if (tau.stops_at(j, n)) return std::nullopt;
        return k;
    }
    return std::nullopt;
}

RandomVariable restrict_to(const Lattice& lattice, const RandomVariable& X, int t) {
    if (X.time == t) return X;
    const double tol = 1e-12 * (1.0 + sup_norm(X));
    if (!is_measurable(lattice, X, t, tol))
        fail(ErrorCode::NotMeasurable, "terminal claim is not measurable at time " + std::to_string(t));
    return cond_expect(lattice, X, t);
}

}  // namespace

BSDESolution solve_bsde(const Lattice& lattice, const Driver& g, const RandomVariable& X, const Dividend& K,
                        const SolverConfig& cfg) {
    check_variable(lattice, X);
    return backward(lattice, g, X, nullptr, nullptr, K, cfg);
}

BSDESolution solve_bsde(const Lattice& lattice, const Driver& g, const StoppingTime& tau, const RandomVariable& X,
                        const Dividend& K, const SolverConfig& cfg) {
    check_variable(lattice, X);
    if (X.time != lattice.steps()) fail(ErrorCode::LatticeMismatch, "stopped claims live at the leaves");
    if (!lattice.is_path_tree()) {
        const auto t = constant_time(lattice, tau);
        if (!t) lattice.require_path_tree("solve_bsde with a random stopping time");
        BSDESolution sol = backward(lattice, g, restrict_to(lattice, X, *t), nullptr, nullptr, K, cfg);
        // Extend past t: Y frozen at X, Z = 0.
        for (int k = *t + 1; k <= lattice.steps(); ++k) {
            sol.Y.slices.push_back(restrict_to(lattice, X, k));
            for (auto& Zi : sol.Z) Zi.slices.push_back(constant(lattice, k, 0.0));
        }
        return sol;
    }
    const AdaptedProcess frozen = values_at_stop(lattice, tau, X, 1e-12 * (1.0 + sup_norm(X)));
    return backward(lattice, g, X, &tau, &frozen, K, cfg);
}

RandomVariable evaluate(const Lattice& lattice, const Driver& g, int s, const RandomVariable& X, const Dividend& K,
                        const SolverConfig& cfg) {
    check_variable(lattice, X);
    if (s > X.time || s < 0) fail(ErrorCode::TimeOrder, "evaluate needs 0 <= s <= t");
    BSDESolution sol = backward(lattice, g, X, nullptr, nullptr, K, cfg, s);
    return std::move(sol.Y.at(s));
}

RandomVariable evaluate(const Lattice& lattice, const Driver& g, const StoppingTime& sigma, const StoppingTime& tau,
                        const RandomVariable& X, const Dividend& K, const SolverConfig& cfg) {
    if (!precedes(lattice, sigma, tau)) fail(ErrorCode::StoppingOrder, "sigma must not exceed tau");
    const BSDESolution sol = solve_bsde(lattice, g, tau, X, K, cfg);
    return stopped_value(lattice, sol.Y, sigma);
}

PicardResult picard_solve(const Lattice& lattice, const Driver& g, const RandomVariable& X, const Dividend& K,
                          double tol, int max_sweeps) {
    check_variable(lattice, X);
    SolverConfig cfg;
    cfg.monotonicity_guard = false;
    check_step_size(lattice, g, cfg);
    K.check(lattice);
    const int t_end = X.time;
    const int d = lattice.dimension();
    const std::size_t B = lattice.branches();
    const double dt = lattice.dt();

    PicardResult out;
    AdaptedProcess y = backward(lattice, zero_driver(), X, nullptr, nullptr, K, cfg).Y;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        AdaptedProcess next = y;
        double change = 0.0;
        for (int k = t_end - 1; k >= 0; --k) {
            const std::size_t nn = lattice.node_count(k);
            const auto& succ = y.at(k + 1).values;
            const auto& cur = y.at(k).values;
            auto& dst = next.at(k).values;
            parallel_for(nn, [&](std::size_t n) {
                std::array<double, 256> v{};
                for (std::size_t b = 0; b < B; ++b) {
                    const std::size_t c = lattice.child(k, n, b);
                    v[b] = succ[c] + K.increment(k, n, c);
                }
                const StepResult r = represent(lattice, std::span<const double>(v.data(), B));
                dst[n] = r.y + g(k, n, cur[n], std::span<const double>(r.z.data(), static_cast<std::size_t>(d))) * dt;
            });
            for (std::size_t n = 0; n < nn; ++n) change = std::max(change, std::abs(dst[n] - cur[n]));
        }
        y = std::move(next);
        out.changes.push_back(change);
        out.sweeps = sweep;
        if (change <= tol) break;
        if (sweep == max_sweeps) fail(ErrorCode::NoConvergence, "Picard iteration exhausted its sweep budget");
    }

    // Z and residuals of the converged iterate.
    BSDESolution& sol = out.solution;
    sol.Y = y;
    sol.Z.resize(static_cast<std::size_t>(d));
    for (auto& Zi : sol.Z) Zi.slices.resize(static_cast<std::size_t>(t_end + 1));
    for (auto& Zi : sol.Z) Zi.at(t_end) = constant(lattice, t_end, 0.0);
    for (int k = 0; k < t_end; ++k) {
        const std::size_t nn = lattice.node_count(k);
        for (auto& Zi : sol.Z) Zi.at(k) = constant(lattice, k, 0.0);
        for (std::size_t n = 0; n < nn; ++n) {
            std::array<double, 256> v{};
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t c = lattice.child(k, n, b);
                v[b] = y.at(k + 1).values[c] + K.increment(k, n, c);
            }
            const StepResult r = represent(lattice, std::span<const double>(v.data(), B));
            for (int i = 0; i < d; ++i) sol.Z[static_cast<std::size_t>(i)].at(k).values[n] = r.z[static_cast<std::size_t>(i)];
            const double yk = y.at(k).values[n];
            const double res =
                std::abs(yk - r.y - g(k, n, yk, std::span<const double>(r.z.data(), static_cast<std::size_t>(d))) * dt);
            sol.diagnostics.max_residual = std::max(sol.diagnostics.max_residual, res);
            sol.diagnostics.projection_residual = std::max(sol.diagnostics.projection_residual, r.projection_residual);
        }
    }
    return out;
}

std::vector<AprioriReport> apriori_bound(const Lattice& lattice, double mu, const AdaptedProcess& g0,
                                         const RandomVariable& X, const SolverConfig& cfg) {
    check_process(lattice, g0);
    if (X.time != lattice.steps()) fail(ErrorCode::LatticeMismatch, "a-priori bound needs a terminal claim");
    const double beta = 2.0 * mu * mu + 2.0 * mu + 2.0;
    const double dt = lattice.dt();
    const BSDESolution sol = solve_bsde(lattice, g_mu(mu), X, Dividend::from_rate(lattice, g0), cfg);
    const double ex2 = expectation(lattice, map(X, [](double x) { return x * x; }));
    std::vector<double> source(static_cast<std::size_t>(lattice.steps() + 1), 0.0);
    for (int s = 0; s < lattice.steps(); ++s)
        source[static_cast<std::size_t>(s)] = expectation(lattice, map(g0.at(s), [](double x) { return x * x; })) * dt;

    std::vector<AprioriReport> out;
    for (int t = 0; t <= lattice.steps(); ++t) {
        AprioriReport r;
        r.time = t;
        r.lhs = expectation(lattice, map(sol.Y.at(t), [](double y) { return y * y; }));
        r.rhs = ex2 * std::exp(beta * (lattice.horizon() - lattice.time(t)));
        for (int s = t; s < lattice.steps(); ++s) r.rhs += std::exp(beta * (s - t) * dt) * source[static_cast<std::size_t>(s)];
        r.holds = r.lhs <= r.rhs + 1e-9;
        out.push_back(r);
    }
    return out;
}

}  // namespace geval
