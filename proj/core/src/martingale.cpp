#include "geval/martingale.hpp"

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

std::string to_string(MartingaleKind kind) {
    switch (kind) {
        case MartingaleKind::Martingale: return "martingale";
        case MartingaleKind::Supermartingale: return "supermartingale";
        case MartingaleKind::Submartingale: return "submartingale";
        case MartingaleKind::None: return "none";
    }
    return "none";
}

namespace {

using Values = std::array<double, 256>;

void gather(const Lattice& lat, int k, std::size_t n, const std::vector<double>& next, const Dividend& K, Values& v) {
    for (std::size_t b = 0; b < lat.branches(); ++b) {
        const std::size_t c = lat.child(k, n, b);
        v[b] = next[c] + K.increment(k, n, c);
    }
}

void require_full(const Lattice& lat, const AdaptedProcess& Y) {
    check_process(lat, Y);
    if (Y.last_time() != lat.steps()) fail(ErrorCode::LatticeMismatch, "process must cover 0..N");
}

}  // namespace

Classification classify(const Evaluation& E, const AdaptedProcess& Y, const Dividend& K, double tol) {
    const Lattice& lat = E.lattice();
    check_process(lat, Y);
    K.check(lat);
    const std::size_t B = lat.branches();
    Classification c;
    for (int k = 0; k < Y.last_time(); ++k) {
        const std::size_t nn = lat.node_count(k);
        std::vector<double> diff(nn);
        parallel_for(nn, [&](std::size_t n) {
            Values v{};
            gather(lat, k, n, Y.at(k + 1).values, K, v);
            diff[n] = E.one_step(k, n, std::span<const double>(v.data(), B)) - Y.at(k).values[n];
        });
        for (double d : diff) {
            c.excess = std::max(c.excess, d);
            c.deficit = std::max(c.deficit, -d);
        }
    }
    c.defect = std::max(c.excess, c.deficit);
    if (c.excess <= tol && c.deficit <= tol) c.kind = MartingaleKind::Martingale;
    else if (c.excess <= tol) c.kind = MartingaleKind::Supermartingale;
    else if (c.deficit <= tol) c.kind = MartingaleKind::Submartingale;
    else c.kind = MartingaleKind::None;
    return c;
}

double path_sup(const Lattice& lattice, const AdaptedProcess& increments) {
    // Running extremes of the partial sums; increments depend only on the parent node.
    std::vector<double> hi{0.0}, lo{0.0};
    double best = 0.0;
    for (int k = 0; k < lattice.steps() && k < increments.last_time() + 1; ++k) {
        const std::size_t nn = lattice.node_count(k + 1);
        std::vector<double> nhi(nn, -std::numeric_limits<double>::infinity());
        std::vector<double> nlo(nn, std::numeric_limits<double>::infinity());
        for (std::size_t n = 0; n < hi.size(); ++n) {
            const double inc = increments.at(k).values[n];
            for (std::size_t b = 0; b < lattice.branches(); ++b) {
                const std::size_t c = lattice.child(k, n, b);
                nhi[c] = std::max(nhi[c], hi[n] + inc);
                nlo[c] = std::min(nlo[c], lo[n] + inc);
            }
        }
        for (std::size_t c = 0; c < nn; ++c) best = std::max({best, std::abs(nhi[c]), std::abs(nlo[c])});
        hi = std::move(nhi);
        lo = std::move(nlo);
    }
    return best;
}

Decomposition doob_meyer_direct(const Evaluation& E, const AdaptedProcess& Y, double tol) {
    const Lattice& lat = E.lattice();
    require_full(lat, Y);
    const Classification cls = classify(E, Y, {}, tol);
    if (cls.kind != MartingaleKind::Supermartingale && cls.kind != MartingaleKind::Martingale)
        fail(ErrorCode::NotSupermartingale,
             "process is not a supermartingale (worst excess " + std::to_string(cls.excess) + ")");
    const double mu = E.declared_mu().value_or(0.0);
    const double growth = std::exp(mu * lat.horizon());
    const std::size_t B = lat.branches();

    Decomposition out;
    out.increments = constant_process(lat, 0.0);
    for (int k = 0; k < lat.steps(); ++k) {
        const std::size_t nn = lat.node_count(k);
        auto& inc = out.increments.at(k).values;
        parallel_for(nn, [&](std::size_t n) {
            Values v{};
            gather(lat, k, n, Y.at(k + 1).values, {}, v);
            const std::span<const double> span(v.data(), B);
            const double target = Y.at(k).values[n];
            const double gap = target - E.one_step(k, n, span);
            if (gap <= 0.0) return;
            auto f = [&](double c) {
                Values w{};
                for (std::size_t b = 0; b < B; ++b) w[b] = v[b] + c;
                return E.one_step(k, n, std::span<const double>(w.data(), B)) - target;
            };
            double hi = gap * growth + 1.0;
            if (f(hi) < 0.0) {
                if (E.declared_mu())
                    fail(ErrorCode::RootBracketFailure, "no root in the decomposition bracket at time " + std::to_string(k));
                // Without a declared mu, widen until the sign changes.
                int widen = 0;
                while (f(hi) < 0.0) {
                    hi *= 2.0;
                    if (++widen > 60) fail(ErrorCode::RootBracketFailure, "decomposition bracket cannot be widened");
                }
            }
            std::uintmax_t iters = 60;
            const auto [a, b] = boost::math::tools::bisect(
                f, 0.0, hi, [](double lo, double up) { return up - lo <= 0.0; }, iters);
            inc[n] = 0.5 * (a + b);
        });
    }
    const AdaptedProcess rebuilt = apply_process(E, Y.at(lat.steps()), out.as_dividend());
    out.residual = sup_distance(Y, rebuilt);
    return out;
}

PenalizationTrace doob_meyer_penalized(const Evaluation& E, const AdaptedProcess& Y, const std::vector<int>& schedule,
                                       double tol) {
    const Lattice& lat = E.lattice();
    require_full(lat, Y);
    if (schedule.empty()) fail(ErrorCode::InvalidSpec, "empty penalization schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (schedule[i] < 1 || (i && schedule[i] <= schedule[i - 1]))
            fail(ErrorCode::InvalidSpec, "schedule must be strictly increasing positive integers");
    const Classification cls = classify(E, Y, {}, tol);
    if (cls.kind != MartingaleKind::Supermartingale && cls.kind != MartingaleKind::Martingale)
        fail(ErrorCode::NotSupermartingale, "penalization needs a supermartingale");
    const std::size_t B = lat.branches();
    const double dt = lat.dt();

    PenalizationTrace trace;
    trace.schedule = schedule;
    for (int n_pen : schedule) {
        PenalizationStep step;
        step.n = n_pen;
        step.y = Y;
        step.increments = constant_process(lat, 0.0);
        const double rate = n_pen * dt;
        for (int k = lat.steps() - 1; k >= 0; --k) {
            const std::size_t nn = lat.node_count(k);
            auto& yk = step.y.at(k).values;
            auto& inc = step.increments.at(k).values;
            const auto& next = step.y.at(k + 1).values;
            parallel_for(nn, [&](std::size_t n) {
                Values v{};
                gather(lat, k, n, next, {}, v);
                const double Yk = Y.at(k).values[n];
                auto h = [&](double y) {
                    Values w{};
                    const double pay = rate * (Yk - y);
                    for (std::size_t b = 0; b < B; ++b) w[b] = v[b] + pay;
                    return y - E.one_step(k, n, std::span<const double>(w.data(), B));
                };
                const double h_hi = h(Yk);
                double y = Yk;
                if (h_hi > 0.0) {
                    double width = std::max(1.0, std::abs(Yk));
                    double lo = Yk - width;
                    double h_lo = h(lo);
                    int widen = 0;
                    while (h_lo > 0.0) {
                        width *= 2.0;
                        lo = Yk - width;
                        h_lo = h(lo);
                        if (++widen > 100) fail(ErrorCode::RootBracketFailure, "penalized step cannot be bracketed");
                    }
                    if (h_lo == 0.0) {
                        y = lo;
                    } else {
                        std::uintmax_t iters = 200;
                        const auto [a, b] = boost::math::tools::toms748_solve(
                            h, lo, Yk, h_lo, h_hi, boost::math::tools::eps_tolerance<double>(52), iters);
                        if (iters >= 200) fail(ErrorCode::NoConvergence, "penalized step did not converge");
                        y = 0.5 * (a + b);
                    }
                }
                yk[n] = y;
                inc[n] = rate * (Yk - y);
            });
        }
        for (int k = 0; k <= lat.steps(); ++k) {
            step.gap = std::max(step.gap, sup_distance(step.y.at(k), Y.at(k)));
            if (max_shortfall(Y.at(k), step.y.at(k)) > 1e-9) step.below_target = false;
        }
        trace.steps.push_back(std::move(step));
    }
    for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        auto& cur = trace.steps[i];
        const auto& nxt = trace.steps[i + 1];
        for (int k = 0; k <= lat.steps(); ++k)
            if (max_shortfall(nxt.y.at(k), cur.y.at(k)) > 1e-9) cur.monotone = false;
    }
    return trace;
}

RepresentationPair extract_representation(const Evaluation& E, const RandomVariable& X, const Dividend& K,
                                          bool strict) {
    const Lattice& lat = E.lattice();
    const int t = X.time;
    const int d = lat.dimension();
    const std::size_t B = lat.branches();
    const double dt = lat.dt();
    RepresentationPair out;
    out.Y = apply_process(E, X, K);
    out.g.slices.resize(static_cast<std::size_t>(t + 1));
    out.z.assign(static_cast<std::size_t>(d), AdaptedProcess{});
    for (auto& zi : out.z) zi.slices.resize(static_cast<std::size_t>(t + 1));
    const auto mu = E.declared_mu();
    for (int k = 0; k <= t; ++k) {
        out.g.at(k) = constant(lat, k, 0.0);
        for (auto& zi : out.z) zi.at(k) = constant(lat, k, 0.0);
        if (k == t) break;
        for (std::size_t n = 0; n < lat.node_count(k); ++n) {
            Values v{};
            gather(lat, k, n, out.Y.at(k + 1).values, K, v);
            const StepResult r = represent(lat, std::span<const double>(v.data(), B));
            const double yk = out.Y.at(k).values[n];
            const double g = (yk - r.y) / dt;
            out.g.at(k).values[n] = g;
            for (int i = 0; i < d; ++i) out.z[static_cast<std::size_t>(i)].at(k).values[n] = r.z[static_cast<std::size_t>(i)];
            if (mu) {
                const double bound = *mu * (std::abs(yk) + norm(std::span<const double>(r.z.data(), static_cast<std::size_t>(d))));
                out.bound_violation = std::max(out.bound_violation, std::abs(g) - bound);
            }
        }
    }
    if (strict && out.bound_violation > 1e-9)
        fail(ErrorCode::ExtractInconsistent,
             "extracted generator exceeds mu(|y|+|z|) by " + std::to_string(out.bound_violation));
    return out;
}

double representation_difference_violation(const RepresentationPair& a, const RepresentationPair& b, double mu) {
    if (a.Y.slices.size() != b.Y.slices.size() || a.z.size() != b.z.size())
        fail(ErrorCode::LatticeMismatch, "representation pairs have different shapes");
    double worst = 0.0;
    std::vector<double> dz(a.z.size());
    for (int k = 0; k < a.Y.last_time(); ++k)
        for (std::size_t n = 0; n < a.Y.at(k).values.size(); ++n) {
            for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = a.z[i].at(k).values[n] - b.z[i].at(k).values[n];
            const double lhs = std::abs(a.g.at(k).values[n] - b.g.at(k).values[n]);
            const double rhs = mu * (std::abs(a.Y.at(k).values[n] - b.Y.at(k).values[n]) + norm(dz));
            worst = std::max(worst, lhs - rhs);
        }
    return worst;
}

RandomVariable upcrossings(const Lattice& lattice, const AdaptedProcess& Y, double a, double b) {
    lattice.require_path_tree("upcrossing counts");
    if (!(a < b)) fail(ErrorCode::BadLevels, "upcrossing levels need a < b");
    const int N = lattice.steps();
    return tabulate(lattice, N, [&](std::size_t leaf) {
        int count = 0;
        bool armed = false;
        for (int k = 0; k <= N; ++k) {
            const double v = Y.at(k).values[lattice.ancestor(N, leaf, k)];
            if (!armed && v <= a) armed = true;
            else if (armed && v >= b) {
                ++count;
                armed = false;
            }
        }
        return static_cast<double>(count);
    });
}

UpcrossReport upcrossing_check(const LatticePtr& lattice_ptr, const AdaptedProcess& Y, double a, double b, const Driver& g,
                               const SolverConfig& cfg) {
    if (!(a < b)) fail(ErrorCode::BadLevels, "upcrossing levels need a < b");
    const Lattice& lattice = *lattice_ptr;
    lattice.require_path_tree("upcrossing_check");
    require_full(lattice, Y);
    const int N = lattice.steps();
    const auto Eg = from_driver(lattice_ptr, g, cfg);
    const Classification cls = classify(*Eg, Y);
    if (cls.kind != MartingaleKind::Supermartingale && cls.kind != MartingaleKind::Martingale)
        fail(ErrorCode::NotSupermartingale, "upcrossing inequality needs an E^g-supermartingale");

    const double mu = g.mu;
    const Driver up = kappa_abs_z(mu);
    const Driver down = reflect(up);
    const RandomVariable U = upcrossings(lattice, Y, a, b);

    UpcrossReport rep;
    rep.max_count = sup_norm(U);
    rep.lhs = evaluate(lattice, down, 0, U, {}, cfg).values[0];

    const RandomVariable shortfall = map(Y.at(N), [a](double y) { return std::max(a - y, 0.0); });
    const std::vector<double> z0(static_cast<std::size_t>(lattice.dimension()), 0.0);
    const RandomVariable source = tabulate(lattice, N, [&](std::size_t leaf) {
        double acc = 0.0;
        for (int k = 0; k < N; ++k)
            acc += std::exp(mu * lattice.time(k)) * std::abs(g(k, lattice.ancestor(N, leaf, k), 0.0, z0)) * lattice.dt();
        return acc;
    });
    const double T = lattice.horizon();
    const double t1 = evaluate(lattice, up, 0, shortfall, {}, cfg).values[0];
    const double t2 = evaluate(lattice, up, 0, source, {}, cfg).values[0];
    // Shifting by the level adds |g(y + a, 0) - g(y, 0)| <= mu |a| to the source, hence |a|.
    const double factor = std::exp(2.0 * mu * T) / (b - a);
    rep.rhs = factor * (t1 + t2 + std::abs(a) * mu * T);
    rep.rhs_signed = factor * (t1 + t2 + a * mu * T);
    rep.holds = rep.lhs <= rep.rhs + 1e-9;
    return rep;
}

OptionalStoppingReport optional_stopping_check(const Evaluation& E, const AdaptedProcess& Y, const StoppingTime& sigma,
                                               const StoppingTime& tau, const Dividend& K, double slack) {
    const Lattice& lat = E.lattice();
    require_full(lat, Y);
    if (!precedes(lat, sigma, tau)) fail(ErrorCode::StoppingOrder, "sigma must not exceed tau");
    OptionalStoppingReport rep;
    rep.kind = classify(E, Y, K, slack).kind;
    const RandomVariable lhs = extend_to_stopping(E, sigma, tau, stopped_value(lat, Y, tau), K);
    const RandomVariable rhs = stopped_value(lat, Y, sigma);
    switch (rep.kind) {
        case MartingaleKind::Martingale: rep.violation = sup_distance(lhs, rhs); break;
        case MartingaleKind::Supermartingale: rep.violation = max_shortfall(rhs, lhs); break;
        case MartingaleKind::Submartingale: rep.violation = max_shortfall(lhs, rhs); break;
        case MartingaleKind::None: rep.violation = std::numeric_limits<double>::infinity(); break;
    }
    rep.holds = rep.violation <= slack;
    return rep;
}

nlohmann::json to_json(const Decomposition& d, const Lattice& lattice) {
    return {{"residual", d.residual}, {"sup_norm", d.sup_norm(lattice)}, {"increments", to_json(d.increments)}};
}

nlohmann::json to_json(const PenalizationTrace& trace, const Lattice& lattice) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"n", s.n},
                         {"gap", s.gap},
                         {"below_target", s.below_target},
                         {"monotone", s.monotone},
                         {"A_sup", path_sup(lattice, s.increments)}});
    return {{"schedule", trace.schedule}, {"steps", steps}};
}

}  // namespace geval
