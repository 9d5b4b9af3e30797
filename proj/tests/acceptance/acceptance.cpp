// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Pass a criterion number to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "geval/axioms.hpp"
#include "geval/bsde.hpp"
#include "geval/evaluation.hpp"
#include "geval/martingale.hpp"
#include "geval/payoff.hpp"
#include "geval/representation.hpp"
#include "geval/sampling.hpp"

using namespace geval;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

LatticePtr make_lattice(int steps, int dimension, std::optional<int> path_steps, double horizon = 1.0) {
    LatticeOptions opt;
    opt.path_steps = path_steps;
    return Lattice::build({horizon, steps, dimension}, opt);
}

SolverConfig unguarded() {
    SolverConfig cfg;
    cfg.monotonicity_guard = false;
    return cfg;
}

double worst_excess(const AdaptedProcess& lower, const AdaptedProcess& upper) {
    double w = 0.0;
    for (int k = 0; k <= lower.last_time(); ++k) w = std::max(w, max_shortfall(upper.at(k), lower.at(k)));
    return w;
}

// Closed-form Black-Scholes call, computed from the normal CDF via erfc.
double bs_call(double S0, double K, double r, double sigma, double T) {
    auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double d1 = (std::log(S0 / K) + (r + 0.5 * sigma * sigma) * T) / (sigma * std::sqrt(T));
    const double d2 = d1 - sigma * std::sqrt(T);
    return S0 * Phi(d1) - K * std::exp(-r * T) * Phi(d2);
}

Verdict axiom_suite_criterion() {
    const auto t0 = Clock::now();
    LatticePtr lat = make_lattice(64, 1, 6);
    const std::vector<Driver> drivers{g_mu(0.5), kappa_abs_z(0.3), black_scholes(0.05, {0.25})};
    Verdict v;
    for (const auto& g : drivers) {
        AxiomSuiteOptions opt;
        opt.samples = 200;
        opt.seed = 42;
        opt.slack = 1e-9;
        const AxiomReport rep = axiom_suite(*from_driver(lat, g), opt);
        double worst = 0.0;
        for (const char* name : {"A1", "A2", "A3", "A4", "A4'", "A4_0", "eA4", "A5"}) {
            const auto& c = rep.at(name);
            worst = std::max(worst, c.worst);
            v.pass = v.pass && c.pass && c.worst <= 1e-9;
        }
        v.detail += g.label + " worst " + fmt("%.2e", worst) + "; ";
    }
    const double secs = seconds_since(t0);
    v.pass = v.pass && secs <= 60.0;
    v.detail += fmt("%.1f s", secs);
    return v;
}

Verdict comparison_criterion() {
    Sampler rng(2024);
    LatticePtr lat = make_lattice(24, 1, 6);
    const std::vector<Driver> drivers{g_mu(0.5), neg_g_mu(0.5), kappa_abs_z(0.3), black_scholes(0.05, {0.25}),
                                      linear_driver(-0.4, {0.3}, 0.2)};
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const Driver& g = drivers[static_cast<std::size_t>(i) % drivers.size()];
        const RandomVariable Xp = rng.claim(*lat, lat->steps());
        const RandomVariable X = Xp + map(rng.claim(*lat, lat->steps(), 0.5), [](double x) { return std::abs(x); });
        const Dividend Kp = Dividend::from_process(rng.adapted(*lat, 0.5));
        const Dividend K = Kp + rng.increasing_dividend(*lat, 0.5);
        const auto Y = solve_bsde(*lat, g, X, K).Y;
        const auto Yp = solve_bsde(*lat, g, Xp, Kp).Y;
        worst = std::max(worst, worst_excess(Yp, Y));
    }
    return {worst <= 1e-9, "500 instances, worst violation " + fmt("%.2e", worst)};
}

Verdict black_scholes_criterion() {
    const auto t0 = Clock::now();
    const double S0 = 100.0, strike = 100.0, r = 0.05, sigma = 0.2, b = 0.10, T = 1.0;
    LatticePtr lat = make_lattice(1024, 1, 0, T);
    const double theta = (b - r) / sigma;
    // Under the physical drift b the claim is priced by g = -r y - theta z.
    PayoffModel model{S0, b - 0.5 * sigma * sigma, sigma};
    const RandomVariable X = payoff_claim(*lat, parse_payoff("max(S - 100, 0)"), model);
    const double price = solve_bsde(*lat, black_scholes(r, {theta}), X).Y.at(0).values[0];
    const double oracle = bs_call(S0, strike, r, sigma, T);
    const double secs = seconds_since(t0);
    const bool pass = std::abs(price - 10.4506) <= 0.05 && std::abs(oracle - 10.4506) < 5e-5 && secs <= 10.0;
    return {pass, "lattice " + fmt("%.5f", price) + " vs closed form " + fmt("%.5f", oracle) + ", " + fmt("%.2f s", secs)};
}

Verdict g_expectation_criterion() {
    LatticePtr lat = make_lattice(10, 1, std::nullopt);
    AxiomSuiteOptions opt;
    opt.samples = 100;
    opt.seed = 7;
    opt.check_a2_prime = true;
    opt.check_b = true;
    const AxiomReport rep = axiom_suite(*from_driver(lat, kappa_abs_z(0.3)), opt);
    Verdict v;
    for (const char* name : {"A2'", "B1", "B2", "B3", "B4"}) {
        const auto& c = rep.at(name);
        v.pass = v.pass && c.pass && c.worst <= 1e-9;
        v.detail += std::string(name) + " " + fmt("%.1e", c.worst) + " ";
    }
    return v;
}

Verdict probe_criterion() {
    LatticePtr lat = make_lattice(64, 1, 8);
    EvaluationPtr E = from_driver(lat, kappa_abs_z(0.3));
    double err = 0.0, disp = 0.0;
    for (int t : {0, 4, 8})
        for (double z = -2.0; z <= 2.0; z += 1.0) {
            const double zz[] = {z};
            const ProbeResult p = probe_constant_z(*E, t, zz);
            err = std::max(err, std::abs(p.value - 0.3 * std::abs(z)));
            disp = std::max(disp, p.dispersion);
        }
    return {err <= 1e-10 && disp <= 1e-10, "error " + fmt("%.1e", err) + ", dispersion " + fmt("%.1e", disp)};
}

std::vector<RoundtripCase> clamped_claims(const Lattice& lat, Sampler& rng, int count) {
    std::vector<RoundtripCase> cases;
    for (int c = 0; c < count; ++c) {
        const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.5, 1.5);
        cases.push_back({tabulate(lat, lat.steps(),
                                  [&](std::size_t n) { return std::clamp(a + b * lat.brownian(lat.steps(), n), -1.0, 1.0); }),
                         {}});
    }
    return cases;
}

Verdict recovery_criterion() {
    const auto t0 = Clock::now();
    LatticePtr lat = make_lattice(128, 1, 0);
    const int N = lat->steps();
    const std::vector<double> axis{-2.0, -1.0, 0.0, 1.0, 2.0};
    const ProbeGrid grid{{0, N / 4, N / 2, 3 * N / 4, N - 1}, axis, {axis}};
    Sampler rng(11);
    const auto cases = clamped_claims(*lat, rng, 50);
    Verdict v;
    struct Target {
        Driver g;
        double tol;
        double roundtrip;
    };
    for (const Target& tg : {Target{kappa_abs_z(0.3), 1e-6, 1e-6}, Target{g_mu(0.5), 0.05, 0.05}}) {
        EvaluationPtr E = from_driver(lat, tg.g);
        const TabulatedDriver exact = TabulatedDriver::sample(tg.g, grid.times, grid.ys, grid.zs);
        for (auto method : {ReconstructMethod::OneStep, ReconstructMethod::TestProcess}) {
            const Reconstruction rec = reconstruct_driver(*E, grid, method);
            double err = 0.0;
            for (std::size_t i = 0; i < exact.size(); ++i) err = std::max(err, std::abs(rec.table.at(i) - exact.at(i)));
            const RoundtripReport rt = verify_roundtrip(*E, rec.table, cases, tg.roundtrip);
            const bool ok = err <= tg.tol && rt.pass && rec.lipschitz_ok && rec.origin_ok;
            v.pass = v.pass && ok;
            v.detail += tg.g.label + (method == ReconstructMethod::OneStep ? "/one_step" : "/test_process") + " err " +
                        fmt("%.1e", err) + " rt " + fmt("%.1e", rt.max_diff) + "; ";
        }
    }
    const double secs = seconds_since(t0);
    v.pass = v.pass && secs <= 300.0;
    v.detail += fmt("%.1f s", secs);
    return v;
}

Verdict doob_meyer_criterion() {
    LatticePtr lat = make_lattice(64, 1, 6);
    EvaluationPtr E = from_driver(lat, g_mu(0.5));
    const RandomVariable X = payoff_claim(*lat, parse_payoff("B1*B1 - T"), {});
    const AdaptedProcess target = constant_process(*lat, 0.01);
    const AdaptedProcess Y = apply_process(*E, X, Dividend::from_increments(target));
    const Decomposition direct = doob_meyer_direct(*E, Y);
    const double direct_err = path_sup(*lat, direct.increments - target);
    const PenalizationTrace trace = doob_meyer_penalized(*E, Y, {1, 2, 4, 8, 16, 32, 64, 128, 256});
    bool monotone = true, below = true;
    for (const auto& s : trace.steps) {
        monotone = monotone && s.monotone;
        below = below && s.below_target;
    }
    const double gap = path_sup(*lat, trace.steps.back().increments - direct.increments);
    const double scale = direct.sup_norm(*lat);
    const bool pass = direct_err <= 1e-8 && monotone && below && gap <= 0.1 * scale;
    return {pass, "direct error " + fmt("%.1e", direct_err) + ", monotone " + (monotone ? "yes" : "no") + ", below Y " +
                      (below ? "yes" : "no") + ", |A^256 - A| " + fmt("%.3e", gap) + " vs 0.1|A| " + fmt("%.3e", 0.1 * scale)};
}

Verdict fixed_point_criterion() {
    LatticePtr lat = make_lattice(32, 1, 5);
    EvaluationPtr E = from_driver(lat, g_mu(0.5));
    const Source f = builtin_source("saturate", {{"c", 1.0}});
    const RandomVariable X = payoff_claim(*lat, parse_payoff("max(min(B1, 1), -1)"), {});
    const FixedPointResult res = solve_bsde_under_E(*E, f, X);
    double worst_ratio = 0.0;
    for (std::size_t m = 1; m < res.trace.ratios.size(); ++m) worst_ratio = std::max(worst_ratio, res.trace.ratios[m]);
    const double residual = res.trace.sup_changes.back();
    const Classification cls = classify(*E, res.Y, res.K, 1e-8);

    Sampler rng(5);
    double cmp = 0.0;
    for (int i = 0; i < 100; ++i) {
        const RandomVariable Xp = X + map(rng.claim(*lat, lat->steps(), 0.5), [](double x) { return std::abs(x); });
        const AdaptedProcess phi = tabulate_process(*lat, [&](int, std::size_t) { return rng.uniform(0.0, 0.5); });
        Source fp = f;
        fp.fn = [&](int k, std::size_t n, double y) { return f.fn(k, n, y) + phi.at(k).values[n]; };
        const FixedPointResult rp = solve_bsde_under_E(*E, fp, Xp);
        cmp = std::max(cmp, worst_excess(res.Y, rp.Y));
    }
    const bool pass = worst_ratio <= 0.55 && residual <= 1e-10 && cls.kind == MartingaleKind::Martingale &&
                      cls.defect <= 1e-8 && cmp <= 1e-9;
    return {pass, "worst ratio " + fmt("%.3f", worst_ratio) + ", residual " + fmt("%.1e", residual) + ", defect " +
                      fmt("%.1e", cls.defect) + ", comparison " + fmt("%.1e", cmp)};
}

Verdict optional_stopping_criterion() {
    LatticePtr lat = make_lattice(10, 1, std::nullopt);
    Sampler rng(99);
    const std::vector<Driver> drivers{g_mu(0.5), kappa_abs_z(0.3), black_scholes(0.05, {0.25})};
    double super = 0.0, equal = 0.0;
    for (int i = 0; i < 100; ++i) {
        EvaluationPtr E = from_driver(lat, drivers[static_cast<std::size_t>(i) % drivers.size()]);
        const RandomVariable X = rng.claim(*lat, lat->steps());
        const StoppingTime a = rng.stopping_time(*lat), b = rng.stopping_time(*lat);
        const StoppingTime sigma = StoppingTime::earliest(*lat, a, b);
        const AdaptedProcess Ys = apply_process(*E, X, rng.increasing_dividend(*lat, 1.0));
        const AdaptedProcess Ym = apply_process(*E, X);
        const auto rs = optional_stopping_check(*E, Ys, sigma, b);
        const auto rm = optional_stopping_check(*E, Ym, sigma, b);
        super = std::max(super, rs.kind == MartingaleKind::Supermartingale || rs.kind == MartingaleKind::Martingale
                                    ? rs.violation
                                    : 1.0);
        equal = std::max(equal, rm.kind == MartingaleKind::Martingale ? rm.violation : 1.0);
    }
    return {super <= 1e-9 && equal <= 1e-9,
            "supermartingale violation " + fmt("%.1e", super) + ", martingale gap " + fmt("%.1e", equal)};
}

Verdict upcrossing_criterion() {
    LatticePtr lat = make_lattice(12, 1, std::nullopt);
    Sampler rng(3);
    const double mu = 0.5;
    double worst = -1e300;
    int failures = 0, signed_failures = 0;
    for (int i = 0; i < 50; ++i) {
        EvaluationPtr E = from_driver(lat, g_mu(mu));
        const AdaptedProcess Y = apply_process(*E, rng.claim(*lat, lat->steps()), rng.increasing_dividend(*lat, 0.5));
        double lo = 1e300, hi = -1e300;
        for (const auto& s : Y.slices)
            for (double y : s.values) lo = std::min(lo, y), hi = std::max(hi, y);
        double a = rng.uniform(lo, hi), b = rng.uniform(lo, hi);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-3) b = a + 1e-3;
        const UpcrossReport rep = upcrossing_check(lat, Y, a, b, g_mu(mu));
        worst = std::max(worst, rep.lhs - rep.rhs);
        if (rep.lhs > rep.rhs + 1e-9) ++failures;
        if (rep.lhs > rep.rhs_signed + 1e-9) ++signed_failures;
    }
    return {failures == 0, "50 instances, " + std::to_string(failures) + " violations, worst LHS - RHS " +
                               fmt("%.3e", worst) + " (with a mu T in place of |a| mu T: " +
                               std::to_string(signed_failures) + " violations)"};
}

Verdict oracle_criterion() {
    LatticePtr lat = make_lattice(16, 1, std::nullopt);
    Sampler rng(77);
    const std::vector<Driver> drivers{g_mu(0.5), kappa_abs_z(0.3), black_scholes(0.05, {0.25}), neg_g_mu(0.4)};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Driver& g = drivers[static_cast<std::size_t>(i) % drivers.size()];
        const RandomVariable X = rng.claim(*lat, lat->steps());
        const Dividend K = rng.increasing_dividend(*lat, 0.3);
        const auto direct = solve_bsde(*lat, g, X, K, unguarded()).Y;
        const auto picard = picard_solve(*lat, g, X, K).solution.Y;
        worst = std::max(worst, sup_distance(direct, picard));
    }
    double ce = 0.0;
    EvaluationPtr zero = from_driver(lat, zero_driver());
    for (int i = 0; i < 20; ++i) {
        const RandomVariable X = rng.claim(*lat, lat->steps());
        const int s = rng.uniform_int(0, lat->steps());
        ce = std::max(ce, sup_distance(apply(*zero, s, X), cond_expect(*lat, X, s)));
    }
    return {worst <= 1e-9 && ce <= 1e-15,
            "picard vs backward " + fmt("%.1e", worst) + ", zero driver vs conditional expectation " + fmt("%.1e", ce)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"axiom suite on three drivers", axiom_suite_criterion},
        {"comparison theorem sweep", comparison_criterion},
        {"Black-Scholes call under the linear driver", black_scholes_criterion},
        {"g-expectation reduction and conditional expectation checks", g_expectation_criterion},
        {"constant-z probe exactness", probe_criterion},
        {"driver recovery round trip", recovery_criterion},
        {"Doob-Meyer decomposition, direct and penalized", doob_meyer_criterion},
        {"BSDE under an abstract evaluation", fixed_point_criterion},
        {"optional stopping", optional_stopping_criterion},
        {"upcrossing inequality", upcrossing_criterion},
        {"oracle equivalence", oracle_criterion},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<std::size_t>(only) != i + 1) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s [%zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
