#include "geval/axioms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "geval/error.hpp"
#include "geval/sampling.hpp"

namespace geval {

bool AxiomReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.pass; });
}

const AxiomCheck& AxiomReport::at(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    fail(ErrorCode::InvalidSpec, "no axiom check named " + name);
}

nlohmann::json AxiomReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["samples"] = samples;
    j["slack"] = slack;
    j["mu"] = mu ? nlohmann::json(*mu) : nlohmann::json(nullptr);
    j["mu_scanned"] = mu_scanned;
    j["all_pass"] = all_pass();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"worst", c.worst}, {"pass", c.pass}, {"instances", c.instances},
                       {"witness", c.witness}});
    j["checks"] = arr;
    return j;
}

std::string AxiomReport::summary() const {
    std::string out;
    char line[256];
    for (const auto& c : checks) {
        std::snprintf(line, sizeof line, "%-5s %-4s worst=%.3e over %d instances", c.name.c_str(),
                      c.pass ? "ok" : "FAIL", c.worst, c.instances);
        out += line;
        if (!c.pass && !c.witness.is_null()) out += " at " + c.witness.dump();
        out += '\n';
    }
    if (mu) {
        std::snprintf(line, sizeof line, "domination mu = %.6g%s\n", *mu, mu_scanned ? " (scanned)" : "");
        out += line;
    }
    return out;
}

namespace {

struct Tracker {
    AxiomCheck check;

    explicit Tracker(std::string name) { check.name = std::move(name); }

    void record(double violation, const nlohmann::json& where) {
        ++check.instances;
        if (violation > check.worst) {
            check.worst = violation;
            check.witness = where;
        }
    }
};

// Largest |X - Y| over nodes, with the node attaining it.
std::pair<double, std::size_t> worst_gap(const RandomVariable& X, const RandomVariable& Y) {
    double m = 0.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < X.values.size(); ++i) {
        const double d = std::abs(X.values[i] - Y.values[i]);
        if (d > m) {
            m = d;
            at = i;
        }
    }
    return {m, at};
}

std::pair<double, std::size_t> worst_excess(const RandomVariable& X, const RandomVariable& Y) {
    double m = 0.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < X.values.size(); ++i) {
        const double d = X.values[i] - Y.values[i];
        if (d > m) {
            m = d;
            at = i;
        }
    }
    return {m, at};
}

RandomVariable mask(const RandomVariable& X, const RandomVariable& ind) {
    return zip(X, ind, [](double x, double a) { return a * x; });
}

RandomVariable mix(const RandomVariable& X, const RandomVariable& Xp, const RandomVariable& ind) {
    RandomVariable R = X;
    for (std::size_t i = 0; i < R.values.size(); ++i) R.values[i] = ind.values[i] * X.values[i] + (1.0 - ind.values[i]) * Xp.values[i];
    return R;
}

// M is constant below each time-s node; read it through the first descendant.
RandomVariable restrict_measurable(const Lattice& lat, const RandomVariable& M, int s) {
    return tabulate(lat, s, [&](std::size_t n) {
        std::size_t d = n;
        for (int k = s; k < M.time; ++k) d = lat.child(k, d, 0);
        return M.values[d];
    });
}

nlohmann::json where(int sample, int s, int t, std::size_t node) {
    return {{"sample", sample}, {"s", s}, {"t", t}, {"node", node}};
}

// Least mu in the doubling scan for which every domination instance holds.
double scan_mu(const Evaluation& E, const std::vector<std::tuple<int, RandomVariable, RandomVariable>>& inst,
               const AxiomSuiteOptions& opt) {
    const Lattice& lat = E.lattice();
    SolverConfig cfg;
    cfg.monotonicity_guard = false;
    double mu = opt.mu_scan_start;
    for (int step = 0; step <= opt.mu_scan_steps && mu * lat.dt() < 1.0; ++step, mu *= 2.0) {
        const auto ref = from_driver(E.lattice_ptr(), g_mu(mu), cfg);
        bool ok = true;
        for (const auto& [s, X, Xp] : inst) {
            const RandomVariable lhs = apply(E, s, X) - apply(E, s, Xp);
            const RandomVariable rhs = apply(*ref, s, X - Xp);
            if (worst_excess(lhs, rhs).first > opt.slack) {
                ok = false;
                break;
            }
        }
        if (ok) return mu;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

AxiomReport axiom_suite(const Evaluation& E, const AxiomSuiteOptions& opt) {
    if (opt.samples < 1) fail(ErrorCode::InvalidSpec, "axiom suite needs at least one sample");
    const Lattice& lat = E.lattice();
    const int N = lat.steps();
    Sampler rng(opt.seed);
    const double sc = opt.claim_scale;

    AxiomReport report;
    report.seed = opt.seed;
    report.samples = opt.samples;
    report.slack = opt.slack;

    std::optional<double> mu = opt.mu ? opt.mu : E.declared_mu();
    EvaluationPtr dominator;
    if (mu) {
        SolverConfig cfg;
        cfg.monotonicity_guard = false;
        dominator = from_driver(E.lattice_ptr(), g_mu(*mu), cfg);
    }

    Tracker a1("A1"), a2("A2"), a3("A3"), a4("A4"), a4p("A4'"), a40("A4_0"), ea4("eA4"), a5("A5");
    Tracker a2p("A2'"), b1("B1"), b2("B2"), b3("B3"), b4("B4");
    std::vector<std::tuple<int, RandomVariable, RandomVariable>> domination;

    for (int i = 0; i < opt.samples; ++i) {
        const int t = rng.uniform_int(1, N);
        const int s = rng.uniform_int(0, t - 1);
        const int r = rng.uniform_int(0, s);
        const RandomVariable X = rng.claim(lat, t, sc);
        const RandomVariable Xp = rng.claim(lat, t, sc);
        const RandomVariable below = X - map(rng.claim(lat, t, sc), [](double v) { return std::abs(v); });
        const Event A = rng.event(lat, s);
        const RandomVariable ind_s = indicator(lat, A, s);
        const RandomVariable ind_t = indicator(lat, A, t);

        const RandomVariable EX = apply(E, s, X);
        const RandomVariable EXp = apply(E, s, Xp);

        {
            const auto [v, n] = worst_excess(apply(E, s, below), EX);
            a1.record(v, where(i, s, t, n));
        }
        {
            const auto [v, n] = worst_gap(apply(E, t, X), X);
            a2.record(v, where(i, t, t, n));
        }
        {
            const auto [v, n] = worst_gap(apply(E, r, EX), apply(E, r, X));
            a3.record(v, where(i, r, t, n));
        }
        const RandomVariable EAX = apply(E, s, mask(X, ind_t));
        {
            const auto [v, n] = worst_gap(mask(EX, ind_s), mask(EAX, ind_s));
            a4.record(v, where(i, s, t, n));
        }
        {
            const auto [v, n] = worst_gap(mask(EX, ind_s), EAX);
            a4p.record(v, where(i, s, t, n));
        }
        {
            const RandomVariable E0 = apply(E, s, constant(lat, t, 0.0));
            const auto [v, n] = worst_gap(E0, constant(lat, s, 0.0));
            a40.record(v, where(i, s, t, n));
        }
        {
            const auto [v, n] = worst_gap(apply(E, s, mix(X, Xp, ind_t)), mix(EX, EXp, ind_s));
            ea4.record(v, where(i, s, t, n));
        }
        if (dominator) {
            const auto [v, n] = worst_excess(EX - EXp, apply(*dominator, s, X - Xp));
            a5.record(v, where(i, s, t, n));
        } else {
            domination.emplace_back(s, X, Xp);
        }
        if (opt.check_a2_prime) {
            const RandomVariable M = rng.measurable_claim(lat, s, t, sc);
            const auto [v, n] = worst_gap(apply(E, s, M), restrict_measurable(lat, M, s));
            a2p.record(v, where(i, s, t, n));
        }
        if (opt.check_b) {
            lat.require_path_tree("(B1)-(B4) checks");
            const RandomVariable XN = rng.claim(lat, N, sc);
            const RandomVariable XNb = XN - map(rng.claim(lat, N, sc), [](double v) { return std::abs(v); });
            const auto cond = [&](int u, const RandomVariable& Z) { return apply(E, u, Z); };
            {
                const auto [v, n] = worst_excess(cond(t, XNb), cond(t, XN));
                b1.record(v, where(i, t, N, n));
            }
            {
                const RandomVariable M = rng.measurable_claim(lat, t, N, sc);
                const auto [v, n] = worst_gap(cond(t, M), restrict_measurable(lat, M, t));
                b2.record(v, where(i, t, N, n));
            }
            {
                const RandomVariable inner = broadcast(lat, cond(t, XN), N);
                const auto [v, n] = worst_gap(cond(s, inner), cond(s, XN));
                b3.record(v, where(i, s, t, n));
            }
            {
                const Event At = rng.event(lat, t);
                const RandomVariable ind_tt = indicator(lat, At, t);
                const RandomVariable ind_N = indicator(lat, At, N);
                const auto [v, n] = worst_gap(cond(t, mask(XN, ind_N)), mask(cond(t, XN), ind_tt));
                b4.record(v, where(i, t, N, n));
            }
        }
    }

    if (!dominator) {
        report.mu_scanned = true;
        const double found = scan_mu(E, domination, opt);
        if (std::isfinite(found)) {
            mu = found;
            a5.check.instances = static_cast<int>(domination.size());
        } else {
            a5.check.worst = std::numeric_limits<double>::infinity();
            a5.check.instances = static_cast<int>(domination.size());
        }
    }
    report.mu = mu;

    std::vector<Tracker*> all{&a1, &a2, &a3, &a4, &a4p, &a40, &ea4, &a5};
    if (opt.check_a2_prime) all.push_back(&a2p);
    if (opt.check_b) {
        for (Tracker* b : {&b1, &b2, &b3, &b4}) all.push_back(b);
    }
    for (Tracker* tr : all) {
        tr->check.pass = tr->check.worst <= opt.slack;
        report.checks.push_back(tr->check);
    }
    return report;
}

}  // namespace geval
