#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "geval/axioms.hpp"
#include "geval/error.hpp"
#include "geval/martingale.hpp"
#include "geval/representation.hpp"
#include "geval/sampling.hpp"
#include "geval_cli/cli.hpp"
#include "geval_cli/config.hpp"

#ifndef GEVAL_VERSION
#define GEVAL_VERSION "0.0.0"
#endif

namespace geval::cli {

namespace {

using nlohmann::json;

struct Outcome {
    json body = json::object();
    std::string text;
    std::string csv;
    bool ok = true;
};

using Handler = std::function<Outcome(const Scenario&)>;

const json& section(const Scenario& sc, const char* name) {
    static const json empty = json::object();
    return sc.raw.contains(name) ? sc.raw.at(name) : empty;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

SolverConfig scenario_solver(const Scenario& sc) {
    const json& ev = section(sc, "evaluation");
    if (ev.contains("solver")) return parse_solver(ev.at("solver"));
    return parse_solver(sc.raw.value("solver", json()));
}

Dividend scenario_dividend(const Scenario& sc) { return parse_dividend(sc.raw.value("dividend", json()), sc); }

json diagnostics_json(const BSDEDiagnostics& d) {
    return {{"max_iterations", d.max_iterations},
            {"max_residual", d.max_residual},
            {"projection_residual", d.projection_residual}};
}

std::vector<double> vector_of(const json& j, int dimension, const char* what) {
    std::vector<double> v = j.is_number() ? std::vector<double>{j.get<double>()} : j.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dimension)
        fail(ErrorCode::ConfigError, std::string(what) + " must have one entry per Brownian coordinate");
    return v;
}

Outcome cmd_solve(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const RandomVariable X = scenario_claim(sc);
    const Dividend K = scenario_dividend(sc);
    const bool emit = section(sc, "output").value("process", false);
    Outcome o;
    AdaptedProcess Y;
    if (const Driver* g = E->driver()) {
        BSDESolution sol = solve_bsde(lat, *g, X, K, scenario_solver(sc));
        Y = std::move(sol.Y);
        o.body["diagnostics"] = diagnostics_json(sol.diagnostics);
        if (emit) {
            json z = json::array();
            for (const auto& Zi : sol.Z) z.push_back(to_json(Zi));
            o.body["Z"] = z;
        }
    } else {
        Y = apply_process(*E, X, K);
    }
    o.body["evaluation"] = E->describe();
    o.body["Y0"] = Y.at(0).values[0];
    if (emit) o.body["Y"] = to_json(Y);
    o.text = "solve: " + E->describe() + "\nY0 = " + fmt(Y.at(0).values[0]) + "\n";
    o.csv = process_csv(Y);
    return o;
}

Outcome cmd_evaluate(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const RandomVariable X = scenario_claim(sc);
    const int s = value_or(section(sc, "evaluate"), "s", 0);
    if (s < 0 || s > X.time) fail(ErrorCode::TimeOrder, "evaluate needs 0 <= s <= claim time");
    const RandomVariable V = apply(*E, s, X, scenario_dividend(sc));
    Outcome o;
    const auto [lo, hi] = std::minmax_element(V.values.begin(), V.values.end());
    o.body = {{"evaluation", E->describe()},
              {"s", s},
              {"t", X.time},
              {"values", V.values},
              {"min", *lo},
              {"max", *hi},
              {"mean", expectation(lat, V)}};
    o.text = "evaluate: E_{" + std::to_string(s) + "," + std::to_string(X.time) + "} over " +
             std::to_string(V.size()) + " nodes, range [" + fmt(*lo) + ", " + fmt(*hi) + "]\n";
    o.csv = variable_csv(V);
    return o;
}

Outcome cmd_verify_axioms(const Scenario& sc) {
    EvaluationPtr E = scenario_evaluation(sc);
    const json& a = section(sc, "axioms");
    AxiomSuiteOptions opt;
    opt.seed = sc.require_seed("verify-axioms");
    opt.samples = value_or(a, "samples", sc.raw.value("samples", opt.samples));
    opt.slack = value_or(a, "slack", opt.slack);
    opt.claim_scale = value_or(a, "claim_scale", opt.claim_scale);
    opt.check_a2_prime = value_or(a, "check_a2_prime", opt.check_a2_prime);
    opt.check_b = value_or(a, "check_b", opt.check_b);
    opt.mu_scan_start = value_or(a, "mu_scan_start", opt.mu_scan_start);
    opt.mu_scan_steps = value_or(a, "mu_scan_steps", opt.mu_scan_steps);
    if (a.contains("mu")) opt.mu = a.at("mu").get<double>();
    const AxiomReport report = axiom_suite(*E, opt);
    Outcome o;
    o.body = report.to_json();
    o.body["evaluation"] = E->describe();
    o.text = "verify-axioms: " + E->describe() + "\n" + report.summary();
    o.ok = report.all_pass();
    return o;
}

Outcome cmd_decompose(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const json& d = section(sc, "decompose");
    AdaptedProcess Y;
    Dividend target;
    if (d.contains("process_file")) {
        std::ifstream in(sc.resolve(d.at("process_file").get<std::string>()));
        if (!in) fail(ErrorCode::ConfigError, "cannot open the process file");
        Y = process_from_json(json::parse(in));
        check_process(lat, Y);
    } else {
        target = parse_dividend(d.value("dividend", json()), sc);
        Y = apply_process(*E, scenario_claim(sc, lat.steps()), target);
    }
    const std::string method = value_or<std::string>(d, "method", "both");
    if (method != "direct" && method != "penalized" && method != "both")
        fail(ErrorCode::ConfigError, "decompose method must be direct, penalized or both");
    const double tol = value_or(d, "tol", 1e-9);
    Outcome o;
    o.body["evaluation"] = E->describe();
    o.text = "decompose: " + E->describe() + "\n";
    std::optional<Decomposition> direct;
    if (method != "penalized") {
        direct = doob_meyer_direct(*E, Y, tol);
        o.body["direct"] = to_json(*direct, lat);
        o.text += "direct: sup A_N = " + fmt(direct->sup_norm(lat)) + ", residual " + fmt(direct->residual) + "\n";
        if (!target.is_zero() && !target.adapted() && target.predictable()) {
            const double err = path_sup(lat, direct->increments - *target.predictable());
            o.body["direct"]["recovery_error"] = err;
            o.text += "direct: distance to the generating dividend " + fmt(err) + "\n";
        }
        o.csv = process_csv(direct->increments);
    }
    if (method != "direct") {
        std::vector<int> schedule = value_or(d, "schedule", std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128, 256});
        const PenalizationTrace trace = doob_meyer_penalized(*E, Y, schedule, tol);
        o.body["penalized"] = to_json(trace, lat);
        for (const auto& step : trace.steps) o.ok = o.ok && step.monotone && step.below_target;
        const auto& last = trace.steps.back();
        o.text += "penalized: n = " + std::to_string(last.n) + ", gap " + fmt(last.gap) +
                  (o.ok ? ", monotone and below Y\n" : ", monotonicity or the bound y^n <= Y FAILED\n");
        if (direct) {
            const double diff = path_sup(lat, last.increments - direct->increments);
            o.body["penalized"]["distance_to_direct"] = diff;
            o.text += "penalized: distance to direct " + fmt(diff) + "\n";
        } else {
            o.csv = process_csv(last.increments);
        }
    }
    return o;
}

std::vector<double> default_axis() { return {-2.0, -1.0, 0.0, 1.0, 2.0}; }

ProbeGrid parse_grid(const json& g, const Lattice& lat) {
    ProbeGrid grid;
    const int N = lat.steps();
    grid.times = value_or(g, "times", std::vector<int>{0, N / 4, N / 2, 3 * N / 4, N - 1});
    grid.times.erase(std::unique(grid.times.begin(), grid.times.end()), grid.times.end());
    grid.ys = value_or(g, "ys", default_axis());
    if (g.contains("zs")) {
        const json& z = g.at("zs");
        if (!z.empty() && z.front().is_number())
            grid.zs.assign(static_cast<std::size_t>(lat.dimension()), z.get<std::vector<double>>());
        else
            grid.zs = z.get<std::vector<std::vector<double>>>();
    } else {
        grid.zs.assign(static_cast<std::size_t>(lat.dimension()), default_axis());
    }
    return grid;
}

ReconstructMethod parse_method(const std::string& m) {
    if (m == "one_step") return ReconstructMethod::OneStep;
    if (m == "test_process") return ReconstructMethod::TestProcess;
    fail(ErrorCode::ConfigError, "unknown reconstruction method '" + m + "'");
}

json reconstruction_json(const Reconstruction& r) {
    return {{"table", r.table.to_json()},
            {"max_dispersion", r.dispersion.empty() ? 0.0 : *std::max_element(r.dispersion.begin(), r.dispersion.end())},
            {"grid_lipschitz", r.grid_lipschitz},
            {"origin_defect", r.origin_defect},
            {"lipschitz_ok", r.lipschitz_ok},
            {"origin_ok", r.origin_ok}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    out << content;
}

Outcome cmd_recover(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const json& r = section(sc, "recover");
    const ProbeGrid grid = parse_grid(r.value("grid", json::object()), lat);
    std::optional<double> mu;
    if (r.contains("mu")) mu = r.at("mu").get<double>();
    const std::string method = value_or<std::string>(r, "method", "one_step");
    std::vector<std::string> methods = method == "both" ? std::vector<std::string>{"one_step", "test_process"}
                                                        : std::vector<std::string>{method};
    Outcome o;
    o.body["evaluation"] = E->describe();
    o.text = "recover: " + E->describe() + "\n";
    std::vector<Reconstruction> recs;
    for (const auto& m : methods) {
        recs.push_back(reconstruct_driver(*E, grid, parse_method(m), mu));
        const Reconstruction& rec = recs.back();
        o.body[m] = reconstruction_json(rec);
        o.ok = o.ok && rec.lipschitz_ok && rec.origin_ok;
        o.text += m + ": grid Lipschitz " + fmt(rec.grid_lipschitz) + (rec.lipschitz_ok ? " ok" : " FAILED") +
                  ", origin defect " + fmt(rec.origin_defect) + (rec.origin_ok ? " ok" : " FAILED") + "\n";
    }
    if (recs.size() == 2) {
        double agree = 0.0;
        for (std::size_t i = 0; i < recs[0].table.size(); ++i)
            agree = std::max(agree, std::abs(recs[0].table.at(i) - recs[1].table.at(i)));
        o.body["method_agreement"] = agree;
        o.text += "methods differ by at most " + fmt(agree) + "\n";
    }
    const TabulatedDriver& primary = recs.front().table;
    if (r.contains("table")) write_file(sc.resolve(r.at("table").get<std::string>()), primary.to_json().dump(2) + "\n");
    if (r.contains("roundtrip")) {
        const json& rt = r.at("roundtrip");
        Sampler sampler(sc.require_seed("recover"));
        const int cases = value_or(rt, "cases", 50);
        const double threshold = value_or(rt, "threshold", 0.05);
        std::vector<RoundtripCase> list;
        for (int c = 0; c < cases; ++c) {
            const double a = sampler.uniform(-1.0, 1.0);
            std::vector<double> b(static_cast<std::size_t>(lat.dimension()));
            for (double& bi : b) bi = sampler.uniform(-1.5, 1.5);
            RandomVariable X = tabulate(lat, lat.steps(), [&](std::size_t n) {
                double v = a;
                for (int i = 0; i < lat.dimension(); ++i) v += b[static_cast<std::size_t>(i)] * lat.brownian(lat.steps(), n, i);
                return std::clamp(v, -1.0, 1.0);
            });
            list.push_back({std::move(X), {}});
        }
        const RoundtripReport rep = verify_roundtrip(*E, primary, list, threshold);
        o.body["roundtrip"] = {{"cases", cases}, {"max_diff", rep.max_diff}, {"threshold", rep.threshold}, {"pass", rep.pass}};
        o.ok = o.ok && rep.pass;
        o.text += "round trip over " + std::to_string(cases) + " claims: max diff " + fmt(rep.max_diff) +
                  (rep.pass ? " ok" : " FAILED") + "\n";
    }
    return o;
}

Source parse_source(const json& j, const Scenario& sc) {
    if (j.contains("expression")) {
        const Lattice& lat = *sc.lattice;
        PayoffExpr e = parse_payoff(j.at("expression").get<std::string>(), lat.dimension(), true);
        if (uses_running_extrema(e)) fail(ErrorCode::ConfigError, "source expressions cannot read running extrema");
        if (!j.contains("c")) fail(ErrorCode::ConfigError, "an expression source needs its Lipschitz constant 'c'");
        const LatticePtr latp = sc.lattice;
        const PayoffModel model = sc.model;
        Source f;
        f.c = j.at("c").get<double>();
        f.label = print(e);
        f.fn = [e, latp, model](int k, std::size_t node, double y) {
            PayoffVars v;
            for (int i = 0; i < latp->dimension(); ++i) v.B[static_cast<std::size_t>(i)] = latp->brownian(k, node, i);
            v.S = model.S0 * std::exp(model.nu * latp->time(k) + model.sigma * v.B[0]);
            v.runmax = v.runmin = v.S;
            v.T = latp->horizon();
            v.Y = y;
            return evaluate_payoff(e, v);
        };
        return f;
    }
    if (j.is_string()) return builtin_source(j.get<std::string>(), json::object());
    return builtin_source(j.at("name").get<std::string>(), j.value("params", json::object()));
}

Outcome cmd_fixpoint(const Scenario& sc) {
    EvaluationPtr E = scenario_evaluation(sc);
    const json& f = section(sc, "fixpoint");
    if (!f.contains("source")) fail(ErrorCode::ConfigError, "fixpoint needs a 'source'");
    const Source source = parse_source(f.at("source"), sc);
    FixedPointOptions opt;
    opt.tol = value_or(f, "tol", opt.tol);
    opt.max_iterations = value_or(f, "max_iterations", opt.max_iterations);
    if (f.contains("mu")) opt.mu = f.at("mu").get<double>();
    const FixedPointResult res = solve_bsde_under_E(*E, source, scenario_claim(sc, sc.lattice->steps()), opt);
    const Classification cls = classify(*E, res.Y, res.K, 1e-8);
    Outcome o;
    o.body = {{"evaluation", E->describe()},
              {"source", source.label},
              {"Y0", res.Y.at(0).values[0]},
              {"iterations", res.trace.iterations},
              {"weight_rate", res.trace.weight_rate},
              {"distances", res.trace.distances},
              {"ratios", res.trace.ratios},
              {"noise_floor", res.trace.noise_floor},
              {"sup_changes", res.trace.sup_changes},
              {"classification", {{"kind", to_string(cls.kind)}, {"defect", cls.defect}}}};
    if (section(sc, "output").value("process", false)) o.body["Y"] = to_json(res.Y);
    const double worst_ratio =
        res.trace.ratios.size() > 1 ? *std::max_element(res.trace.ratios.begin() + 1, res.trace.ratios.end()) : 0.0;
    o.body["worst_ratio_after_first"] = worst_ratio;
    o.ok = cls.kind == MartingaleKind::Martingale;
    o.text = "fixpoint: " + E->describe() + ", source " + source.label + "\nY0 = " + fmt(res.Y.at(0).values[0]) +
             " after " + std::to_string(res.trace.iterations) + " iterations, worst ratio " + fmt(worst_ratio) +
             "\nsolution is " + to_string(cls.kind) + " (defect " + fmt(cls.defect) + ")\n";
    o.csv = process_csv(res.Y);
    return o;
}

Outcome cmd_probe(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const json& p = section(sc, "probe");
    const std::string mode = value_or<std::string>(p, "mode", "constant_z");
    const int t = value_or(p, "t", 0);
    std::vector<std::vector<double>> points;
    const char* key = mode == "constant_z" ? "z" : "p";
    if (p.contains("points")) {
        for (const json& pt : p.at("points")) points.push_back(vector_of(pt, lat.dimension(), key));
    } else {
        points.push_back(vector_of(p.value(key, json(0.0)), lat.dimension(), key));
    }
    const double y = value_or(p, "y", 0.0);
    Outcome o;
    o.body = {{"evaluation", E->describe()}, {"mode", mode}, {"t", t}, {"results", json::array()}};
    o.text = "probe (" + mode + ") of " + E->describe() + " at t = " + std::to_string(t) + "\n";
    for (const auto& pt : points) {
        ProbeResult r;
        if (mode == "constant_z")
            r = probe_constant_z(*E, t, pt);
        else if (mode == "infinitesimal")
            r = probe_infinitesimal(*E, t, y, pt);
        else
            fail(ErrorCode::ConfigError, "probe mode must be constant_z or infinitesimal");
        o.body["results"].push_back({{key, pt}, {"value", r.value}, {"dispersion", r.dispersion}});
        std::string label;
        for (double v : pt) label += (label.empty() ? "" : ",") + fmt(v);
        o.text += "  " + std::string(key) + " = (" + label + "): " + fmt(r.value) + " (dispersion " + fmt(r.dispersion) + ")\n";
    }
    return o;
}

Outcome cmd_report(const Scenario& sc) {
    const Lattice& lat = *sc.lattice;
    EvaluationPtr E = scenario_evaluation(sc);
    const Driver* g = E->driver();
    if (!g) fail(ErrorCode::ConfigError, "report needs a driver-backed evaluation");
    const json& r = section(sc, "report");
    const ProbeGrid grid = parse_grid(r.value("grid", json::object()), lat);
    const auto pairs = axis_pairs(lat.dimension(), grid.ys, grid.zs.front());
    const LipschitzEstimate est = estimate_lipschitz(*g, pairs);
    const double step = g->mu * lat.dt();
    const double guard = g->mu * std::sqrt(lat.dimension() * lat.dt());
    Outcome o;
    o.body = {{"driver", g->label},
              {"declared_mu", g->mu},
              {"zero_at_origin", g->zero_at_origin},
              {"zero_at_z0", g->zero_at_z0},
              {"lipschitz_estimate", est.estimate},
              {"exceeds_declared", est.exceeds_declared},
              {"mu_dt", step},
              {"implicit_step_ok", step < 1.0},
              {"mu_sqrt_d_dt", guard},
              {"monotone_step", guard <= 0.5}};
    o.ok = !est.exceeds_declared;
    o.text = "report: " + g->label + ", declared mu " + fmt(g->mu) + ", observed " + fmt(est.estimate) +
             (est.exceeds_declared ? " (EXCEEDS declared)" : "") + "\nmu dt = " + fmt(step) +
             ", mu sqrt(d dt) = " + fmt(guard) + "\n";
    if (r.contains("apriori")) {
        const json& a = r.at("apriori");
        const double mu = value_or(a, "mu", g->mu);
        const json src = a.value("source", json(0.0));
        const AdaptedProcess g0 = src.is_number()
                                      ? constant_process(lat, src.get<double>())
                                      : expression_process(lat, parse_payoff(src.get<std::string>(), lat.dimension()), sc.model);
        const auto rows = apriori_bound(lat, mu, g0, scenario_claim(sc, lat.steps()), scenario_solver(sc));
        json table = json::array();
        bool holds = true;
        for (const auto& row : rows) {
            table.push_back({{"time", row.time}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"holds", row.holds}});
            holds = holds && row.holds;
        }
        o.body["apriori"] = table;
        o.ok = o.ok && holds;
        o.text += std::string("a priori bound ") + (holds ? "holds" : "FAILS") + " at every grid time\n";
    }
    return o;
}

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"solve", cmd_solve},     {"evaluate", cmd_evaluate}, {"verify-axioms", cmd_verify_axioms},
        {"decompose", cmd_decompose}, {"recover", cmd_recover}, {"fixpoint", cmd_fixpoint},
        {"probe", cmd_probe},     {"report", cmd_report}};
    return h;
}

int exit_code_for(ErrorCode code) {
    if (is_numerical(code)) return kNumericalFailure;
    switch (code) {
        case ErrorCode::NotSupermartingale:
        case ErrorCode::AxiomsFailed:
        case ErrorCode::ExtractInconsistent:
            return kPropertyFailure;
        default:
            return kConfigError;
    }
}

void append_row(std::string& out, int k, std::size_t n, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%zu,%.17g\n", k, n, v);
    out += buf;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve",   "evaluate", "verify-axioms", "decompose",
                                                "recover", "fixpoint", "probe",         "report"};
    return names;
}

std::string process_csv(const AdaptedProcess& P) {
    std::string out = "time_index,node_index,value\n";
    for (const auto& slice : P.slices)
        for (std::size_t n = 0; n < slice.size(); ++n) append_row(out, slice.time, n, slice.values[n]);
    return out;
}

std::string variable_csv(const RandomVariable& X) {
    std::string out = "time_index,node_index,value\n";
    for (std::size_t n = 0; n < X.size(); ++n) append_row(out, X.time, n, X.values[n]);
    return out;
}

CommandResult run_command(const std::string& name, const json& config, const CommandOptions& options) {
    CommandResult result;
    const auto it = handlers().find(name);
    if (it == handlers().end()) {
        result.exit_code = kConfigError;
        result.error = "unknown command '" + name + "'";
        return result;
    }
    try {
        const Scenario sc = load_scenario(config, options.base_dir, options.seed);
        Outcome o = it->second(sc);
        result.report = {{"header",
                          {{"version", GEVAL_VERSION},
                           {"seed", sc.seed ? json(*sc.seed) : json()},
                           {"config_hash", config_hash(config)}}},
                         {"command", name},
                         {"result", std::move(o.body)}};
        result.text = std::move(o.text);
        result.csv = std::move(o.csv);
        result.exit_code = o.ok ? kSuccess : kPropertyFailure;
        const json& out = section(sc, "output");
        if (out.contains("csv") && !result.csv.empty()) write_file(sc.resolve(out.at("csv").get<std::string>()), result.csv);
        if (out.contains("text")) write_file(sc.resolve(out.at("text").get<std::string>()), result.text);
    } catch (const Error& e) {
        result = {};
        result.exit_code = exit_code_for(e.code());
        result.error = e.what();
    } catch (const json::exception& e) {
        result = {};
        result.exit_code = kConfigError;
        result.error = std::string("ConfigError: ") + e.what();
    } catch (const std::exception& e) {
        result = {};
        result.exit_code = kNumericalFailure;
        result.error = e.what();
    }
    return result;
}

}  // namespace geval::cli
