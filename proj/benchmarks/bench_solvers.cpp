#include <benchmark/benchmark.h>

#include "geval/axioms.hpp"
#include "geval/bsde.hpp"
#include "geval/evaluation.hpp"
#include "geval/parallel.hpp"
#include "geval/payoff.hpp"
#include "geval/sampling.hpp"

using namespace geval;

namespace {

LatticePtr make_lattice(int steps, std::optional<int> path_steps) {
    LatticeOptions opt;
    opt.path_steps = path_steps;
    return Lattice::build({1.0, steps, 1}, opt);
}

/// Call under Black-Scholes on a recombining lattice; the argument is N.
void BM_BlackScholesCall(benchmark::State& state) {
    set_thread_count(1);
    const LatticePtr lat = make_lattice(static_cast<int>(state.range(0)), 0);
    const double r = 0.05, sigma = 0.2, b = 0.1;
    const RandomVariable X =
        payoff_claim(*lat, parse_payoff("max(S - 100, 0)"), PayoffModel{100.0, b - 0.5 * sigma * sigma, sigma});
    const Driver g = black_scholes(r, {(b - r) / sigma});
    for (auto _ : state) benchmark::DoNotOptimize(solve_bsde(*lat, g, X).Y.at(0).values[0]);
}
BENCHMARK(BM_BlackScholesCall)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

/// g_mu on a full path tree; the argument is N, so the leaf count is 2^N.
void BM_PathTreeGMu(benchmark::State& state) {
    set_thread_count(1);
    const LatticePtr lat = make_lattice(static_cast<int>(state.range(0)), std::nullopt);
    Sampler rng(3);
    const RandomVariable X = rng.claim(*lat, lat->steps());
    const Driver g = g_mu(0.5);
    for (auto _ : state) benchmark::DoNotOptimize(solve_bsde(*lat, g, X).Y.at(0).values[0]);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lat->node_count(lat->steps())));
}
BENCHMARK(BM_PathTreeGMu)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_AxiomSuite(benchmark::State& state) {
    set_thread_count(1);
    const LatticePtr lat = make_lattice(12, 4);
    const EvaluationPtr E = from_driver(lat, kappa_abs_z(0.3));
    AxiomSuiteOptions opt;
    opt.samples = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(axiom_suite(*E, opt).all_pass());
}
BENCHMARK(BM_AxiomSuite)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
