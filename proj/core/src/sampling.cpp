#include "geval/sampling.hpp"

#include <algorithm>

#include "geval/error.hpp"

namespace geval {

RandomVariable indicator(const Lattice& lattice, const Event& A, int k) {
    if (k < A.time) fail(ErrorCode::TimeOrder, "indicator needs k >= time of the event");
    return tabulate(lattice, k, [&](std::size_t n) { return A.contains(lattice, k, n) ? 1.0 : 0.0; });
}

double Sampler::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

int Sampler::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

bool Sampler::coin(double p) { return std::bernoulli_distribution(p)(rng_); }

RandomVariable Sampler::claim(const Lattice& lattice, int t, double scale) {
    return tabulate(lattice, t, [&](std::size_t) { return uniform(-scale, scale); });
}

RandomVariable Sampler::smooth_claim(const Lattice& lattice, int t, double scale) {
    const double a = uniform(-scale, scale);
    std::vector<double> b(static_cast<std::size_t>(lattice.dimension()));
    for (auto& v : b) v = uniform(-scale, scale);
    const double c = uniform(-scale, scale) * 0.25;
    return tabulate(lattice, t, [&](std::size_t n) {
        double x = a;
        for (int i = 0; i < lattice.dimension(); ++i) {
            const double w = lattice.brownian(t, n, i);
            x += b[static_cast<std::size_t>(i)] * w + c * w * w;
        }
        return x;
    });
}

RandomVariable Sampler::measurable_claim(const Lattice& lattice, int s, int t, double scale) {
    const int base = std::min(s, lattice.path_steps());
    std::vector<double> atom(lattice.node_count(base));
    for (auto& v : atom) v = uniform(-scale, scale);
    return tabulate(lattice, t, [&](std::size_t n) { return atom[lattice.ancestor(t, n, base)]; });
}

Event Sampler::event(const Lattice& lattice, int s) {
    Event A;
    A.time = s;
    A.base = std::min(s, lattice.path_steps());
    A.atoms.resize(lattice.node_count(A.base));
    for (auto& a : A.atoms) a = coin() ? 1 : 0;
    return A;
}

StoppingTime Sampler::stopping_time(const Lattice& lattice, double p) {
    lattice.require_path_tree("random stopping times");
    std::vector<std::vector<std::uint8_t>> flags;
    for (int k = 0; k <= lattice.steps(); ++k) {
        std::vector<std::uint8_t> f(lattice.node_count(k));
        for (auto& x : f) x = coin(p) ? 1 : 0;
        flags.push_back(std::move(f));
    }
    return StoppingTime::from_flags(lattice, std::move(flags));
}

Dividend Sampler::increasing_dividend(const Lattice& lattice, double max_rate) {
    AdaptedProcess dA = tabulate_process(lattice, [&](int k, std::size_t) {
        return k < lattice.steps() ? uniform(0.0, max_rate) * lattice.dt() : 0.0;
    });
    return Dividend::from_increments(std::move(dA));
}

AdaptedProcess Sampler::adapted(const Lattice& lattice, double scale) {
    return tabulate_process(lattice, [&](int, std::size_t) { return uniform(-scale, scale); });
}

}  // namespace geval
