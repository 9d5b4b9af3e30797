#include "geval/dividend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geval/error.hpp"

namespace geval {

namespace {

std::optional<AdaptedProcess> add(const std::optional<AdaptedProcess>& a, const std::optional<AdaptedProcess>& b,
                                  double sign) {
    if (!a && !b) return std::nullopt;
    if (!b) return a;
    if (!a) return sign * *b;
    return sign > 0 ? *a + *b : *a - *b;
}

}  // namespace

Dividend Dividend::from_process(AdaptedProcess K) {
    Dividend d;
    d.adapted_ = std::move(K);
    return d;
}

Dividend Dividend::from_increments(AdaptedProcess dA) {
    Dividend d;
    d.predictable_ = std::move(dA);
    return d;
}

Dividend Dividend::from_rate(const Lattice& lattice, const AdaptedProcess& rate) {
    return from_increments(lattice.dt() * rate);
}

void Dividend::increments(const Lattice& lattice, int k, std::size_t node, std::span<double> out) const {
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = increment(k, node, lattice.child(k, node, b));
}

void Dividend::check(const Lattice& lattice) const {
    for (const auto* p : {&adapted_, &predictable_}) {
        if (!*p) continue;
        check_process(lattice, **p);
        if ((*p)->last_time() != lattice.steps())
            fail(ErrorCode::LatticeMismatch, "dividend must cover all time indices 0..N");
    }
}

double Dividend::worst_decrease(const Lattice& lattice) const {
    double worst = 0.0;
    for (int k = 0; k < lattice.steps(); ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n)
            for (std::size_t b = 0; b < lattice.branches(); ++b)
                worst = std::max(worst, -increment(k, n, lattice.child(k, n, b)));
    return worst;
}

AdaptedProcess Dividend::cumulative(const Lattice& lattice) const {
    AdaptedProcess C = constant_process(lattice, 0.0);
    for (int k = 0; k < lattice.steps(); ++k) {
        auto& next = C.at(k + 1).values;
        std::fill(next.begin(), next.end(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t n = 0; n < lattice.node_count(k); ++n)
            for (std::size_t b = 0; b < lattice.branches(); ++b) {
                const std::size_t c = lattice.child(k, n, b);
                const double v = C.at(k).values[n] + increment(k, n, c);
                if (std::isnan(next[c])) {
                    next[c] = v;
                } else if (std::abs(next[c] - v) > 1e-12 * (1.0 + std::abs(v))) {
                    fail(ErrorCode::NotMeasurable,
                         "cumulative dividend is path dependent at time " + std::to_string(k + 1));
                }
            }
    }
    return C;
}

Dividend operator+(const Dividend& a, const Dividend& b) {
    Dividend d;
    d.adapted_ = add(a.adapted_, b.adapted_, 1.0);
    d.predictable_ = add(a.predictable_, b.predictable_, 1.0);
    return d;
}

Dividend operator-(const Dividend& a, const Dividend& b) {
    Dividend d;
    d.adapted_ = add(a.adapted_, b.adapted_, -1.0);
    d.predictable_ = add(a.predictable_, b.predictable_, -1.0);
    return d;
}

Dividend operator*(double c, const Dividend& a) {
    Dividend d;
    if (a.adapted_) d.adapted_ = c * *a.adapted_;
    if (a.predictable_) d.predictable_ = c * *a.predictable_;
    return d;
}

}  // namespace geval
