#include "geval/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geval/error.hpp"

namespace geval {

namespace {

using Flags = std::vector<std::vector<std::uint8_t>>;

Flags empty_flags(const Lattice& lattice) {
    Flags f;
    for (int k = 0; k <= lattice.steps(); ++k) f.emplace_back(lattice.node_count(k), 0);
    std::fill(f.back().begin(), f.back().end(), 1);
    return f;
}

// Min and max of a leaf variable over the descendants of every node.
void descendant_range(const Lattice& lattice, const RandomVariable& X, std::vector<std::vector<double>>& lo,
                      std::vector<std::vector<double>>& hi) {
    const int N = lattice.steps();
    lo.assign(static_cast<std::size_t>(N + 1), {});
    hi.assign(static_cast<std::size_t>(N + 1), {});
    lo[static_cast<std::size_t>(N)] = X.values;
    hi[static_cast<std::size_t>(N)] = X.values;
    for (int k = N - 1; k >= 0; --k) {
        const std::size_t nn = lattice.node_count(k);
        auto& l = lo[static_cast<std::size_t>(k)];
        auto& h = hi[static_cast<std::size_t>(k)];
        l.assign(nn, std::numeric_limits<double>::infinity());
        h.assign(nn, -std::numeric_limits<double>::infinity());
        for (std::size_t n = 0; n < nn; ++n) {
            for (std::size_t b = 0; b < lattice.branches(); ++b) {
                const std::size_t c = lattice.child(k, n, b);
                l[n] = std::min(l[n], lo[static_cast<std::size_t>(k + 1)][c]);
                h[n] = std::max(h[n], hi[static_cast<std::size_t>(k + 1)][c]);
            }
        }
    }
}

}  // namespace

void StoppingTime::close_on_path_tree(const Lattice& lattice) {
    if (!lattice.is_path_tree()) return;
    for (int k = 0; k < lattice.steps(); ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n)
            if (flags_[static_cast<std::size_t>(k)][n])
                for (std::size_t b = 0; b < lattice.branches(); ++b)
                    flags_[static_cast<std::size_t>(k + 1)][lattice.child(k, n, b)] = 1;
}

StoppingTime StoppingTime::constant(const Lattice& lattice, int k) {
    lattice.check_time(k);
    Flags f = empty_flags(lattice);
    for (int j = k; j <= lattice.steps(); ++j) std::fill(f[static_cast<std::size_t>(j)].begin(), f[static_cast<std::size_t>(j)].end(), 1);
    return StoppingTime(std::move(f));
}

StoppingTime StoppingTime::from_values(const Lattice& lattice, const RandomVariable& tau) {
    lattice.require_path_tree("StoppingTime::from_values");
    if (!is_stopping_time(lattice, tau)) fail(ErrorCode::NotAStoppingTime, "candidate anticipates the future");
    std::vector<std::vector<double>> lo, hi;
    descendant_range(lattice, tau, lo, hi);
    Flags f = empty_flags(lattice);
    for (int k = 0; k <= lattice.steps(); ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n)
            f[static_cast<std::size_t>(k)][n] = hi[static_cast<std::size_t>(k)][n] <= k ? 1 : 0;
    return StoppingTime(std::move(f));
}

StoppingTime StoppingTime::from_flags(const Lattice& lattice, Flags flags) {
    if (flags.size() != static_cast<std::size_t>(lattice.steps() + 1))
        fail(ErrorCode::LatticeMismatch, "stopping flags need N+1 slices");
    for (int k = 0; k <= lattice.steps(); ++k)
        if (flags[static_cast<std::size_t>(k)].size() != lattice.node_count(k))
            fail(ErrorCode::LatticeMismatch, "stopping flag slice has the wrong size");
    std::fill(flags.back().begin(), flags.back().end(), 1);
    StoppingTime t(std::move(flags));
    t.close_on_path_tree(lattice);
    return t;
}

StoppingTime StoppingTime::hitting(const Lattice& lattice, const AdaptedProcess& Y, double level, bool upward,
                                   int start) {
    check_process(lattice, Y);
    if (Y.last_time() != lattice.steps()) fail(ErrorCode::LatticeMismatch, "hitting needs a full process");
    Flags f = empty_flags(lattice);
    for (int k = std::max(start, 0); k <= lattice.steps(); ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n) {
            const double v = Y.at(k).values[n];
            if (upward ? v >= level : v <= level) f[static_cast<std::size_t>(k)][n] = 1;
        }
    return from_flags(lattice, std::move(f));
}

StoppingTime StoppingTime::earliest(const Lattice& lattice, const StoppingTime& a, const StoppingTime& b) {
    Flags f = a.flags_;
    for (std::size_t k = 0; k < f.size(); ++k)
        for (std::size_t n = 0; n < f[k].size(); ++n) f[k][n] = f[k][n] | b.flags_[k][n];
    return from_flags(lattice, std::move(f));
}

RandomVariable StoppingTime::to_values(const Lattice& lattice) const {
    lattice.require_path_tree("StoppingTime::to_values");
    const int N = lattice.steps();
    // first[k][n]: stopping time on the atom if already stopped by k, else -1.
    std::vector<int> cur{flags_[0][0] ? 0 : -1};
    for (int k = 0; k < N; ++k) {
        std::vector<int> next(lattice.node_count(k + 1), -1);
        for (std::size_t n = 0; n < cur.size(); ++n)
            for (std::size_t b = 0; b < lattice.branches(); ++b) {
                const std::size_t c = lattice.child(k, n, b);
                next[c] = cur[n] >= 0 ? cur[n] : (flags_[static_cast<std::size_t>(k + 1)][c] ? k + 1 : -1);
            }
        cur = std::move(next);
    }
    RandomVariable out{N, std::vector<double>(cur.size())};
    for (std::size_t n = 0; n < cur.size(); ++n) out.values[n] = cur[n];
    return out;
}

bool is_stopping_time(const Lattice& lattice, const RandomVariable& candidate) {
    lattice.require_path_tree("is_stopping_time");
    const int N = lattice.steps();
    if (candidate.time != N || candidate.values.size() != lattice.node_count(N)) return false;
    for (double v : candidate.values)
        if (!(v >= 0.0 && v <= N) || std::floor(v) != v) return false;
    std::vector<std::vector<double>> lo, hi;
    descendant_range(lattice, candidate, lo, hi);
    for (int k = 0; k <= N; ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n) {
            const double l = lo[static_cast<std::size_t>(k)][n];
            const double h = hi[static_cast<std::size_t>(k)][n];
            if (!(h <= k || l > k)) return false;
        }
    return true;
}

bool precedes(const Lattice& lattice, const StoppingTime& sigma, const StoppingTime& tau) {
    // alive: reachable with neither time stopped before k.
    std::vector<std::uint8_t> alive{1};
    for (int k = 0; k <= lattice.steps(); ++k) {
        const std::size_t nn = lattice.node_count(k);
        std::vector<std::uint8_t> cont(nn, 0);
        for (std::size_t n = 0; n < nn; ++n) {
            if (!alive[n]) continue;
            const bool s = sigma.stops_at(k, n);
            const bool t = tau.stops_at(k, n);
            if (t && !s) return false;
            cont[n] = (!s && !t) ? 1 : 0;
        }
        if (k == lattice.steps()) break;
        std::vector<std::uint8_t> next(lattice.node_count(k + 1), 0);
        for (std::size_t n = 0; n < nn; ++n)
            if (cont[n])
                for (std::size_t b = 0; b < lattice.branches(); ++b) next[lattice.child(k, n, b)] = 1;
        alive = std::move(next);
    }
    return true;
}

std::vector<StopNode> stop_nodes(const Lattice& lattice, const StoppingTime& tau) {
    std::vector<StopNode> out;
    std::vector<std::uint8_t> alive{1};
    for (int k = 0; k <= lattice.steps(); ++k) {
        const std::size_t nn = lattice.node_count(k);
        std::vector<std::uint8_t> next(k < lattice.steps() ? lattice.node_count(k + 1) : 0, 0);
        for (std::size_t n = 0; n < nn; ++n) {
            if (!alive[n]) continue;
            if (tau.stops_at(k, n)) {
                out.push_back({k, n});
            } else {
                for (std::size_t b = 0; b < lattice.branches(); ++b) next[lattice.child(k, n, b)] = 1;
            }
        }
        alive = std::move(next);
    }
    return out;
}

RandomVariable stopped_value(const Lattice& lattice, const AdaptedProcess& Y, const StoppingTime& tau) {
    lattice.require_path_tree("stopped_value");
    check_process(lattice, Y);
    if (Y.last_time() != lattice.steps()) fail(ErrorCode::LatticeMismatch, "stopped_value needs a full process");
    const RandomVariable when = tau.to_values(lattice);
    const int N = lattice.steps();
    RandomVariable out{N, std::vector<double>(when.values.size())};
    for (std::size_t leaf = 0; leaf < when.values.size(); ++leaf) {
        const int k = static_cast<int>(when.values[leaf]);
        out.values[leaf] = Y.at(k).values[lattice.ancestor(N, leaf, k)];
    }
    return out;
}

AdaptedProcess values_at_stop(const Lattice& lattice, const StoppingTime& tau, const RandomVariable& X, double tol) {
    lattice.require_path_tree("values_at_stop");
    check_variable(lattice, X);
    if (X.time != lattice.steps()) fail(ErrorCode::LatticeMismatch, "terminal variable must live at the leaves");
    std::vector<std::vector<double>> lo, hi;
    descendant_range(lattice, X, lo, hi);
    AdaptedProcess P = constant_process(lattice, 0.0);
    for (int k = 0; k <= lattice.steps(); ++k)
        for (std::size_t n = 0; n < lattice.node_count(k); ++n) {
            if (!tau.stops_at(k, n)) continue;
            const double l = lo[static_cast<std::size_t>(k)][n];
            const double h = hi[static_cast<std::size_t>(k)][n];
            if (h - l > tol)
                fail(ErrorCode::NotMeasurable, "terminal value varies on a stopped atom at time " + std::to_string(k));
            P.at(k).values[n] = l;
        }
    return P;
}

}  // namespace geval
