#include "geval/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "geval/error.hpp"
#include "geval/parallel.hpp"

namespace geval {

Evaluation::Evaluation(LatticePtr lattice) : lattice_(std::move(lattice)) {
    if (!lattice_) fail(ErrorCode::LatticeMismatch, "evaluation needs a lattice");
}

namespace {

class DriverEvaluation final : public Evaluation {
public:
    DriverEvaluation(LatticePtr lattice, Driver g, SolverConfig cfg)
        : Evaluation(std::move(lattice)), g_(std::move(g)), cfg_(cfg) {
        cfg_.validate();
        check_step_size(this->lattice(), g_, cfg_);
    }

    double one_step(int k, std::size_t node, std::span<const double> children) const override {
        return driver_step(lattice(), g_, k, node, children, cfg_).y;
    }
    std::optional<double> declared_mu() const override { return g_.mu; }
    std::string describe() const override { return "driver(" + g_.label + ")"; }
    const Driver* driver() const override { return &g_; }

private:
    Driver g_;
    SolverConfig cfg_;
};

class BlackBoxEvaluation final : public Evaluation {
public:
    BlackBoxEvaluation(LatticePtr lattice, OneStepMap map, std::optional<double> mu, std::string label)
        : Evaluation(std::move(lattice)), map_(std::move(map)), mu_(mu), label_(std::move(label)) {}

    double one_step(int k, std::size_t node, std::span<const double> children) const override {
        return map_(k, node, children);
    }
    std::optional<double> declared_mu() const override { return mu_; }
    std::string describe() const override { return label_; }

private:
    OneStepMap map_;
    std::optional<double> mu_;
    std::string label_;
};

class ConcatenatedEvaluation final : public Evaluation {
public:
    explicit ConcatenatedEvaluation(std::vector<Segment> segments)
        : Evaluation(segments.at(0).evaluation->lattice_ptr()), segments_(std::move(segments)) {
        for (int k = 0; k < lattice().steps(); ++k) owner_.push_back(find(k));
    }

    double one_step(int k, std::size_t node, std::span<const double> children) const override {
        return owner_[static_cast<std::size_t>(k)]->one_step(k, node, children);
    }
    std::optional<double> declared_mu() const override {
        double mu = 0.0;
        for (const auto& s : segments_) {
            const auto m = s.evaluation->declared_mu();
            if (!m) return std::nullopt;
            mu = std::max(mu, *m);
        }
        return mu;
    }
    std::string describe() const override {
        std::string out = "concatenate(";
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            if (i) out += ", ";
            out += segments_[i].evaluation->describe() + "@[" + std::to_string(segments_[i].begin) + "," +
                   std::to_string(segments_[i].end) + "]";
        }
        return out + ")";
    }

private:
    const Evaluation* find(int k) const {
        for (const auto& s : segments_)
            if (s.begin <= k && k < s.end) return s.evaluation.get();
        fail(ErrorCode::BadPartition, "no segment covers step " + std::to_string(k));
    }

    std::vector<Segment> segments_;
    std::vector<const Evaluation*> owner_;
};

class LiftedEvaluation final : public Evaluation {
public:
    LiftedEvaluation(EvaluationPtr base, Dividend K)
        : Evaluation(base->lattice_ptr()), base_(std::move(base)), K_(std::move(K)) {
        K_.check(lattice());
    }

    double one_step(int k, std::size_t node, std::span<const double> children) const override {
        std::array<double, 256> v{};
        for (std::size_t b = 0; b < children.size(); ++b)
            v[b] = children[b] + K_.increment(k, node, lattice().child(k, node, b));
        return base_->one_step(k, node, std::span<const double>(v.data(), children.size()));
    }
    std::optional<double> declared_mu() const override { return base_->declared_mu(); }
    std::string describe() const override { return "lift(" + base_->describe() + ")"; }

private:
    EvaluationPtr base_;
    Dividend K_;
};

// One backward slice: Y_k from Y_{k+1}, skipping nodes flagged by `stop`.
void step_slice(const Evaluation& E, int k, const std::vector<double>& next, const Dividend& K,
                std::vector<double>& out, const StoppingTime* stop) {
    const Lattice& lat = E.lattice();
    const std::size_t B = lat.branches();
    parallel_for(out.size(), [&](std::size_t n) {
        if (stop && stop->stops_at(k, n)) return;
        std::array<double, 256> v{};
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t c = lat.child(k, n, b);
            v[b] = next[c] + K.increment(k, n, c);
        }
        out[n] = E.one_step(k, n, std::span<const double>(v.data(), B));
    });
}

}  // namespace

EvaluationPtr from_driver(LatticePtr lattice, Driver g, SolverConfig cfg) {
    return std::make_shared<DriverEvaluation>(std::move(lattice), std::move(g), cfg);
}

EvaluationPtr conditional_expectation(LatticePtr lattice) {
    return std::make_shared<DriverEvaluation>(std::move(lattice), zero_driver(), SolverConfig{});
}

EvaluationPtr black_box(LatticePtr lattice, OneStepMap map, std::optional<double> mu, std::string label) {
    if (!map) fail(ErrorCode::InvalidSpec, "black box needs a one-step map");
    return std::make_shared<BlackBoxEvaluation>(std::move(lattice), std::move(map), mu, std::move(label));
}

EvaluationPtr concatenate(const std::vector<Segment>& segments) {
    if (segments.empty()) fail(ErrorCode::BadPartition, "no segments");
    const LatticePtr& lat = segments.front().evaluation->lattice_ptr();
    std::vector<Segment> sorted = segments;
    std::sort(sorted.begin(), sorted.end(), [](const Segment& a, const Segment& b) { return a.begin < b.begin; });
    int cursor = 0;
    for (const auto& s : sorted) {
        if (!s.evaluation) fail(ErrorCode::BadPartition, "segment without evaluation");
        if (s.evaluation->lattice_ptr() != lat && s.evaluation->lattice().spec().steps != lat->steps())
            fail(ErrorCode::LatticeMismatch, "segments live on different lattices");
        if (s.begin != cursor || s.end <= s.begin)
            fail(ErrorCode::BadPartition, "segments must be nonempty and tile [0, N] without gaps or overlaps");
        cursor = s.end;
    }
    if (cursor != lat->steps()) fail(ErrorCode::BadPartition, "segments must end at N");
    return std::make_shared<ConcatenatedEvaluation>(std::move(sorted));
}

EvaluationPtr lift_with_dividend(EvaluationPtr base, Dividend K) {
    if (!base) fail(ErrorCode::InvalidSpec, "lift needs a base evaluation");
    if (K.is_zero()) return base;
    return std::make_shared<LiftedEvaluation>(std::move(base), std::move(K));
}

RandomVariable apply(const Evaluation& E, int s, const RandomVariable& X, const Dividend& K) {
    const Lattice& lat = E.lattice();
    check_variable(lat, X);
    if (s < 0 || s > X.time) fail(ErrorCode::TimeOrder, "apply needs 0 <= s <= t");
    K.check(lat);
    std::vector<double> cur = X.values;
    for (int k = X.time - 1; k >= s; --k) {
        std::vector<double> prev(lat.node_count(k));
        step_slice(E, k, cur, K, prev, nullptr);
        cur = std::move(prev);
    }
    return RandomVariable{s, std::move(cur)};
}

AdaptedProcess apply_process(const Evaluation& E, const RandomVariable& X, const Dividend& K) {
    const Lattice& lat = E.lattice();
    check_variable(lat, X);
    K.check(lat);
    AdaptedProcess P;
    P.slices.resize(static_cast<std::size_t>(X.time + 1));
    P.at(X.time) = X;
    for (int k = X.time - 1; k >= 0; --k) {
        RandomVariable Yk{k, std::vector<double>(lat.node_count(k))};
        step_slice(E, k, P.at(k + 1).values, K, Yk.values, nullptr);
        P.at(k) = std::move(Yk);
    }
    return P;
}

AdaptedProcess stopped_process(const Evaluation& E, const StoppingTime& tau, const RandomVariable& X,
                               const Dividend& K) {
    const Lattice& lat = E.lattice();
    lat.require_path_tree("stopped_process");
    K.check(lat);
    AdaptedProcess P = values_at_stop(lat, tau, X, 1e-12 * (1.0 + sup_norm(X)));
    for (int k = lat.steps() - 1; k >= 0; --k) step_slice(E, k, P.at(k + 1).values, K, P.at(k).values, &tau);
    return P;
}

RandomVariable extend_to_stopping(const Evaluation& E, const StoppingTime& sigma, const StoppingTime& tau,
                                  const RandomVariable& X, const Dividend& K) {
    if (!precedes(E.lattice(), sigma, tau)) fail(ErrorCode::StoppingOrder, "sigma must not exceed tau");
    return stopped_value(E.lattice(), stopped_process(E, tau, X, K), sigma);
}

}  // namespace geval
