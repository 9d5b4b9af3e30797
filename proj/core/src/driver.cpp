#include "geval/driver.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "geval/error.hpp"

namespace geval {

double norm(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void require_nonnegative(double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::BadParams, std::string(what) + " must be finite and >= 0");
}

std::vector<double> vector_param(const nlohmann::json& params, const char* key, int dimension) {
    if (!params.contains(key)) fail(ErrorCode::BadParams, std::string("missing parameter '") + key + "'");
    const auto& v = params.at(key);
    std::vector<double> out;
    if (v.is_number()) {
        out.assign(static_cast<std::size_t>(dimension), v.get<double>());
    } else if (v.is_array()) {
        out = v.get<std::vector<double>>();
    } else {
        fail(ErrorCode::BadParams, std::string("parameter '") + key + "' must be a number or array");
    }
    if (out.size() != static_cast<std::size_t>(dimension))
        fail(ErrorCode::BadParams, std::string("parameter '") + key + "' needs one entry per dimension");
    return out;
}

double scalar_param(const nlohmann::json& params, const char* key, std::optional<double> fallback = std::nullopt) {
    if (!params.contains(key)) {
        if (fallback) return *fallback;
        fail(ErrorCode::BadParams, std::string("missing parameter '") + key + "'");
    }
    if (!params.at(key).is_number()) fail(ErrorCode::BadParams, std::string("parameter '") + key + "' must be a number");
    const double v = params.at(key).get<double>();
    if (!std::isfinite(v)) fail(ErrorCode::BadParams, std::string("parameter '") + key + "' must be finite");
    return v;
}

}  // namespace

Driver zero_driver() {
    return Driver{[](int, std::size_t, double, std::span<const double>) { return 0.0; }, 0.0, true, true, "zero"};
}

Driver g_mu(double mu) {
    require_nonnegative(mu, "mu");
    return Driver{[mu](int, std::size_t, double y, std::span<const double> z) { return mu * (std::abs(y) + norm(z)); },
                  mu, true, mu == 0.0, "g_mu"};
}

Driver neg_g_mu(double mu) {
    require_nonnegative(mu, "mu");
    return Driver{[mu](int, std::size_t, double y, std::span<const double> z) { return -mu * (std::abs(y) + norm(z)); },
                  mu, true, mu == 0.0, "neg_g_mu"};
}

Driver kappa_abs_z(double kappa) {
    require_nonnegative(kappa, "kappa");
    return Driver{[kappa](int, std::size_t, double, std::span<const double> z) { return kappa * norm(z); }, kappa,
                  true, true, "kappa_abs_z"};
}

Driver black_scholes(double r, std::vector<double> theta) {
    if (!std::isfinite(r)) fail(ErrorCode::BadParams, "r must be finite");
    for (double t : theta)
        if (!std::isfinite(t)) fail(ErrorCode::BadParams, "theta must be finite");
    const double mu = std::max(std::abs(r), norm(theta));
    // g(0, 0) = 0 for every r and theta; g(y, 0) = -r y vanishes only when r = 0.
    return Driver{[r, theta](int, std::size_t, double y, std::span<const double> z) { return -r * y - dot(theta, z); },
                  mu, true, r == 0.0, "black_scholes"};
}

Driver linear_driver(double a, std::vector<double> b, double c) {
    if (!std::isfinite(a) || !std::isfinite(c)) fail(ErrorCode::BadParams, "linear coefficients must be finite");
    const double mu = std::max(std::abs(a), norm(b));
    return Driver{[a, b, c](int, std::size_t, double y, std::span<const double> z) { return a * y + dot(b, z) + c; },
                  mu, c == 0.0, a == 0.0 && c == 0.0, "linear"};
}

Driver builtin(const std::string& name, const nlohmann::json& params, int dimension) {
    const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
    if (!p.is_object()) fail(ErrorCode::BadParams, "driver parameters must be an object");
    if (name == "zero") return zero_driver();
    if (name == "g_mu") return g_mu(scalar_param(p, "mu"));
    if (name == "neg_g_mu") return neg_g_mu(scalar_param(p, "mu"));
    if (name == "kappa_abs_z") return kappa_abs_z(scalar_param(p, "kappa"));
    if (name == "black_scholes") {
        const double r = scalar_param(p, "r");
        if (p.contains("theta")) return black_scholes(r, vector_param(p, "theta", dimension));
        const auto b = vector_param(p, "b", dimension);
        const auto sigma = vector_param(p, "sigma", dimension);
        std::vector<double> theta(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (sigma[i] == 0.0) fail(ErrorCode::BadParams, "sigma must be nonzero");
            theta[i] = (b[i] - r) / sigma[i];
        }
        return black_scholes(r, theta);
    }
    if (name == "linear")
        return linear_driver(scalar_param(p, "a", 0.0),
                             p.contains("b") ? vector_param(p, "b", dimension)
                                             : std::vector<double>(static_cast<std::size_t>(dimension), 0.0),
                             scalar_param(p, "c", 0.0));
    fail(ErrorCode::UnknownBuiltin, "unknown driver '" + name + "'");
}

Driver reflect(const Driver& g) {
    Driver r = g;
    r.fn = [f = g.fn](int k, std::size_t node, double y, std::span<const double> z) {
        std::array<double, 8> neg{};
        for (std::size_t i = 0; i < z.size(); ++i) neg[i] = -z[i];
        return -f(k, node, -y, std::span<const double>(neg.data(), z.size()));
    };
    r.label = "reflect(" + g.label + ")";
    return r;
}

Driver shift_by_dividend(const Driver& g, const AdaptedProcess& K, const StoppingTime& tau) {
    Driver s = g;
    s.fn = [f = g.fn, K, tau](int k, std::size_t node, double y, std::span<const double> z) {
        if (tau.stops_at(k, node)) return 0.0;
        return f(k, node, y - K.at(k).values[node], z);
    };
    // The shift breaks the origin flags unless K vanishes.
    s.zero_at_origin = false;
    s.zero_at_z0 = false;
    s.label = "shift(" + g.label + ")";
    return s;
}

LipschitzEstimate estimate_lipschitz(const Driver& g, std::span<const LipschitzSample> samples) {
    double best = 0.0;
    bool any = false;
    for (const auto& s : samples) {
        if (s.z.size() != s.z2.size()) fail(ErrorCode::DegenerateGrid, "z vectors of a pair differ in length");
        std::vector<double> dz(s.z.size());
        for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = s.z[i] - s.z2[i];
        const double dist = std::abs(s.y - s.y2) + norm(dz);
        if (dist == 0.0) continue;
        any = true;
        const double dg = std::abs(g(s.k, s.node, s.y, s.z) - g(s.k, s.node, s.y2, s.z2));
        best = std::max(best, dg / dist);
    }
    if (!any) fail(ErrorCode::DegenerateGrid, "all sample pairs coincide");
    return {best, best > g.mu * (1.0 + 1e-9)};
}

std::vector<LipschitzSample> axis_pairs(int dimension, std::span<const double> ys, std::span<const double> zs) {
    std::vector<LipschitzSample> out;
    const auto d = static_cast<std::size_t>(dimension);
    // Moves along y at every z on the diagonal, and along each z axis at every y.
    for (double y : ys)
        for (double z : zs) {
            std::vector<double> zv(d, z);
            for (std::size_t i = 0; i + 1 < ys.size(); ++i)
                if (ys[i] == y) out.push_back({0, 0, ys[i], zv, ys[i + 1], zv});
            for (std::size_t c = 0; c < d; ++c)
                for (std::size_t i = 0; i + 1 < zs.size(); ++i)
                    if (zs[i] == z) {
                        auto z2 = zv;
                        z2[c] = zs[i + 1];
                        out.push_back({0, 0, y, zv, y, z2});
                    }
        }
    return out;
}

TabulatedDriver::TabulatedDriver(std::vector<int> times, std::vector<double> ys, std::vector<std::vector<double>> zs,
                                 double mu)
    : times_(std::move(times)), ys_(std::move(ys)), zs_(std::move(zs)), mu_(mu) {
    validate();
    std::size_t total = 1;
    std::vector<std::size_t> dims{times_.size(), ys_.size()};
    for (const auto& z : zs_) dims.push_back(z.size());
    strides_.assign(dims.size(), 1);
    for (std::size_t a = dims.size(); a-- > 0;) {
        strides_[a] = total;
        total *= dims[a];
    }
    values_.assign(total, 0.0);
}

void TabulatedDriver::validate() const {
    auto increasing = [](const auto& axis) {
        for (std::size_t i = 0; i + 1 < axis.size(); ++i)
            if (!(axis[i] < axis[i + 1])) return false;
        return !axis.empty();
    };
    if (!increasing(times_) || !increasing(ys_)) fail(ErrorCode::DegenerateGrid, "grid axes must be strictly increasing");
    if (zs_.empty() || zs_.size() > 8) fail(ErrorCode::DegenerateGrid, "z grid needs between 1 and 8 axes");
    for (const auto& z : zs_)
        if (!increasing(z)) fail(ErrorCode::DegenerateGrid, "grid axes must be strictly increasing");
    if (!(mu_ >= 0.0)) fail(ErrorCode::BadParams, "declared mu must be >= 0");
}

std::size_t TabulatedDriver::index(std::size_t ti, std::size_t yi, std::span<const std::size_t> zi) const {
    std::size_t flat = ti * strides_[0] + yi * strides_[1];
    for (std::size_t c = 0; c < zi.size(); ++c) flat += zi[c] * strides_[c + 2];
    return flat;
}

namespace {

struct AxisWeight {
    std::size_t lo;
    std::size_t hi;
    double w;  // weight of hi
};

template <typename Axis>
AxisWeight locate(const Axis& axis, double x) {
    if (axis.size() == 1 || x <= static_cast<double>(axis.front())) return {0, 0, 0.0};
    if (x >= static_cast<double>(axis.back())) return {axis.size() - 1, axis.size() - 1, 0.0};
    const auto it = std::upper_bound(axis.begin(), axis.end(), x,
                                     [](double v, const auto& a) { return v < static_cast<double>(a); });
    const auto hi = static_cast<std::size_t>(it - axis.begin());
    const double a = static_cast<double>(axis[hi - 1]);
    const double b = static_cast<double>(axis[hi]);
    return {hi - 1, hi, (x - a) / (b - a)};
}

}  // namespace

double TabulatedDriver::value(int k, double y, std::span<const double> z) const {
    if (z.size() != zs_.size()) fail(ErrorCode::LatticeMismatch, "z has the wrong dimension for this table");
    std::array<AxisWeight, 10> ax{};
    const std::size_t n_axes = 2 + zs_.size();
    ax[0] = locate(times_, static_cast<double>(k));
    ax[1] = locate(ys_, y);
    for (std::size_t c = 0; c < zs_.size(); ++c) ax[c + 2] = locate(zs_[c], z[c]);
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << n_axes); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < n_axes; ++a) {
            const bool up = (corner >> a) & 1U;
            w *= up ? ax[a].w : 1.0 - ax[a].w;
            flat += (up ? ax[a].hi : ax[a].lo) * strides_[a];
        }
        if (w != 0.0) acc += w * values_[flat];
    }
    return acc;
}

double TabulatedDriver::grid_lipschitz() const {
    double best = 0.0;
    std::vector<std::size_t> dims{times_.size(), ys_.size()};
    for (const auto& z : zs_) dims.push_back(z.size());
    auto coord = [&](std::size_t a, std::size_t i) { return a == 1 ? ys_[i] : zs_[a - 2][i]; };
    for (std::size_t flat = 0; flat < values_.size(); ++flat)
        for (std::size_t a = 1; a < dims.size(); ++a) {
            const std::size_t i = (flat / strides_[a]) % dims[a];
            if (i + 1 >= dims[a]) continue;
            const double dv = std::abs(values_[flat + strides_[a]] - values_[flat]);
            best = std::max(best, dv / (coord(a, i + 1) - coord(a, i)));
        }
    return best;
}

double TabulatedDriver::origin_defect() const {
    const std::vector<double> z0(zs_.size(), 0.0);
    double worst = 0.0;
    for (int t : times_) worst = std::max(worst, std::abs(value(t, 0.0, z0)));
    return worst;
}

Driver TabulatedDriver::to_driver(std::string label) const {
    auto table = std::make_shared<const TabulatedDriver>(*this);
    const double defect = origin_defect();
    Driver g{[table](int k, std::size_t, double y, std::span<const double> z) { return table->value(k, y, z); },
             std::max(mu_, grid_lipschitz()), defect == 0.0, false, std::move(label)};
    return g;
}

nlohmann::json TabulatedDriver::to_json() const {
    return nlohmann::json{{"times", times_}, {"ys", ys_}, {"zs", zs_}, {"mu", mu_}, {"values", values_}};
}

TabulatedDriver TabulatedDriver::from_json(const nlohmann::json& j) {
    try {
        TabulatedDriver t(j.at("times").get<std::vector<int>>(), j.at("ys").get<std::vector<double>>(),
                          j.at("zs").get<std::vector<std::vector<double>>>(), j.value("mu", 0.0));
        auto v = j.at("values").get<std::vector<double>>();
        if (v.size() != t.values_.size()) fail(ErrorCode::DegenerateGrid, "value tensor does not match the axes");
        for (double x : v)
            if (!std::isfinite(x)) fail(ErrorCode::DegenerateGrid, "tabulated values must be finite");
        t.values_ = std::move(v);
        return t;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed tabulated driver: ") + e.what());
    }
}

TabulatedDriver TabulatedDriver::sample(const Driver& g, std::vector<int> times, std::vector<double> ys,
                                        std::vector<std::vector<double>> zs) {
    TabulatedDriver t(std::move(times), std::move(ys), std::move(zs), g.mu);
    std::vector<std::size_t> dims{t.times_.size(), t.ys_.size()};
    for (const auto& z : t.zs_) dims.push_back(z.size());
    std::vector<double> zv(t.zs_.size());
    for (std::size_t flat = 0; flat < t.values_.size(); ++flat) {
        const std::size_t ti = (flat / t.strides_[0]) % dims[0];
        const std::size_t yi = (flat / t.strides_[1]) % dims[1];
        for (std::size_t c = 0; c < zv.size(); ++c) zv[c] = t.zs_[c][(flat / t.strides_[c + 2]) % dims[c + 2]];
        t.values_[flat] = g(t.times_[ti], 0, t.ys_[yi], zv);
    }
    return t;
}

}  // namespace geval
