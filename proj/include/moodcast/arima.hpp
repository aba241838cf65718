#pragma once

#include "moodcast/errors.hpp"
#include "moodcast/optimize.hpp"
#include "moodcast/series.hpp"
#include "moodcast/special.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace moodcast {

struct SeasonalOrder {
    int P = 0;
    int D = 0;
    int Q = 0;
    int period = 0;

    friend bool operator==(const SeasonalOrder&, const SeasonalOrder&) = default;
};

struct ArimaSpec {
    int p = 0;
    int d = 0;
    int q = 0;
    std::optional<SeasonalOrder> seasonal;
    bool include_intercept = false;

    /// Throws DomainError for negative orders, a period below 2, or a
    /// degenerate spec. The pure mean model (all zero, intercept on) is allowed.
    void validate() const {
        if (p < 0 || d < 0 || q < 0) throw DomainError("ARIMA orders must be non-negative");
        int sp = 0;
        int sd = 0;
        if (seasonal) {
            if (seasonal->P < 0 || seasonal->D < 0 || seasonal->Q < 0) {
                throw DomainError("seasonal ARIMA orders must be non-negative");
            }
            if (seasonal->period < 2) throw DomainError("seasonal period must be at least 2");
            sp = seasonal->P + seasonal->Q;
            sd = seasonal->D;
        }
        if (p + q + sp == 0 && d + sd == 0 && !include_intercept) {
            throw DomainError("degenerate ARIMA spec: no ARMA terms, no differencing and no intercept");
        }
    }

    [[nodiscard]] int arma_terms() const noexcept {
        return p + q + (seasonal ? seasonal->P + seasonal->Q : 0);
    }

    [[nodiscard]] std::string to_string() const {
        std::string s = "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
        if (seasonal) {
            s += "(" + std::to_string(seasonal->P) + "," + std::to_string(seasonal->D) + "," +
                 std::to_string(seasonal->Q) + ")[" + std::to_string(seasonal->period) + "]";
        }
        if (include_intercept) s += "+c";
        return s;
    }

    friend bool operator==(const ArimaSpec&, const ArimaSpec&) = default;
};

enum class EsVariant { simple, holt, damped };

[[nodiscard]] inline std::string to_string(EsVariant v) {
    switch (v) {
        case EsVariant::simple: return "ES(simple)";
        case EsVariant::holt: return "ES(holt-additive)";
        case EsVariant::damped: return "ES(damped)";
    }
    return "ES";
}

using ModelSpec = std::variant<ArimaSpec, EsVariant>;

/// A fitted ARIMA (regression with ARIMA errors) or exponential-smoothing
/// model. AR coefficients follow y_t = sum phi_i y_{t-i} + ..., MA
/// coefficients e_t + sum theta_i e_{t-i}.
struct FittedModel {
    ModelSpec spec;

    std::vector<double> ar;
    std::vector<double> ma;
    std::vector<double> seasonal_ar;
    std::vector<double> seasonal_ma;
    double intercept = 0.0;  ///< mean of the differenced, regression-adjusted series
    std::vector<std::string> exog_names;
    std::vector<double> exog;
    std::vector<double> exog_se;
    std::vector<double> exog_p;  ///< two-sided t-test p-values, NaN when unavailable

    double alpha = kMissing;  ///< ES level smoothing
    double beta = kMissing;   ///< ES trend smoothing
    double phi = kMissing;    ///< ES damping

    double sigma2 = 0.0;
    double css = 0.0;
    bool converged = false;
    double min_ar_root = std::numeric_limits<double>::infinity();
    double min_ma_root = std::numeric_limits<double>::infinity();

    /// Coefficients of the differencing operator, c_0 = 1.
    std::vector<double> diff_poly{1.0};
    /// One-step residuals; residuals[i] belongs to observation residual_start + i.
    std::vector<double> residuals;
    std::size_t residual_start = 0;
    std::size_t observations = 0;

    [[nodiscard]] bool is_arima() const noexcept { return std::holds_alternative<ArimaSpec>(spec); }

    [[nodiscard]] std::string describe() const {
        return is_arima() ? std::get<ArimaSpec>(spec).to_string() : to_string(std::get<EsVariant>(spec));
    }

    [[nodiscard]] std::size_t parameter_count() const {
        if (is_arima()) {
            const auto& s = std::get<ArimaSpec>(spec);
            return static_cast<std::size_t>(s.arma_terms()) + (s.include_intercept ? 1 : 0) + exog.size();
        }
        switch (std::get<EsVariant>(spec)) {
            case EsVariant::simple: return 1;
            case EsVariant::holt: return 2;
            case EsVariant::damped: return 3;
        }
        return 0;
    }
};

namespace detail {

inline std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

/// (1 - B)^d (1 - B^s)^D
inline std::vector<double> differencing_poly(int d, int D, int period) {
    std::vector<double> poly{1.0};
    for (int i = 0; i < d; ++i) poly = poly_mul(poly, {1.0, -1.0});
    for (int i = 0; i < D; ++i) {
        std::vector<double> s(static_cast<std::size_t>(period) + 1, 0.0);
        s.front() = 1.0;
        s.back() = -1.0;
        poly = poly_mul(poly, s);
    }
    return poly;
}

/// w_t = sum_j c_j x_{t-j} for t >= deg; entries before that are NaN.
inline std::vector<double> apply_poly(std::span<const double> x, const std::vector<double>& c) {
    const std::size_t k = c.size() - 1;
    std::vector<double> out(x.size(), kMissing);
    for (std::size_t t = k; t < x.size(); ++t) {
        double v = 0.0;
        for (std::size_t j = 0; j <= k; ++j) v += c[j] * x[t - j];
        out[t] = v;
    }
    return out;
}

/// Lag polynomial 1 + sign * sum coef_i B^{i * step}.
inline std::vector<double> lag_poly(const std::vector<double>& coef, std::size_t step, double sign) {
    std::vector<double> out(coef.size() * step + 1, 0.0);
    out[0] = 1.0;
    for (std::size_t i = 0; i < coef.size(); ++i) out[(i + 1) * step] = sign * coef[i];
    return out;
}

/// Partial autocorrelations -> AR coefficients of a stable polynomial.
inline std::vector<double> durbin_levinson(const std::vector<double>& pacf) {
    std::vector<double> phi;
    for (std::size_t m = 0; m < pacf.size(); ++m) {
        std::vector<double> next(m + 1);
        for (std::size_t j = 0; j < m; ++j) next[j] = phi[j] - pacf[m] * phi[m - 1 - j];
        next[m] = pacf[m];
        phi = std::move(next);
    }
    return phi;
}

/// Roots of 1 - sum phi_j z^j are pushed to modulus > kRootMargin by the
/// substitution z -> z / kRootMargin.
inline constexpr double kRootMargin = 1.0 + 1e-5;

/// Unconstrained reals -> AR coefficients with all roots outside the circle
/// of radius kRootMargin.
inline std::vector<double> to_stable(std::span<const double> u) {
    std::vector<double> pacf(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) pacf[i] = std::tanh(u[i]);
    auto phi = durbin_levinson(pacf);
    double scale = 1.0;
    for (auto& v : phi) {
        scale /= kRootMargin;
        v *= scale;
    }
    return phi;
}

/// Smallest root modulus of 1 + sum c_j z^j (c has no constant term).
inline double min_root_modulus(const std::vector<double>& c) {
    std::size_t deg = c.size();
    while (deg > 0 && c[deg - 1] == 0.0) --deg;
    if (deg == 0) return std::numeric_limits<double>::infinity();
    // Roots of z^deg P(1/z) = z^deg + c_1 z^{deg-1} + ... + c_deg are the
    // reciprocals of the roots of P.
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
    for (std::size_t j = 0; j < deg; ++j) comp(0, static_cast<Eigen::Index>(j)) = -c[j];
    for (std::size_t i = 1; i < deg; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    const Eigen::VectorXcd ev = comp.eigenvalues();
    double largest = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) largest = std::max(largest, std::abs(ev(i)));
    return largest == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / largest;
}

/// Full ARMA lag structure (seasonal factors expanded multiplicatively):
/// a_j for z_t = sum a_j z_{t-j} + e_t + sum b_j e_{t-j}.
struct ArmaPolys {
    std::vector<double> a;
    std::vector<double> b;
};

inline ArmaPolys expand(const std::vector<double>& ar, const std::vector<double>& sar, const std::vector<double>& ma,
                        const std::vector<double>& sma, std::size_t period) {
    auto arp = poly_mul(lag_poly(ar, 1, -1.0), lag_poly(sar, std::max<std::size_t>(period, 1), -1.0));
    auto map = poly_mul(lag_poly(ma, 1, 1.0), lag_poly(sma, std::max<std::size_t>(period, 1), 1.0));
    ArmaPolys out;
    for (std::size_t j = 1; j < arp.size(); ++j) out.a.push_back(-arp[j]);
    for (std::size_t j = 1; j < map.size(); ++j) out.b.push_back(map[j]);
    while (!out.a.empty() && out.a.back() == 0.0) out.a.pop_back();
    while (!out.b.empty() && out.b.back() == 0.0) out.b.pop_back();
    return out;
}

/// Conditional residuals with zero pre-sample errors:
/// e_t = z_t - sum a_j z_{t-j} - sum b_j e_{t-j}, t >= a.size(); zero before.
inline void arma_filter(std::span<const double> z, const ArmaPolys& poly, std::vector<double>& e) {
    const std::size_t start = poly.a.size();
    e.assign(z.size(), 0.0);
    for (std::size_t t = start; t < z.size(); ++t) {
        double v = z[t];
        for (std::size_t j = 0; j < poly.a.size(); ++j) v -= poly.a[j] * z[t - j - 1];
        for (std::size_t j = 0; j < poly.b.size() && j < t - start; ++j) v -= poly.b[j] * e[t - j - 1];
        e[t] = v;
    }
}

inline double plain_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Differenced target and regressors for one fit, indexed from the first
/// fully differenced observation.
struct ArimaData {
    std::vector<double> w;                ///< differenced target
    std::vector<std::vector<double>> z;   ///< regressor columns (intercept first when present)
    std::vector<std::string> z_names;
    std::size_t lost = 0;                 ///< observations consumed by differencing
};

struct ArmaLayout {
    std::size_t p = 0, sp = 0, q = 0, sq = 0, period = 1;
    [[nodiscard]] std::size_t size() const { return p + sp + q + sq; }
};

struct ArmaCoefs {
    std::vector<double> ar, sar, ma, sma;
};

inline ArmaCoefs decode(const ArmaLayout& L, std::span<const double> u) {
    ArmaCoefs c;
    std::size_t o = 0;
    c.ar = to_stable(u.subspan(o, L.p));
    o += L.p;
    c.sar = to_stable(u.subspan(o, L.sp));
    o += L.sp;
    c.ma = to_stable(u.subspan(o, L.q));
    for (auto& v : c.ma) v = -v;
    o += L.q;
    c.sma = to_stable(u.subspan(o, L.sq));
    for (auto& v : c.sma) v = -v;
    return c;
}

/// Filters the target and every regressor, then profiles the regression
/// coefficients out by least squares on rows t >= start.
struct ProfiledFit {
    double css = std::numeric_limits<double>::infinity();
    Eigen::VectorXd beta;
    std::vector<double> residuals;  ///< rows start..end
    Eigen::MatrixXd filtered_z;     ///< rows start..end
    std::size_t start = 0;
};

inline ProfiledFit profile(const ArimaData& data, const ArmaPolys& poly) {
    ProfiledFit out;
    out.start = poly.a.size();
    std::vector<double> ew;
    arma_filter(data.w, poly, ew);
    const std::size_t m = data.w.size() - out.start;
    const auto k = static_cast<Eigen::Index>(data.z.size());
    Eigen::VectorXd yv(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) yv(static_cast<Eigen::Index>(i)) = ew[out.start + i];
    out.filtered_z.resize(static_cast<Eigen::Index>(m), k);
    std::vector<double> ez;
    for (Eigen::Index c = 0; c < k; ++c) {
        arma_filter(data.z[static_cast<std::size_t>(c)], poly, ez);
        for (std::size_t i = 0; i < m; ++i) out.filtered_z(static_cast<Eigen::Index>(i), c) = ez[out.start + i];
    }
    Eigen::VectorXd r = yv;
    if (k > 0) {
        out.beta = out.filtered_z.colPivHouseholderQr().solve(yv);
        r -= out.filtered_z * out.beta;
    } else {
        out.beta.resize(0);
    }
    out.css = r.squaredNorm();
    out.residuals.assign(r.data(), r.data() + r.size());
    return out;
}

}  // namespace detail

struct ArimaFitOptions {
    std::uint64_t seed = 1;
    std::size_t starts = 5;
    double start_sd = 0.5;
    NelderMeadOptions optimizer{};
};

/// Regression with ARIMA errors, estimated by conditional sum of squares.
/// `exog` must be aligned with `y`; neither may contain missing values.
[[nodiscard]] inline FittedModel fit_arima(const WeeklySeries& y, const ArimaSpec& spec,
                                           const std::vector<WeeklySeries>& exog = {},
                                           const ArimaFitOptions& opt = {}) {
    spec.validate();
    for (const auto& x : exog) {
        if (x.start() != y.start() || x.size() != y.size()) {
            throw AlignmentError("exogenous series '" + x.name() + "' is not aligned with '" + y.name() + "'");
        }
    }
    for (const auto* s : [&] {
             std::vector<const WeeklySeries*> all{&y};
             for (const auto& x : exog) all.push_back(&x);
             return all;
         }()) {
        for (std::size_t i = 0; i < s->size(); ++i) {
            if (is_missing((*s)[i])) {
                throw DataError("series '" + s->name() + "' has a missing value in week " + s->week(i).to_string());
            }
        }
    }

    const int period = spec.seasonal ? spec.seasonal->period : 1;
    const auto diff = detail::differencing_poly(spec.d, spec.seasonal ? spec.seasonal->D : 0, period);
    detail::ArimaData data;
    data.lost = diff.size() - 1;
    if (y.size() <= data.lost) throw InsufficientDataError("series too short to difference");
    {
        auto w = detail::apply_poly(y.values(), diff);
        data.w.assign(w.begin() + static_cast<long>(data.lost), w.end());
    }
    if (spec.include_intercept) {
        data.z.emplace_back(data.w.size(), 1.0);
        data.z_names.emplace_back("intercept");
    }
    for (const auto& x : exog) {
        auto u = detail::apply_poly(x.values(), diff);
        data.z.emplace_back(u.begin() + static_cast<long>(data.lost), u.end());
        data.z_names.push_back(x.name());
    }

    detail::ArmaLayout layout;
    layout.p = static_cast<std::size_t>(spec.p);
    layout.q = static_cast<std::size_t>(spec.q);
    if (spec.seasonal) {
        layout.sp = static_cast<std::size_t>(spec.seasonal->P);
        layout.sq = static_cast<std::size_t>(spec.seasonal->Q);
        layout.period = static_cast<std::size_t>(period);
    }
    const std::size_t nparams = layout.size() + data.z.size();
    const std::size_t p_full = layout.p + layout.sp * layout.period;
    if (data.w.size() <= nparams + 5 || data.w.size() <= p_full + nparams) {
        throw InsufficientDataError("'" + y.name() + "': " + std::to_string(data.w.size()) +
                                    " differenced observations are too few for " + spec.to_string() + " with " +
                                    std::to_string(nparams) + " parameters");
    }
    if (!data.z.empty()) {
        // Rank check on the differenced design; names the offending columns.
        Eigen::MatrixXd z(static_cast<Eigen::Index>(data.w.size()), static_cast<Eigen::Index>(data.z.size()));
        for (std::size_t c = 0; c < data.z.size(); ++c) {
            for (std::size_t i = 0; i < data.w.size(); ++i) {
                z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data.z[c][i];
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        qr.setThreshold(1e-10);
        if (qr.rank() < z.cols()) {
            std::string which;
            for (Eigen::Index i = qr.rank(); i < z.cols(); ++i) {
                which += (which.empty() ? "" : ", ") + data.z_names[static_cast<std::size_t>(qr.colsPermutation().indices()(i))];
            }
            throw RankDeficiencyError("regressors are collinear after differencing: " + which);
        }
    }

    FittedModel m;
    m.spec = spec;
    m.diff_poly = diff;
    m.observations = y.size();
    for (const auto& x : exog) m.exog_names.push_back(x.name());

    detail::ArmaCoefs coefs;
    detail::ProfiledFit best;
    if (layout.size() == 0 && exog.empty() && spec.include_intercept) {
        // Mean model: the intercept is the plain sample mean of the
        // differenced series, matching the stationary R-squared baseline.
        const double mu = detail::plain_mean(data.w);
        best.start = 0;
        best.beta = Eigen::VectorXd::Constant(1, mu);
        best.residuals.resize(data.w.size());
        best.css = 0.0;
        for (std::size_t i = 0; i < data.w.size(); ++i) {
            best.residuals[i] = data.w[i] - mu;
            best.css += best.residuals[i] * best.residuals[i];
        }
        best.filtered_z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(data.w.size()), 1);
        m.converged = true;
    } else if (layout.size() == 0) {
        best = detail::profile(data, detail::ArmaPolys{});
        m.converged = true;
    } else {
        auto objective = [&](const std::vector<double>& u) {
            const auto c = detail::decode(layout, u);
            return detail::profile(data, detail::expand(c.ar, c.sar, c.ma, c.sma, layout.period)).css;
        };
        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> normal(0.0, opt.start_sd);
        NelderMeadResult winner;
        for (std::size_t s = 0; s < std::max<std::size_t>(opt.starts, 1); ++s) {
            std::vector<double> x0(layout.size(), 0.0);
            if (s > 0) {
                for (auto& v : x0) v = normal(rng);
            }
            auto r = nelder_mead(objective, x0, opt.optimizer);
            if (r.value < winner.value) winner = std::move(r);
        }
        // Restart from the best point with a fresh simplex to confirm convergence.
        auto polish_opt = opt.optimizer;
        polish_opt.initial_step = 0.1;
        auto polished = nelder_mead(objective, winner.x, polish_opt);
        if (polished.value <= winner.value) {
            winner.x = polished.x;
            winner.value = polished.value;
        }
        m.converged = polished.converged;
        coefs = detail::decode(layout, winner.x);
        best = detail::profile(data, detail::expand(coefs.ar, coefs.sar, coefs.ma, coefs.sma, layout.period));
    }

    m.ar = coefs.ar;
    m.seasonal_ar = coefs.sar;
    m.ma = coefs.ma;
    m.seasonal_ma = coefs.sma;
    std::size_t bi = 0;
    if (spec.include_intercept) m.intercept = best.beta(static_cast<Eigen::Index>(bi++));
    for (std::size_t i = 0; i < exog.size(); ++i) m.exog.push_back(best.beta(static_cast<Eigen::Index>(bi++)));
    m.css = best.css;
    m.residuals = best.residuals;
    m.residual_start = data.lost + best.start;
    const std::size_t rows = best.residuals.size();
    const double dof = static_cast<double>(rows) - static_cast<double>(nparams);
    m.sigma2 = m.css / dof;

    const auto full = detail::expand(m.ar, m.seasonal_ar, m.ma, m.seasonal_ma, layout.period);
    {
        std::vector<double> neg_a(full.a.size());
        for (std::size_t j = 0; j < full.a.size(); ++j) neg_a[j] = -full.a[j];
        m.min_ar_root = detail::min_root_modulus(neg_a);
        m.min_ma_root = detail::min_root_modulus(full.b);
        if (m.min_ar_root <= 1.0 + 1e-6 || m.min_ma_root <= 1.0 + 1e-6) m.converged = false;
    }

    // Standard errors from the Gauss-Newton curvature of the CSS surface.
    m.exog_se.assign(exog.size(), kMissing);
    m.exog_p.assign(exog.size(), kMissing);
    if (!exog.empty() && m.sigma2 > 0.0) {
        const auto arma_n = layout.size();
        const auto cols = static_cast<Eigen::Index>(arma_n + data.z.size());
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(rows), cols);
        std::vector<double> natural;
        for (auto* v : {&m.ar, &m.seasonal_ar, &m.ma, &m.seasonal_ma}) natural.insert(natural.end(), v->begin(), v->end());
        auto residuals_at = [&](const std::vector<double>& nat) {
            detail::ArmaCoefs c;
            std::size_t o = 0;
            auto take = [&](std::size_t k) {
                std::vector<double> v(nat.begin() + static_cast<long>(o), nat.begin() + static_cast<long>(o + k));
                o += k;
                return v;
            };
            c.ar = take(layout.p);
            c.sar = take(layout.sp);
            c.ma = take(layout.q);
            c.sma = take(layout.sq);
            const auto poly = detail::expand(c.ar, c.sar, c.ma, c.sma, layout.period);
            std::vector<double> ew, ez;
            detail::arma_filter(data.w, poly, ew);
            Eigen::VectorXd r(static_cast<Eigen::Index>(rows));
            for (std::size_t i = 0; i < rows; ++i) r(static_cast<Eigen::Index>(i)) = ew[best.start + i];
            for (std::size_t c2 = 0; c2 < data.z.size(); ++c2) {
                detail::arma_filter(data.z[c2], poly, ez);
                for (std::size_t i = 0; i < rows; ++i) {
                    r(static_cast<Eigen::Index>(i)) -= best.beta(static_cast<Eigen::Index>(c2)) * ez[best.start + i];
                }
            }
            return r;
        };
        for (std::size_t k = 0; k < arma_n; ++k) {
            const double h = 1e-6 * std::max(1.0, std::fabs(natural[k]));
            auto up = natural;
            auto dn = natural;
            up[k] += h;
            dn[k] -= h;
            jac.col(static_cast<Eigen::Index>(k)) = (residuals_at(up) - residuals_at(dn)) / (2.0 * h);
        }
        jac.rightCols(static_cast<Eigen::Index>(data.z.size())) = -best.filtered_z;
        const Eigen::MatrixXd info = jac.transpose() * jac;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
        if (lu.isInvertible() && dof > 0) {
            const Eigen::MatrixXd cov = m.sigma2 * lu.inverse();
            const std::size_t off = arma_n + (spec.include_intercept ? 1 : 0);
            for (std::size_t i = 0; i < exog.size(); ++i) {
                const auto idx = static_cast<Eigen::Index>(off + i);
                const double var = cov(idx, idx);
                if (var > 0.0) {
                    m.exog_se[i] = std::sqrt(var);
                    m.exog_p[i] = special::t_two_sided(m.exog[i] / m.exog_se[i], dof);
                }
            }
        }
    }
    return m;
}

namespace detail {

/// ARIMA one-step forecast of observation t = history.size().
inline double arima_next(const FittedModel& m, std::span<const double> history,
                         const std::vector<std::span<const double>>& exog) {
    const auto& spec = std::get<ArimaSpec>(m.spec);
    const std::size_t t = history.size();
    const std::size_t lost = m.diff_poly.size() - 1;
    const std::size_t period = spec.seasonal ? static_cast<std::size_t>(spec.seasonal->period) : 1;
    const auto poly = expand(m.ar, m.seasonal_ar, m.ma, m.seasonal_ma, period);
    if (t < lost + poly.a.size() + 1) throw InsufficientDataError("history too short for a one-step forecast");
    if (exog.size() != m.exog.size()) throw DomainError("forecast needs " + std::to_string(m.exog.size()) + " exogenous series");
    for (const auto& x : exog) {
        if (x.size() <= t) throw InsufficientDataError("exogenous series ends before the forecast week");
    }
    for (double v : history) {
        if (is_missing(v)) throw DataError("missing value in forecast history");
    }

    // z_j = w_j - mu - u_j'gamma for j in [lost, t], j = t only for the regression part.
    auto regression = [&](std::size_t j) {
        double r = m.intercept;
        for (std::size_t k = 0; k < exog.size(); ++k) {
            double u = 0.0;
            for (std::size_t i = 0; i < m.diff_poly.size(); ++i) u += m.diff_poly[i] * exog[k][j - i];
            r += m.exog[k] * u;
        }
        return r;
    };
    std::vector<double> z(t - lost);
    for (std::size_t j = lost; j < t; ++j) {
        double w = 0.0;
        for (std::size_t i = 0; i < m.diff_poly.size(); ++i) w += m.diff_poly[i] * history[j - i];
        z[j - lost] = w - regression(j);
    }
    std::vector<double> e;
    arma_filter(z, poly, e);
    const std::size_t n = z.size();
    double zhat = 0.0;
    for (std::size_t j = 0; j < poly.a.size(); ++j) zhat += poly.a[j] * z[n - 1 - j];
    for (std::size_t j = 0; j < poly.b.size() && j < n; ++j) zhat += poly.b[j] * e[n - 1 - j];
    double yhat = regression(t) + zhat;
    for (std::size_t i = 1; i < m.diff_poly.size(); ++i) yhat -= m.diff_poly[i] * history[t - i];
    return yhat;
}

}  // namespace detail

}  // namespace moodcast
