#pragma once

#include "moodcast/arima.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/optimize.hpp"
#include "moodcast/series.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace moodcast {

namespace detail {

struct EsParams {
    double alpha = 0.5;
    double beta = 0.0;
    double phi = 1.0;
};

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// Index of the first observation that gets a one-step error.
inline std::size_t es_first_error(EsVariant v) { return v == EsVariant::simple ? 1 : 2; }

/// The differencing an ES variant implies for its one-step errors.
inline int es_implied_differencing(EsVariant v) { return v == EsVariant::holt ? 2 : 1; }

/// Error-correction recursions. Level starts at y_0 (simple) or y_1 with
/// trend y_1 - y_0 (trend models). Returns one-step errors from
/// es_first_error(v) onward and leaves `next` holding the forecast of
/// y_{n} after the last observation.
inline std::vector<double> es_run(EsVariant v, const EsParams& p, std::span<const double> y, double& next) {
    std::vector<double> errs;
    if (v == EsVariant::simple) {
        double level = y[0];
        for (std::size_t t = 1; t < y.size(); ++t) {
            const double e = y[t] - level;
            errs.push_back(e);
            level += p.alpha * e;
        }
        next = level;
        return errs;
    }
    const double damp = v == EsVariant::damped ? p.phi : 1.0;
    double level = y[1];
    double trend = y[1] - y[0];
    for (std::size_t t = 2; t < y.size(); ++t) {
        const double fc = level + damp * trend;
        const double e = y[t] - fc;
        errs.push_back(e);
        level = fc + p.alpha * e;
        trend = damp * trend + p.alpha * p.beta * e;
    }
    next = level + damp * trend;
    return errs;
}

inline EsParams es_decode(EsVariant v, std::span<const double> u) {
    EsParams p;
    p.alpha = logistic(u[0]);
    if (v != EsVariant::simple) p.beta = logistic(u[1]);
    if (v == EsVariant::damped) p.phi = logistic(u[2]);
    return p;
}

}  // namespace detail

/// Additive exponential smoothing; parameters in (0, 1) minimise the
/// in-sample one-step squared error.
[[nodiscard]] inline FittedModel fit_es(const WeeklySeries& y, EsVariant variant, const NelderMeadOptions& opt = {}) {
    if (y.size() < 10) throw InsufficientDataError("exponential smoothing needs at least 10 observations");
    if (y.has_missing()) throw DataError("series '" + y.name() + "' has missing values");
    const auto values = y.values();
    const std::size_t dim = variant == EsVariant::simple ? 1 : variant == EsVariant::holt ? 2 : 3;
    auto sse = [&](const std::vector<double>& u) {
        double next = 0.0;
        double s = 0.0;
        for (double e : detail::es_run(variant, detail::es_decode(variant, u), values, next)) s += e * e;
        return s;
    };
    // a few fixed starts spread over the unit cube
    const std::vector<double> seeds{0.0, -2.0, 2.0};
    NelderMeadResult best;
    for (double s0 : seeds) {
        auto r = nelder_mead(sse, std::vector<double>(dim, s0), opt);
        if (r.value < best.value) best = std::move(r);
    }
    const auto params = detail::es_decode(variant, best.x);

    FittedModel m;
    m.spec = variant;
    m.alpha = params.alpha;
    if (variant != EsVariant::simple) m.beta = params.beta;
    if (variant == EsVariant::damped) m.phi = params.phi;
    double next = 0.0;
    m.residuals = detail::es_run(variant, params, values, next);
    m.residual_start = detail::es_first_error(variant);
    m.diff_poly = detail::differencing_poly(detail::es_implied_differencing(variant), 0, 1);
    m.observations = y.size();
    m.css = 0.0;
    for (double e : m.residuals) m.css += e * e;
    m.sigma2 = m.css / static_cast<double>(m.residuals.size() - dim);
    m.converged = best.converged || best.value == 0.0;
    return m;
}

/// One-step forecast of observation history.size() from fixed parameters.
[[nodiscard]] inline double forecast_next(const FittedModel& m, std::span<const double> history,
                                          const std::vector<std::span<const double>>& exog = {}) {
    if (m.is_arima()) return detail::arima_next(m, history, exog);
    const auto v = std::get<EsVariant>(m.spec);
    if (history.size() < detail::es_first_error(v)) throw InsufficientDataError("history too short for a forecast");
    for (double x : history) {
        if (is_missing(x)) throw DataError("missing value in forecast history");
    }
    detail::EsParams p{m.alpha, std::isnan(m.beta) ? 0.0 : m.beta, std::isnan(m.phi) ? 1.0 : m.phi};
    double next = 0.0;
    if (v == EsVariant::simple && history.size() == 1) return history[0];
    (void)detail::es_run(v, p, history, next);
    return next;
}

}  // namespace moodcast
