#pragma once

#include "moodcast/arima.hpp"
#include "moodcast/csv.hpp"
#include "moodcast/econometrics.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/series.hpp"
#include "moodcast/smoothing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace moodcast {

// ---------------------------------------------------------------------------
// Evaluation

/// 1 - SSE_model / SSE_baseline.
[[nodiscard]] inline double stationary_r2(double sse_model, double sse_baseline) {
    if (!(sse_baseline > 0.0)) throw DomainError("stationary R-squared undefined: constant differenced series");
    return 1.0 - sse_model / sse_baseline;
}

/// Compares the model's one-step residuals with a baseline that predicts
/// every differenced value by the mean of the whole differenced series, both
/// summed over the weeks the model has residuals for.
[[nodiscard]] inline double stationary_r2(const FittedModel& model, const WeeklySeries& y) {
    if (y.size() != model.observations) {
        throw AlignmentError("stationary R-squared: model was fitted on " + std::to_string(model.observations) +
                             " weeks, series has " + std::to_string(y.size()));
    }
    const std::size_t lost = model.diff_poly.size() - 1;
    const auto w = detail::apply_poly(y.values(), model.diff_poly);
    const double mean = detail::plain_mean(std::span<const double>(w).subspan(lost));
    double sse_b = 0.0;
    double sse_m = 0.0;
    for (std::size_t i = 0; i < model.residuals.size(); ++i) {
        const double dev = w[model.residual_start + i] - mean;
        sse_b += dev * dev;
        sse_m += model.residuals[i] * model.residuals[i];
    }
    return stationary_r2(sse_m, sse_b);
}

/// Mean absolute percentage error, in percent.
[[nodiscard]] inline double mape(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size()) throw AlignmentError("MAPE needs equally long actual and forecast");
    if (actual.empty()) throw InsufficientDataError("MAPE of an empty window");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (is_missing(actual[i]) || is_missing(forecast[i])) throw DataError("MAPE over a missing value");
        if (actual[i] == 0.0) throw DomainError("MAPE undefined: actual value is zero at position " + std::to_string(i));
        sum += std::fabs((actual[i] - forecast[i]) / actual[i]);
    }
    return sum / static_cast<double>(actual.size()) * 100.0;
}

[[nodiscard]] inline double mape(const WeeklySeries& actual, const WeeklySeries& forecast) {
    detail::require_aligned(actual, forecast);
    return mape(actual.values(), forecast.values());
}

/// Percentage of steps t >= 1 where (forecast_t - actual_{t-1}) and
/// (actual_t - actual_{t-1}) have the same strict sign. forecast_0 is unused;
/// a zero move on either side is a miss.
[[nodiscard]] inline double direction_accuracy(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size()) throw AlignmentError("direction accuracy needs equally long series");
    if (actual.size() < 2) throw InsufficientDataError("direction accuracy needs at least two weeks");
    std::size_t hits = 0;
    for (std::size_t t = 1; t < actual.size(); ++t) {
        if (is_missing(actual[t]) || is_missing(actual[t - 1]) || is_missing(forecast[t])) {
            throw DataError("direction accuracy over a missing value");
        }
        if ((forecast[t] - actual[t - 1]) * (actual[t] - actual[t - 1]) > 0.0) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(actual.size() - 1);
}

[[nodiscard]] inline double direction_accuracy(const WeeklySeries& actual, const WeeklySeries& forecast) {
    detail::require_aligned(actual, forecast);
    return direction_accuracy(actual.values(), forecast.values());
}

// ---------------------------------------------------------------------------
// Differencing choice

/// KPSS level-stationarity statistic with a Bartlett-window long-run
/// variance, lag truncation floor(4 (n/100)^{1/4}).
[[nodiscard]] inline double kpss_statistic(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw InsufficientDataError("KPSS needs at least 4 observations");
    const double mean = detail::plain_mean(x);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = x[i] - mean;
    double partial = 0.0;
    double eta = 0.0;
    for (double v : e) {
        partial += v;
        eta += partial * partial;
    }
    const auto lags = static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    auto gamma = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += e[t] * e[t - k];
        return s / static_cast<double>(n);
    };
    double lrv = gamma(0);
    for (std::size_t k = 1; k <= lags && k < n; ++k) {
        lrv += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(lags + 1)) * gamma(k);
    }
    if (!(lrv > 0.0)) return 0.0;  // constant series are trivially level-stationary
    return eta / (static_cast<double>(n) * static_cast<double>(n) * lrv);
}

/// 5% critical value of the KPSS level test.
inline constexpr double kKpssCritical5 = 0.463;

/// Smallest d in [0, max_d] whose d-th difference passes the KPSS test.
[[nodiscard]] inline int choose_differencing(std::span<const double> y, int max_d = 2) {
    std::vector<double> w(y.begin(), y.end());
    for (int d = 0; d <= max_d; ++d) {
        if (w.size() < 10) return d;
        if (kpss_statistic(w) <= kKpssCritical5) return d;
        if (d == max_d) break;
        std::vector<double> next(w.size() - 1);
        for (std::size_t i = 1; i < w.size(); ++i) next[i - 1] = w[i] - w[i - 1];
        w = std::move(next);
    }
    return max_d;
}

// ---------------------------------------------------------------------------
// Model mining

struct MiningOptions {
    int max_p = 3;
    int max_q = 3;
    int max_d = 2;
    std::optional<int> force_d;  ///< skip the KPSS choice
    bool include_es = true;      ///< only used when there are no predictors
    bool seasonal = false;       ///< adds (P,0,Q) with P,Q in {0,1}
    int period = 52;
    std::size_t threads = 1;
    /// Fits with an AR or MA root closer to the unit circle than this are
    /// not selected: in-sample they can look excellent (a near-cancelling MA
    /// root absorbs level shifts), but their one-step forecasts accumulate
    /// errors and drift.
    double min_root = 1.01;
    ArimaFitOptions fit{};
};

struct MiningCandidate {
    ModelSpec spec;
    std::size_t parameters = 0;
    bool converged = false;
    bool near_unit_root = false;  ///< excluded by MiningOptions::min_root
    double stationary_r2 = kMissing;
    std::string error;  ///< empty when the fit succeeded
};

struct MinedModel {
    FittedModel model;
    double stationary_r2 = kMissing;
    int d = 0;
    std::vector<MiningCandidate> candidates;  ///< grid order
    std::size_t best = 0;                     ///< index into candidates
};

namespace detail {

inline std::string describe(const ModelSpec& s) {
    return std::holds_alternative<ArimaSpec>(s) ? std::get<ArimaSpec>(s).to_string() : to_string(std::get<EsVariant>(s));
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Grid search over ARIMA(p,d,q), p,q in [0, 3], at the KPSS-chosen d, plus
/// exponential smoothing variants whose implied differencing matches d
/// (only without predictors). Candidates rank by training stationary R^2,
/// then fewer parameters, then grid order. Non-converged fits and fits with
/// roots inside `min_root` are excluded.
[[nodiscard]] inline MinedModel mine_models(const WeeklySeries& y, const std::vector<WeeklySeries>& exog = {},
                                            const MiningOptions& opt = {}) {
    if (y.has_missing()) throw DataError("series '" + y.name() + "' has missing values");
    MinedModel out;
    out.d = opt.force_d ? *opt.force_d : choose_differencing(y.values(), opt.max_d);

    std::vector<ModelSpec> grid;
    const bool intercept = out.d <= 1;
    const int smax = opt.seasonal ? 1 : 0;
    for (int p = 0; p <= opt.max_p; ++p) {
        for (int q = 0; q <= opt.max_q; ++q) {
            for (int sp = 0; sp <= smax; ++sp) {
                for (int sq = 0; sq <= smax; ++sq) {
                    ArimaSpec s{p, out.d, q, std::nullopt, intercept};
                    if (sp + sq > 0) s.seasonal = SeasonalOrder{sp, 0, sq, opt.period};
                    try {
                        s.validate();
                    } catch (const DomainError&) {
                        continue;
                    }
                    grid.emplace_back(s);
                }
            }
        }
    }
    if (opt.include_es && exog.empty()) {
        for (auto v : {EsVariant::simple, EsVariant::holt, EsVariant::damped}) {
            if (detail::es_implied_differencing(v) == out.d) grid.emplace_back(v);
        }
    }

    std::vector<std::optional<FittedModel>> fits(grid.size());
    out.candidates.resize(grid.size());
    detail::parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        auto& c = out.candidates[i];
        c.spec = grid[i];
        try {
            auto m = std::holds_alternative<ArimaSpec>(grid[i]) ? fit_arima(y, std::get<ArimaSpec>(grid[i]), exog, opt.fit)
                                                                : fit_es(y, std::get<EsVariant>(grid[i]), opt.fit.optimizer);
            c.parameters = m.parameter_count();
            c.converged = m.converged;
            c.near_unit_root = std::min(m.min_ar_root, m.min_ma_root) < opt.min_root;
            c.stationary_r2 = stationary_r2(m, y);
            fits[i] = std::move(m);
        } catch (const Error& e) {
            c.error = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& c = out.candidates[i];
        if (!fits[i] || !c.converged || c.near_unit_root || std::isnan(c.stationary_r2)) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = out.candidates[*best];
        constexpr double kTie = 1e-12;
        if (c.stationary_r2 > b.stationary_r2 + kTie ||
            (std::fabs(c.stationary_r2 - b.stationary_r2) <= kTie && c.parameters < b.parameters)) {
            best = i;
        }
    }
    if (!best) {
        std::string diag;
        for (const auto& c : out.candidates) {
            std::string why = c.error;
            if (why.empty()) why = !c.converged ? "did not converge" : c.near_unit_root ? "root near the unit circle" : "no fit";
            diag += "\n  " + detail::describe(c.spec) + ": " + why;
        }
        throw ConvergenceError("no admissible candidate model for '" + y.name() + "':" + diag);
    }
    out.best = *best;
    out.model = std::move(*fits[*best]);
    out.stationary_r2 = out.candidates[*best].stationary_r2;
    return out;
}

struct StepwiseOptions {
    double entry_p = 0.05;
    MiningOptions mining{};
};

struct StepwiseResult {
    std::vector<std::string> selected;
    std::vector<WeeklySeries> selected_series;
    MinedModel mined;
};

/// Forward selection of exogenous predictors. The order is fixed by mining
/// `y` alone; each round adds the candidate with the smallest coefficient
/// p-value below the entry threshold (ties by candidate order), skipping
/// candidates that are collinear with those already chosen. Orders are
/// re-mined once predictors have been chosen.
[[nodiscard]] inline StepwiseResult stepwise_select(const WeeklySeries& y, const std::vector<WeeklySeries>& candidates,
                                                    const StepwiseOptions& opt = {}) {
    StepwiseResult out;
    out.mined = mine_models(y, {}, opt.mining);
    if (candidates.empty()) return out;

    // The predictor tests need an ARIMA order even when smoothing won.
    std::optional<ArimaSpec> base;
    if (out.mined.model.is_arima()) {
        base = std::get<ArimaSpec>(out.mined.model.spec);
    } else {
        double best_r2 = -std::numeric_limits<double>::infinity();
        for (const auto& c : out.mined.candidates) {
            if (std::holds_alternative<ArimaSpec>(c.spec) && c.error.empty() && c.converged && !c.near_unit_root && c.stationary_r2 > best_r2) {
                best_r2 = c.stationary_r2;
                base = std::get<ArimaSpec>(c.spec);
            }
        }
    }
    if (!base) return out;

    std::vector<bool> used(candidates.size(), false);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.start() != y.start() || c.size() != y.size() || c.has_missing()) used[i] = true;
    }
    for (;;) {
        std::optional<std::size_t> pick;
        double pick_p = opt.entry_p;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            auto trial = out.selected_series;
            trial.push_back(candidates[i]);
            try {
                const auto m = fit_arima(y, *base, trial, opt.mining.fit);
                const double p = m.exog_p.back();
                if (!std::isnan(p) && p < pick_p) {
                    pick = i;
                    pick_p = p;
                }
            } catch (const Error&) {
                // collinear or otherwise unusable alongside the current set
            }
        }
        if (!pick) break;
        used[*pick] = true;
        out.selected.push_back(candidates[*pick].name());
        out.selected_series.push_back(candidates[*pick]);
    }
    if (!out.selected.empty()) {
        auto remine = opt.mining;
        remine.force_d = out.mined.d;
        out.mined = mine_models(y, out.selected_series, remine);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rolling one-step evaluation

struct ForecastPoint {
    WeekStamp week;
    double actual = kMissing;
    double forecast = kMissing;
};

struct ForecastBlock {
    std::string model;
    std::vector<std::string> predictors;
    double mape = kMissing;
    double direction = kMissing;
    double stationary_r2 = kMissing;
    std::vector<ForecastPoint> forecasts;
};

/// Forecast of observation history.size() from the observations before it.
using OneStepForecaster = std::function<double(std::span<const double> history)>;

struct TrainedPipeline {
    std::string model;
    std::vector<std::string> predictors;
    double stationary_r2 = kMissing;
    OneStepForecaster forecast;
};

/// Fits on `train`. `candidates` cover the full sample (aligned with the full
/// target) so the forecaster can read predictor values for test weeks; the
/// pipeline itself must only fit on the training weeks.
using ModelPipeline = std::function<TrainedPipeline(const WeeklySeries& train, const std::vector<WeeklySeries>& candidates)>;

/// Training length for a fractional split, round(fraction * n); the test
/// window keeps at least one week.
[[nodiscard]] inline std::size_t split_point(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
    const auto train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (train < 1 || train >= n) throw InsufficientDataError("split leaves an empty training or test window");
    return train;
}

struct RollingRun {
    TrainedPipeline trained;
    std::vector<ForecastPoint> points;
};

/// Fits once on y[0, split) and forecasts every week t in [split, through]
/// from y[0, t) only.
[[nodiscard]] inline RollingRun rolling_forecasts(const ModelPipeline& pipeline, const WeeklySeries& y,
                                                  const std::vector<WeeklySeries>& candidates, std::size_t split,
                                                  std::optional<std::size_t> through = std::nullopt) {
    if (split >= y.size()) throw InsufficientDataError("test window is empty");
    if (split == 0) throw InsufficientDataError("training window is empty");
    for (const auto& c : candidates) detail::require_aligned(y, c);
    RollingRun run;
    run.trained = pipeline(y.slice(y.start(), y.week(split - 1)), candidates);
    const std::size_t last = through ? std::min(*through, y.size() - 1) : y.size() - 1;
    for (std::size_t t = split; t <= last; ++t) {
        run.points.push_back({y.week(t), y[t], run.trained.forecast(y.values().first(t))});
    }
    return run;
}

/// Rolling forecasts plus MAPE and direction accuracy over the test window.
/// The first direction step compares against the last training week.
[[nodiscard]] inline ForecastBlock rolling_forecast(const ModelPipeline& pipeline, const WeeklySeries& y,
                                                    const std::vector<WeeklySeries>& candidates, std::size_t split) {
    auto run = rolling_forecasts(pipeline, y, candidates, split);
    ForecastBlock block;
    block.model = run.trained.model;
    block.predictors = run.trained.predictors;
    block.stationary_r2 = run.trained.stationary_r2;
    std::vector<double> actual, forecast;
    std::vector<double> dir_actual{y[split - 1]}, dir_forecast{kMissing};
    for (const auto& p : run.points) {
        actual.push_back(p.actual);
        forecast.push_back(p.forecast);
        dir_actual.push_back(p.actual);
        dir_forecast.push_back(p.forecast);
    }
    block.mape = mape(actual, forecast);
    block.direction = direction_accuracy(dir_actual, dir_forecast);
    block.forecasts = std::move(run.points);
    return block;
}

struct EmmsOptions {
    bool use_predictors = true;
    StepwiseOptions stepwise{};
};

/// The model-mining pipeline: stepwise predictor selection (or none) followed
/// by order mining, all on the training window.
[[nodiscard]] inline ModelPipeline emms_pipeline(const EmmsOptions& opt) {
    return [opt](const WeeklySeries& train, const std::vector<WeeklySeries>& candidates) {
        std::vector<WeeklySeries> train_x;
        if (opt.use_predictors) {
            for (const auto& c : candidates) train_x.push_back(c.slice(train.start(), train.last()));
        }
        auto sel = stepwise_select(train, train_x, opt.stepwise);
        TrainedPipeline tp;
        tp.model = sel.mined.model.describe();
        tp.predictors = sel.selected;
        tp.stationary_r2 = sel.mined.stationary_r2;
        std::vector<std::vector<double>> full_x;
        for (const auto& name : sel.selected) {
            for (const auto& c : candidates) {
                if (c.name() == name) full_x.emplace_back(c.values().begin(), c.values().end());
            }
        }
        tp.forecast = [model = std::move(sel.mined.model), full_x = std::move(full_x)](std::span<const double> history) {
            std::vector<std::span<const double>> xs(full_x.begin(), full_x.end());
            return forecast_next(model, history, xs);
        };
        return tp;
    };
}

struct ForecastReport {
    std::string security;
    std::string target;
    ForecastBlock with_predictors;
    ForecastBlock without_predictors;

    [[nodiscard]] double mape_delta() const { return with_predictors.mape - without_predictors.mape; }
    [[nodiscard]] double direction_delta() const { return with_predictors.direction - without_predictors.direction; }
    [[nodiscard]] double r2_delta() const { return with_predictors.stationary_r2 - without_predictors.stationary_r2; }
};

/// Runs the model-mining pipeline with and without the candidate predictors
/// on one split. Candidates must be aligned with `y`.
[[nodiscard]] inline ForecastReport compare_with_without(const std::string& security, const WeeklySeries& y,
                                                         const std::vector<WeeklySeries>& candidates, std::size_t split,
                                                         const StepwiseOptions& opt = {}) {
    ForecastReport r;
    r.security = security;
    r.target = y.name();
    r.with_predictors = rolling_forecast(emms_pipeline({true, opt}), y, candidates, split);
    r.without_predictors = rolling_forecast(emms_pipeline({false, opt}), y, candidates, split);
    return r;
}

/// Lags every raw predictor by one week (only past values enter the model),
/// trims target and predictors to their common range, and drops predictors
/// with missing values there. Excluded names are appended to `excluded`.
struct PreparedPredictors {
    WeeklySeries target;
    std::vector<WeeklySeries> candidates;
    std::vector<std::string> excluded;
};

[[nodiscard]] inline PreparedPredictors lagged_predictors(const WeeklySeries& target, const std::vector<WeeklySeries>& raw) {
    std::vector<WeeklySeries> all{target};
    for (const auto& x : raw) all.push_back(lag(x, 1).renamed(x.name() + "[t-1]"));
    auto aligned = align(all);
    PreparedPredictors out{aligned.front(), {}, {}};
    for (std::size_t i = 1; i < aligned.size(); ++i) {
        if (aligned[i].has_missing()) {
            out.excluded.push_back(aligned[i].name());
        } else {
            out.candidates.push_back(std::move(aligned[i]));
        }
    }
    if (out.target.has_missing()) throw DataError("target '" + target.name() + "' has missing values");
    return out;
}

// ---------------------------------------------------------------------------
// Serialisation

[[nodiscard]] inline nlohmann::json to_json(const ForecastBlock& b) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : b.forecasts) pts.push_back({{"week", p.week.to_string()}, {"actual", p.actual}, {"forecast", p.forecast}});
    return {{"model", b.model},
            {"predictors", b.predictors},
            {"mape", b.mape},
            {"direction", b.direction},
            {"stationary_r2", b.stationary_r2},
            {"forecasts", std::move(pts)}};
}

[[nodiscard]] inline nlohmann::json to_json(const ForecastReport& r) {
    return {{"security", r.security},
            {"target", r.target},
            {"with", to_json(r.with_predictors)},
            {"without", to_json(r.without_predictors)},
            {"deltas", {{"mape", r.mape_delta()}, {"direction", r.direction_delta()}, {"stationary_r2", r.r2_delta()}}}};
}

/// One row per block, mirroring a with/without comparison table.
inline void write_forecast_csv(std::ostream& out, const std::vector<ForecastReport>& reports) {
    csv::write_row(out, {"security", "target", "predictors", "mape", "direction"});
    for (const auto& r : reports) {
        for (const auto* b : {&r.with_predictors, &r.without_predictors}) {
            std::string preds;
            for (const auto& p : b->predictors) preds += (preds.empty() ? "" : ";") + p;
            if (b == &r.with_predictors && preds.empty()) preds = "(none selected)";
            if (b == &r.without_predictors) preds = "none";
            csv::write_row(out, {r.security, r.target, preds, csv::format_number(b->mape), csv::format_number(b->direction)});
        }
    }
}

}  // namespace moodcast
