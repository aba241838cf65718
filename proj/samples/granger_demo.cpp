// Plants a one-week lead of a "mood" series over a target and shows how the
// lagged correlation, the Granger grid and the forecast comparison pick it up.

#include "moodcast/moodcast.hpp"

#include <cstdio>
#include <random>

int main() {
    using namespace moodcast;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 1.0);

    const std::size_t n = 66;
    std::vector<double> mood(n), target(n);
    for (std::size_t t = 0; t < n; ++t) {
        mood[t] = (t ? 0.6 * mood[t - 1] : 0.0) + noise(rng);
        target[t] = 25.0 + (t ? 4.0 * mood[t - 1] : 0.0) + 0.6 * noise(rng);
    }
    const WeekStamp start(std::chrono::sys_days{std::chrono::year{2010} / 6 / 4});
    const WeeklySeries x("mood", start, mood);
    const WeeklySeries y("vix", start, target);

    const auto ccf = cross_correlogram(x, y, 3);
    std::printf("cross-correlogram (positive lag = mood later than vix)\n");
    for (std::size_t i = 0; i < ccf.lags.size(); ++i) std::printf("  lag %+d  gamma %+.3f\n", ccf.lags[i], ccf.gamma[i]);

    std::printf("\nGranger: does mood help predict vix?\n");
    for (const auto& cell : significance_table({y}, {x}, {1, 2, 3, 4})) {
        std::printf("  lag %d  F %7.2f  p %.2e %s\n", cell.lag, cell.result->f_stat, cell.result->p_value,
                    cell.stars().c_str());
    }

    const auto prep = lagged_predictors(y, {x});
    const auto report = compare_with_without("demo", prep.target, prep.candidates, split_point(prep.target.size(), 0.76));
    std::printf("\nforecast over %zu test weeks\n", report.with_predictors.forecasts.size());
    std::printf("  with predictors:    %-18s MAPE %.3f%%  direction %.1f%%\n", report.with_predictors.model.c_str(),
                report.with_predictors.mape, report.with_predictors.direction);
    std::printf("  without predictors: %-18s MAPE %.3f%%  direction %.1f%%\n", report.without_predictors.model.c_str(),
                report.without_predictors.mape, report.without_predictors.direction);
    return 0;
}
