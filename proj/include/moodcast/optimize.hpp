#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace moodcast {

struct NelderMeadOptions {
    std::size_t max_iterations = 500;
    double relative_tolerance = 1e-10;  ///< stop when (f_worst - f_best) <= tol * (|f_best| + tiny)
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimisation with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// objective values are treated as +infinity.
[[nodiscard]] inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                                  std::vector<double> start,
                                                  const NelderMeadOptions& opt = {}) {
    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    const std::size_t n = start.size();
    if (n == 0) {
        res.value = eval(start);
        res.x = std::move(start);
        res.converged = true;
        return res;
    }

    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
    for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto along = [&](double t, std::vector<double>& out, const std::vector<double>& worst) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (worst[j] - centroid[j]);
    };

    for (; res.iterations < opt.max_iterations; ++res.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const auto best = order.front();
        const auto worst = order.back();
        const auto second = order[n - 1];
        const double spread = vals[worst] - vals[best];
        if (std::isfinite(vals[worst]) &&
            spread <= opt.relative_tolerance * (std::fabs(vals[best]) + 1e-300)) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
        }

        along(-1.0, trial, pts[worst]);
        const double fr = eval(trial);
        if (fr < vals[best]) {
            along(-2.0, trial2, pts[worst]);
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                vals[worst] = fe;
            } else {
                pts[worst] = trial;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = trial;
            vals[worst] = fr;
            continue;
        }
        // contraction: outside if the reflection improved on the worst point
        const bool outside = fr < vals[worst];
        along(outside ? -0.5 : 0.5, trial2, pts[worst]);
        const double fc = eval(trial2);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = trial2;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    res.value = *it;
    res.x = pts[static_cast<std::size_t>(it - vals.begin())];
    return res;
}

}  // namespace moodcast
