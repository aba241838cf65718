#pragma once

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/series.hpp"
#include "moodcast/special.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace moodcast {

namespace detail {

inline void require_aligned(const WeeklySeries& a, const WeeklySeries& b) {
    if (a.start() != b.start() || a.size() != b.size()) {
        throw AlignmentError("series '" + a.name() + "' and '" + b.name() + "' are not aligned");
    }
}

}  // namespace detail

/// Product-moment correlation over weeks where both values are present.
[[nodiscard]] inline double pearson(const WeeklySeries& x, const WeeklySeries& y) {
    detail::require_aligned(x, y);
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (is_missing(x[i]) || is_missing(y[i])) continue;
        sx += x[i];
        sy += y[i];
        ++n;
    }
    if (n < 3) throw InsufficientDataError("correlation of '" + x.name() + "' and '" + y.name() + "' needs 3 pairs");
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (is_missing(x[i]) || is_missing(y[i])) continue;
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DomainError("correlation undefined: '" + (sxx == 0.0 ? x.name() : y.name()) + "' is constant");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct LagCorrelogram {
    std::string x_name;
    std::string y_name;
    std::vector<int> lags;
    std::vector<double> gamma;

    [[nodiscard]] double at(int lag) const {
        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (lags[i] == lag) return gamma[i];
        }
        throw DomainError("lag " + std::to_string(lag) + " not in correlogram");
    }
};

/// gamma(k) = sum_i (x_{i+k} - xbar)(y_i - ybar) /
///            sqrt(sum_i (x_{i+k} - xbar)^2) sqrt(sum_i (y_i - ybar)^2)
/// with xbar, ybar taken over the whole sample and the sums over the
/// overlapping indices. Positive k pairs later x with earlier y.
[[nodiscard]] inline LagCorrelogram cross_correlogram(const WeeklySeries& x, const WeeklySeries& y, int max_lag = 7) {
    detail::require_aligned(x, y);
    if (max_lag < 0) throw DomainError("maximum lag must be non-negative");
    const auto n = static_cast<long>(x.size());
    if (n <= max_lag + 2) {
        throw InsufficientDataError("cross-correlation at lag " + std::to_string(max_lag) + " needs more than " +
                                    std::to_string(max_lag + 2) + " weeks");
    }
    auto mean_of = [](const WeeklySeries& s) {
        double sum = 0;
        std::size_t k = 0;
        for (double v : s.values()) {
            if (is_missing(v)) continue;
            sum += v;
            ++k;
        }
        return k ? sum / static_cast<double>(k) : kMissing;
    };
    const double mx = mean_of(x);
    const double my = mean_of(y);

    LagCorrelogram out{x.name(), y.name(), {}, {}};
    for (int k = -max_lag; k <= max_lag; ++k) {
        double sxy = 0, sxx = 0, syy = 0;
        for (long i = std::max(0L, -static_cast<long>(k)); i < n && i + k < n; ++i) {
            const double xv = x[static_cast<std::size_t>(i + k)];
            const double yv = y[static_cast<std::size_t>(i)];
            if (is_missing(xv) || is_missing(yv)) continue;
            sxy += (xv - mx) * (yv - my);
            sxx += (xv - mx) * (xv - mx);
            syy += (yv - my) * (yv - my);
        }
        if (sxx == 0.0 || syy == 0.0) {
            throw DomainError("cross-correlation undefined: constant series over lag " + std::to_string(k));
        }
        out.lags.push_back(k);
        out.gamma.push_back(sxy / (std::sqrt(sxx) * std::sqrt(syy)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Least squares

struct OlsFit {
    std::vector<std::string> names;  ///< "intercept" first when fitted
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    std::size_t observations = 0;
    std::size_t dof = 0;
    std::size_t dropped = 0;  ///< rows removed for missing values
};

/// Least squares on a prepared design. Throws RankDeficiencyError naming the
/// columns that are linear combinations of the others.
[[nodiscard]] inline OlsFit ols_solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                      std::vector<std::string> names) {
    const auto n = x.rows();
    const auto k = x.cols();
    if (n <= k) {
        throw InsufficientDataError("least squares needs more observations (" + std::to_string(n) +
                                    ") than parameters (" + std::to_string(k) + ")");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        std::string which;
        for (Eigen::Index i = qr.rank(); i < k; ++i) {
            const auto col = qr.colsPermutation().indices()(i);
            which += (which.empty() ? "" : ", ") + names[static_cast<std::size_t>(col)];
        }
        throw RankDeficiencyError("design matrix is rank deficient; collinear regressor(s): " + which);
    }
    OlsFit fit;
    fit.names = std::move(names);
    fit.coefficients = qr.solve(y);
    fit.residuals = y - x * fit.coefficients;
    fit.rss = fit.residuals.squaredNorm();
    fit.observations = static_cast<std::size_t>(n);
    fit.dof = static_cast<std::size_t>(n - k);
    return fit;
}

/// Regress `y` on `regressors` (and an intercept), dropping weeks with any
/// missing value.
[[nodiscard]] inline OlsFit ols(const WeeklySeries& y, const std::vector<WeeklySeries>& regressors, bool intercept = true) {
    for (const auto& r : regressors) detail::require_aligned(y, r);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
        bool ok = !is_missing(y[i]);
        for (const auto& r : regressors) ok = ok && !is_missing(r[i]);
        if (ok) rows.push_back(i);
    }
    const auto k = regressors.size() + (intercept ? 1 : 0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    Eigen::VectorXd yy(static_cast<Eigen::Index>(rows.size()));
    std::vector<std::string> names;
    if (intercept) names.emplace_back("intercept");
    for (const auto& r : regressors) names.push_back(r.name());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        yy(row) = y[rows[i]];
        Eigen::Index c = 0;
        if (intercept) x(row, c++) = 1.0;
        for (const auto& r : regressors) x(row, c++) = r[rows[i]];
    }
    auto fit = ols_solve(yy, x, std::move(names));
    fit.dropped = y.size() - rows.size();
    return fit;
}

// ---------------------------------------------------------------------------
// Granger causality

struct GrangerResult {
    std::string predictor;
    std::string target;
    int lag = 0;
    double f_stat = 0.0;
    double p_value = 1.0;
    double rss_restricted = 0.0;
    double rss_unrestricted = 0.0;
    std::size_t observations = 0;  ///< usable rows T
    std::size_t dropped = 0;
};

/// Restricted model: target on intercept + n own lags. Unrestricted adds n
/// predictor lags. F = ((RSS_r - RSS_u)/n) / (RSS_u/(T - 2n - 1)), upper tail
/// of F(n, T - 2n - 1). Requires at least 2n + 10 aligned weeks.
[[nodiscard]] inline GrangerResult granger_test(const WeeklySeries& target, const WeeklySeries& predictor, int n) {
    detail::require_aligned(target, predictor);
    if (n < 1) throw DomainError("Granger lag order must be at least 1");
    const auto len = target.size();
    const auto order = static_cast<std::size_t>(n);
    if (len < 2 * order + 10) {
        throw InsufficientDataError("Granger test at lag " + std::to_string(n) + " needs " +
                                    std::to_string(2 * n + 10) + " weeks, have " + std::to_string(len));
    }
    std::vector<std::size_t> rows;
    for (std::size_t t = order; t < len; ++t) {
        bool ok = !is_missing(target[t]);
        for (std::size_t i = 1; i <= order; ++i) {
            ok = ok && !is_missing(target[t - i]) && !is_missing(predictor[t - i]);
        }
        if (ok) rows.push_back(t);
    }
    const auto usable = rows.size();
    if (usable <= 2 * order + 1) {
        throw InsufficientDataError("Granger test: only " + std::to_string(usable) + " complete rows");
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(usable));
    Eigen::MatrixXd xr(static_cast<Eigen::Index>(usable), n + 1);
    Eigen::MatrixXd xu(static_cast<Eigen::Index>(usable), 2 * n + 1);
    std::vector<std::string> names_r{"intercept"};
    for (int i = 1; i <= n; ++i) names_r.push_back(target.name() + "[t-" + std::to_string(i) + "]");
    auto names_u = names_r;
    for (int i = 1; i <= n; ++i) names_u.push_back(predictor.name() + "[t-" + std::to_string(i) + "]");
    for (std::size_t r = 0; r < usable; ++r) {
        const auto t = rows[r];
        const auto row = static_cast<Eigen::Index>(r);
        y(row) = target[t];
        xr(row, 0) = xu(row, 0) = 1.0;
        for (int i = 1; i <= n; ++i) {
            xr(row, i) = xu(row, i) = target[t - static_cast<std::size_t>(i)];
            xu(row, n + i) = predictor[t - static_cast<std::size_t>(i)];
        }
    }
    const auto restricted = ols_solve(y, xr, names_r);
    const auto unrestricted = ols_solve(y, xu, names_u);

    GrangerResult res;
    res.predictor = predictor.name();
    res.target = target.name();
    res.lag = n;
    res.rss_restricted = restricted.rss;
    res.rss_unrestricted = unrestricted.rss;
    res.observations = usable;
    res.dropped = (len - order) - usable;
    if (unrestricted.rss > restricted.rss + 1e-12 * std::max(1.0, restricted.rss)) {
        throw NumericalError("unrestricted Granger model fits worse than the restricted one");
    }
    const double d1 = n;
    const double d2 = static_cast<double>(usable) - 2.0 * n - 1.0;
    const double gain = std::max(0.0, restricted.rss - unrestricted.rss);
    if (unrestricted.rss <= 0.0) {
        res.f_stat = gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
        res.f_stat = (gain / d1) / (unrestricted.rss / d2);
    }
    res.p_value = special::f_survival(res.f_stat, d1, d2);
    return res;
}

/// Significance marks: p < 0.01 "‡", p < 0.05 "†", p < 0.1 "*".
[[nodiscard]] inline std::string significance_stars(double p) {
    if (p < 0.01) return "‡";
    if (p < 0.05) return "†";
    if (p < 0.1) return "*";
    return {};
}

struct GrangerCell {
    std::string target;
    std::string predictor;
    int lag = 0;
    std::optional<GrangerResult> result;
    std::string error;  ///< why the cell is unavailable

    [[nodiscard]] std::string stars() const { return result ? significance_stars(result->p_value) : std::string{}; }
};

/// targets x predictors x lags, target-major. Pairs are aligned first; a
/// failing cell is kept with its error and the grid is still produced.
[[nodiscard]] inline std::vector<GrangerCell> significance_table(const std::vector<WeeklySeries>& targets,
                                                                 const std::vector<WeeklySeries>& predictors,
                                                                 const std::vector<int>& lags) {
    std::vector<GrangerCell> grid;
    grid.reserve(targets.size() * predictors.size() * lags.size());
    for (const auto& tgt : targets) {
        for (const auto& pred : predictors) {
            std::optional<std::vector<WeeklySeries>> pair;
            std::string align_error;
            try {
                pair = align({tgt, pred});
            } catch (const Error& e) {
                align_error = e.what();
            }
            for (int lag : lags) {
                GrangerCell cell{tgt.name(), pred.name(), lag, std::nullopt, align_error};
                if (pair) {
                    try {
                        cell.result = granger_test((*pair)[0], (*pair)[1], lag);
                    } catch (const Error& e) {
                        cell.error = e.what();
                    }
                }
                grid.push_back(std::move(cell));
            }
        }
    }
    return grid;
}

inline void write_significance_csv(std::ostream& out, const std::string& security, const std::vector<GrangerCell>& grid) {
    csv::write_row(out, {"security", "target", "predictor", "lag", "p_value", "stars"});
    for (const auto& c : grid) {
        csv::write_row(out, {security, c.target, c.predictor, std::to_string(c.lag),
                             c.result ? csv::format_number(c.result->p_value) : std::string{}, c.stars()});
    }
}

struct HeatmapCell {
    std::string row;
    std::string column;
    std::optional<double> r;
};

/// Pearson r for every (row, column) pair after pairwise alignment.
[[nodiscard]] inline std::vector<HeatmapCell> correlation_heatmap(const std::vector<WeeklySeries>& rows,
                                                                  const std::vector<WeeklySeries>& columns) {
    std::vector<HeatmapCell> out;
    for (const auto& r : rows) {
        for (const auto& c : columns) {
            HeatmapCell cell{r.name(), c.name(), std::nullopt};
            try {
                const auto pair = align({r, c});
                cell.r = pearson(pair[0], pair[1]);
            } catch (const Error&) {
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

inline void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells) {
    csv::write_row(out, {"row", "column", "r"});
    for (const auto& c : cells) {
        csv::write_row(out, {c.row, c.column, c.r ? csv::format_number(*c.r) : std::string{}});
    }
}

inline void write_correlograms_csv(std::ostream& out, const std::vector<LagCorrelogram>& grams) {
    csv::write_row(out, {"x", "y", "lag", "gamma"});
    for (const auto& g : grams) {
        for (std::size_t i = 0; i < g.lags.size(); ++i) {
            csv::write_row(out, {g.x_name, g.y_name, std::to_string(g.lags[i]), csv::format_number(g.gamma[i])});
        }
    }
}

}  // namespace moodcast
