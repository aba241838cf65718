#pragma once

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace moodcast {

/// Column z-scores with the population (divide-by-n) standard deviation.
struct Standardized {
    Eigen::MatrixXd z;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

[[nodiscard]] inline Standardized standardize(const Eigen::MatrixXd& x,
                                              const std::vector<std::string>& names = {}) {
    if (x.rows() < 3) throw InsufficientDataError("standardizing needs at least 3 weeks");
    if (!x.allFinite()) throw NumericalError("non-finite value in matrix to standardize");
    Standardized out;
    const auto n = static_cast<double>(x.rows());
    out.mean = x.colwise().mean().transpose();
    out.z = x.rowwise() - out.mean.transpose();
    out.sd = (out.z.colwise().squaredNorm() / n).cwiseSqrt().transpose();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (!(out.sd(c) > 1e-12 * std::max(1.0, std::fabs(out.mean(c))))) {
            const auto label = static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                         : "column " + std::to_string(c);
            throw DomainError("term '" + label + "' has zero variance");
        }
        out.z.col(c) /= out.sd(c);
    }
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd to_matrix(const SviMatrix& m) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
        }
    }
    return x;
}

[[nodiscard]] inline Standardized standardize(const SviMatrix& m) { return standardize(to_matrix(m), m.terms); }

struct FactorModel {
    std::vector<std::string> terms;
    std::vector<double> eigenvalues;  ///< all of them, descending
    Eigen::MatrixXd loadings;         ///< terms x retained factors (rotated once varimax ran)
    Eigen::MatrixXd rotation;         ///< retained x retained; identity before rotation
    Eigen::MatrixXd correlation;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<double> explained_variance;
    std::vector<WeeklySeries> scores;
    bool kaiser_fallback = false;  ///< no eigenvalue exceeded 1; kept the largest
    bool rotation_converged = true;
    bool ridge_applied = false;

    [[nodiscard]] std::size_t factor_count() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
};

namespace detail {

// Flip each column so its largest-magnitude entry is positive; mirror the
// flip in `companion` columns (rotation matrix) when given.
inline void canonical_signs(Eigen::MatrixXd& loadings, Eigen::MatrixXd* companion = nullptr) {
    for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
        Eigen::Index arg = 0;
        loadings.col(j).cwiseAbs().maxCoeff(&arg);
        if (loadings(arg, j) < 0.0) {
            loadings.col(j) *= -1.0;
            if (companion) companion->col(j) *= -1.0;
        }
    }
}

inline std::vector<double> explained(const Eigen::MatrixXd& loadings) {
    std::vector<double> out;
    const auto p = static_cast<double>(loadings.rows());
    for (Eigen::Index j = 0; j < loadings.cols(); ++j) out.push_back(loadings.col(j).squaredNorm() / p);
    return out;
}

}  // namespace detail

// Eigenvalues within this distance of 1 count as "not greater than 1".
inline constexpr double kKaiserTolerance = 1e-9;

/// Principal components of the term correlation matrix. Components with
/// eigenvalue > 1 are retained (the single largest when none qualifies);
/// loadings are eigenvector * sqrt(eigenvalue).
[[nodiscard]] inline FactorModel extract_factors(const SviMatrix& svi) {
    if (svi.cols() < 2) throw DomainError("factor extraction needs at least two terms");
    const auto st = standardize(svi);
    const auto n = static_cast<double>(st.z.rows());
    FactorModel m;
    m.terms = svi.terms;
    m.mean = st.mean;
    m.sd = st.sd;
    m.correlation = (st.z.transpose() * st.z) / n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.correlation);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite()) {
        throw NumericalError("eigendecomposition of the term correlation matrix failed");
    }
    const auto p = m.correlation.rows();
    std::vector<Eigen::Index> retained;
    for (Eigen::Index k = p - 1; k >= 0; --k) {
        const double lambda = es.eigenvalues()(k);
        m.eigenvalues.push_back(lambda);
        if (lambda > 1.0 + kKaiserTolerance) retained.push_back(k);
    }
    if (retained.empty()) {
        retained.push_back(p - 1);
        m.kaiser_fallback = true;
    }
    m.loadings.resize(p, static_cast<Eigen::Index>(retained.size()));
    for (std::size_t j = 0; j < retained.size(); ++j) {
        const double lambda = std::max(0.0, es.eigenvalues()(retained[j]));
        m.loadings.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(retained[j]) * std::sqrt(lambda);
    }
    detail::canonical_signs(m.loadings);
    m.rotation = Eigen::MatrixXd::Identity(m.loadings.cols(), m.loadings.cols());
    m.explained_variance = detail::explained(m.loadings);
    return m;
}

// ---------------------------------------------------------------------------
// Varimax

struct VarimaxOptions {
    double tolerance = 1e-10;  ///< stop when a sweep improves the criterion by less
    int max_sweeps = 100;
    bool kaiser_normalize = true;
};

struct VarimaxResult {
    Eigen::MatrixXd loadings;
    Eigen::MatrixXd rotation;        ///< orthogonal; loadings = input * rotation
    std::vector<double> criterion;   ///< value before the first sweep, then after each sweep
    int sweeps = 0;
    bool converged = false;
};

/// Sum over factors of the variance of squared loadings. Rows are scaled to
/// unit communality first when `normalize` is set.
[[nodiscard]] inline double varimax_criterion(const Eigen::MatrixXd& loadings, bool normalize = true) {
    Eigen::MatrixXd b = loadings;
    if (normalize) {
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            const double h = b.row(i).norm();
            if (h > 0.0) b.row(i) /= h;
        }
    }
    const auto p = static_cast<double>(b.rows());
    double v = 0.0;
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        const Eigen::ArrayXd sq = b.col(j).array().square();
        const double mean = sq.sum() / p;
        v += sq.square().sum() / p - mean * mean;
    }
    return v;
}

/// Orthogonal varimax by cyclic pairwise planar rotations, each at the
/// closed-form angle that maximizes the criterion for that pair.
[[nodiscard]] inline VarimaxResult varimax(const Eigen::MatrixXd& loadings, const VarimaxOptions& opt = {}) {
    const auto p = loadings.rows();
    const auto m = loadings.cols();
    VarimaxResult out;
    out.rotation = Eigen::MatrixXd::Identity(m, m);
    out.loadings = loadings;
    if (m < 2) {
        out.criterion.push_back(varimax_criterion(loadings, opt.kaiser_normalize));
        out.converged = true;
        return out;
    }

    Eigen::VectorXd h = Eigen::VectorXd::Ones(p);
    Eigen::MatrixXd b = loadings;
    if (opt.kaiser_normalize) {
        for (Eigen::Index i = 0; i < p; ++i) {
            h(i) = loadings.row(i).norm();
            if (h(i) > 0.0) b.row(i) /= h(i);
        }
    }
    const auto pd = static_cast<double>(p);
    double current = varimax_criterion(b, false);
    out.criterion.push_back(current);

    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        for (Eigen::Index j = 0; j + 1 < m; ++j) {
            for (Eigen::Index k = j + 1; k < m; ++k) {
                const Eigen::ArrayXd x = b.col(j).array();
                const Eigen::ArrayXd y = b.col(k).array();
                const Eigen::ArrayXd u = x.square() - y.square();
                const Eigen::ArrayXd v = 2.0 * x * y;
                const double A = u.sum();
                const double B = v.sum();
                const double C = (u.square() - v.square()).sum();
                const double D = 2.0 * (u * v).sum();
                const double num = D - 2.0 * A * B / pd;
                const double den = C - (A * A - B * B) / pd;
                const double phi = std::atan2(num, den) / 4.0;
                if (phi == 0.0) continue;
                const double c = std::cos(phi);
                const double s = std::sin(phi);
                Eigen::MatrixXd g = Eigen::MatrixXd::Identity(m, m);
                g(j, j) = c;
                g(k, j) = s;
                g(j, k) = -s;
                g(k, k) = c;
                const Eigen::VectorXd bj = b.col(j);
                b.col(j) = c * bj + s * b.col(k);
                b.col(k) = -s * bj + c * b.col(k);
                out.rotation = out.rotation * g;
            }
        }
        const double next = varimax_criterion(b, false);
        out.criterion.push_back(next);
        out.sweeps = sweep + 1;
        const bool done = next - current < opt.tolerance;
        current = next;
        if (done) {
            out.converged = true;
            break;
        }
    }
    out.loadings = loadings * out.rotation;
    return out;
}

// ---------------------------------------------------------------------------
// Scores

struct FactorScores {
    std::vector<WeeklySeries> series;  ///< "fact1", "fact2", ...
    bool ridge_applied = false;
};

/// Regression-method scores: standardized data (model's means and sds)
/// times correlation^-1 * loadings. A singular correlation matrix gets a
/// 1e-8 diagonal ridge.
[[nodiscard]] inline FactorScores score(const FactorModel& model, const SviMatrix& svi) {
    if (svi.terms != model.terms) throw DomainError("score matrix terms differ from the factor model's");
    if (svi.rows() == 0) throw InsufficientDataError("no weeks to score");
    Eigen::MatrixXd z = to_matrix(svi);
    z = (z.rowwise() - model.mean.transpose()).array().rowwise() / model.sd.transpose().array();

    FactorScores out;
    Eigen::LLT<Eigen::MatrixXd> llt(model.correlation);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        const auto p = model.correlation.rows();
        llt.compute(model.correlation + 1e-8 * Eigen::MatrixXd::Identity(p, p));
        out.ridge_applied = true;
        if (llt.info() != Eigen::Success) throw NumericalError("term correlation matrix is not invertible");
    }
    const Eigen::MatrixXd weights = llt.solve(model.loadings);
    const Eigen::MatrixXd s = z * weights;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        std::vector<double> v(s.col(j).data(), s.col(j).data() + s.rows());
        out.series.emplace_back("fact" + std::to_string(j + 1), svi.weeks.front(), std::move(v));
    }
    return out;
}

/// Extraction, varimax rotation and training-sample scores in one call.
[[nodiscard]] inline FactorModel fit_factor_model(const SviMatrix& svi, const VarimaxOptions& opt = {}) {
    auto model = extract_factors(svi);
    const auto rot = varimax(model.loadings, opt);
    model.loadings = rot.loadings;
    model.rotation = rot.rotation;
    model.rotation_converged = rot.converged;
    detail::canonical_signs(model.loadings, &model.rotation);
    model.explained_variance = detail::explained(model.loadings);
    auto sc = score(model, svi);
    model.scores = std::move(sc.series);
    model.ridge_applied = sc.ridge_applied;
    return model;
}

/// `term,fact1[,fact2...]`
inline void write_loadings_csv(std::ostream& out, const FactorModel& model) {
    std::vector<std::string> header{"term"};
    for (std::size_t j = 0; j < model.factor_count(); ++j) header.push_back("fact" + std::to_string(j + 1));
    csv::write_row(out, header);
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
        std::vector<std::string> row{model.terms[i]};
        for (std::size_t j = 0; j < model.factor_count(); ++j) {
            row.push_back(csv::format_number(model.loadings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
        csv::write_row(out, row);
    }
}

}  // namespace moodcast
