#include "moodcast/factors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

using namespace moodcast;

namespace {

SviMatrix from_columns(const std::vector<std::vector<double>>& cols) {
    SviMatrix m;
    for (std::size_t c = 0; c < cols.size(); ++c) m.terms.push_back("t" + std::to_string(c));
    for (std::size_t r = 0; r < cols.front().size(); ++r) {
        m.weeks.push_back(oracle::first_week() + static_cast<long>(r));
        for (const auto& col : cols) m.volumes.push_back(col[r]);
    }
    return m;
}

SviMatrix from_matrix(const Eigen::MatrixXd& x) {
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) cols[static_cast<std::size_t>(c)].assign(x.col(c).data(), x.col(c).data() + x.rows());
    return from_columns(cols);
}

// Givens sweeps that turn diag(eigenvalues) into a unit-diagonal matrix with
// the same spectrum (requires the eigenvalues to sum to the dimension).
Eigen::MatrixXd correlation_with_spectrum(const std::vector<double>& lambda) {
    const auto n = static_cast<Eigen::Index>(lambda.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) = lambda[static_cast<std::size_t>(i)];
    for (int guard = 0; guard < 100; ++guard) {
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (a(k, k) < 1.0 - 1e-14 && i < 0) i = k;
            if (a(k, k) > 1.0 + 1e-14 && j < 0) j = k;
        }
        if (i < 0 || j < 0) break;
        const double aii = a(i, i) - 1.0, ajj = a(j, j) - 1.0, aij = a(i, j);
        const double t = (aij + std::sqrt(aij * aij - aii * ajj)) / ajj;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        g(i, i) = c;
        g(j, j) = c;
        g(i, j) = s;
        g(j, i) = -s;
        a = g.transpose() * a * g;
    }
    return a;
}

// n x p data whose sample (population-convention) correlation is exactly `c`.
Eigen::MatrixXd data_with_correlation(const Eigen::MatrixXd& c, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd r(n, c.cols());
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = z(rng);
    r = r.rowwise() - r.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(r);
    const Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(n, c.cols());
    const Eigen::MatrixXd l = c.llt().matrixL();
    return std::sqrt(static_cast<double>(n)) * u * l.transpose();
}

}  // namespace

TEST(Standardize, HandComputedZScores) {
    const auto st = standardize(from_columns({{1, 2, 3}, {2, 4, 7}}));
    EXPECT_NEAR(st.z(0, 0), -1.2247, 1e-4);
    EXPECT_NEAR(st.z(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(st.z(2, 0), 1.2247, 1e-4);
    EXPECT_NEAR(st.z(2, 0), std::sqrt(1.5), 1e-12);
}

TEST(Standardize, IdempotentAndConstantColumnRejected) {
    std::mt19937_64 rng(1);
    const auto m = oracle::two_block_svi(rng, 30, 4);
    const auto once = standardize(m);
    const auto twice = standardize(once.z);
    EXPECT_LT((once.z - twice.z).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index c = 0; c < once.z.cols(); ++c) {
        EXPECT_NEAR(once.z.col(c).mean(), 0.0, 1e-12);
        EXPECT_NEAR(once.z.col(c).squaredNorm() / 30.0, 1.0, 1e-12);
    }
    try {
        (void)standardize(from_columns({{1, 2, 3}, {5, 5, 5}}));
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("t1"), std::string::npos);
    }
    EXPECT_THROW((void)standardize(from_columns({{1, 2}, {3, 4}})), InsufficientDataError);
}

TEST(ExtractFactors, PerfectlyCorrelatedPair) {
    const auto m = extract_factors(from_columns({{1, 2, 3, 5}, {2, 4, 6, 10}}));
    ASSERT_EQ(m.eigenvalues.size(), 2u);
    EXPECT_NEAR(m.eigenvalues[0], 2.0, 1e-9);
    EXPECT_NEAR(m.eigenvalues[1], 0.0, 1e-9);
    ASSERT_EQ(m.factor_count(), 1u);
    EXPECT_NEAR(m.loadings(0, 0), 1.0, 1e-9);
    EXPECT_NEAR(m.loadings(1, 0), 1.0, 1e-9);
    EXPECT_FALSE(m.kaiser_fallback);
}

TEST(ExtractFactors, UncorrelatedPairFallsBackToOneFactor) {
    const auto m = extract_factors(from_columns({{1, -1, 1, -1}, {1, 1, -1, -1}}));
    EXPECT_NEAR(m.eigenvalues[0], 1.0, 1e-12);
    EXPECT_NEAR(m.eigenvalues[1], 1.0, 1e-12);
    EXPECT_EQ(m.factor_count(), 1u);
    EXPECT_TRUE(m.kaiser_fallback);
}

TEST(ExtractFactors, KaiserRuleOnAPlantedSpectrum) {
    // a correlation matrix's eigenvalues sum to its dimension, so the
    // leading [2.5, 0.8, 0.7] pattern is completed by a fourth term
    const auto c = correlation_with_spectrum({2.5, 0.8, 0.4, 0.3});
    for (Eigen::Index i = 0; i < 4; ++i) ASSERT_NEAR(c(i, i), 1.0, 1e-12);
    const auto m = extract_factors(from_matrix(data_with_correlation(c, 80, 3)));
    ASSERT_EQ(m.eigenvalues.size(), 4u);
    EXPECT_NEAR(m.eigenvalues[0], 2.5, 1e-9);
    EXPECT_NEAR(m.eigenvalues[1], 0.8, 1e-9);
    EXPECT_NEAR(m.eigenvalues[2], 0.4, 1e-9);
    EXPECT_NEAR(m.eigenvalues[3], 0.3, 1e-9);
    EXPECT_EQ(m.factor_count(), 1u);
    EXPECT_FALSE(m.kaiser_fallback);
}

TEST(ExtractFactors, TraceAndDescendingOrder) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto m = extract_factors(oracle::two_block_svi(rng, 55, 8));
        EXPECT_NEAR(std::accumulate(m.eigenvalues.begin(), m.eigenvalues.end(), 0.0), 8.0, 1e-9);
        EXPECT_TRUE(std::is_sorted(m.eigenvalues.rbegin(), m.eigenvalues.rend()));
        // unrotated principal loadings are mutually orthogonal
        const Eigen::MatrixXd g = m.loadings.transpose() * m.loadings;
        EXPECT_LT(std::fabs(g(0, 1)), 1e-8);
        for (double e : m.explained_variance) {
            EXPECT_GT(e, 0.0);
            EXPECT_LE(e, 1.0);
        }
    }
}

TEST(Varimax, SingleFactorUnchanged) {
    Eigen::MatrixXd l(3, 1);
    l << 0.9, -0.4, 0.7;
    const auto r = varimax(l);
    EXPECT_EQ(r.loadings, l);
    EXPECT_TRUE(r.converged);
}

TEST(Varimax, SimpleStructureIsAFixedPoint) {
    Eigen::MatrixXd l(4, 2);
    l << 0.9, 0, 0.8, 0, 0, 0.7, 0, 0.6;
    const auto r = varimax(l);
    EXPECT_NEAR(r.criterion.back(), r.criterion.front(), 1e-12);
    // equal up to column sign and order
    bool same = true, swapped = true;
    for (Eigen::Index i = 0; i < 4; ++i) {
        same = same && std::fabs(std::fabs(r.loadings(i, 0)) - l(i, 0)) < 1e-10 &&
               std::fabs(std::fabs(r.loadings(i, 1)) - l(i, 1)) < 1e-10;
        swapped = swapped && std::fabs(std::fabs(r.loadings(i, 0)) - l(i, 1)) < 1e-10 &&
                  std::fabs(std::fabs(r.loadings(i, 1)) - l(i, 0)) < 1e-10;
    }
    EXPECT_TRUE(same || swapped);
}

TEST(Varimax, MatchesBruteForceAngleSearch) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd l(6, 2);
        for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = u(rng);
        const auto r = varimax(l);
        ASSERT_TRUE(r.converged);
        for (std::size_t s = 1; s < r.criterion.size(); ++s) EXPECT_GE(r.criterion[s], r.criterion[s - 1] - 1e-15);
        const double brute = oracle::varimax_grid_max(l);
        EXPECT_NEAR(oracle::varimax_value(r.loadings), brute, 1e-7) << "trial " << trial;
        EXPECT_GE(oracle::varimax_value(r.loadings), brute - 1e-12);
        EXPECT_NEAR(varimax_criterion(r.loadings), oracle::varimax_value(r.loadings), 1e-12);
    }
}

TEST(Varimax, OrthogonalRotationPreservesCommunalities) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index k : {2, 3, 4}) {
        Eigen::MatrixXd l(9, k);
        for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = u(rng);
        const auto r = varimax(l);
        const Eigen::MatrixXd rtr = r.rotation.transpose() * r.rotation;
        EXPECT_LT((rtr - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((r.loadings - l * r.rotation).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::VectorXd h0 = l.rowwise().squaredNorm();
        const Eigen::VectorXd h1 = r.loadings.rowwise().squaredNorm();
        EXPECT_LT((h0 - h1).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Score, RankOneData) {
    const auto svi = from_columns({{1, 2, 3, 5, 4}, {3, 5, 7, 11, 9}});
    const auto m = fit_factor_model(svi);
    ASSERT_EQ(m.factor_count(), 1u);
    EXPECT_TRUE(m.ridge_applied);
    const auto st = standardize(svi);
    const std::vector<double> z0(st.z.col(0).data(), st.z.col(0).data() + st.z.rows());
    EXPECT_NEAR(std::fabs(oracle::pearson_direct(m.scores[0].values(), z0)), 1.0, 1e-9);
}

TEST(Score, TwoBlockScoresAreCentredAndUncorrelated) {
    std::mt19937_64 rng(31);
    const auto svi = oracle::two_block_svi(rng, 66, 6);
    const auto m = fit_factor_model(svi);
    ASSERT_EQ(m.factor_count(), 2u);
    for (const auto& s : m.scores) {
        const auto v = s.values();
        EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()), 0.0, 1e-9);
    }
    EXPECT_LT(std::fabs(oracle::pearson_direct(m.scores[0].values(), m.scores[1].values())), 0.05);
    // regression scores of an orthogonally rotated principal solution have
    // identity covariance on the training sample
    Eigen::MatrixXd s(66, 2);
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 66; ++i) s(i, j) = m.scores[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd cov = s.transpose() * s / 66.0;
    EXPECT_LT((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(m.scores[0].name(), "fact1");
    EXPECT_EQ(m.scores[0].start(), svi.weeks.front());
}

TEST(Score, TermsMustMatch) {
    std::mt19937_64 rng(2);
    auto svi = oracle::two_block_svi(rng, 30, 4);
    const auto m = fit_factor_model(svi);
    svi.terms[0] = "other";
    EXPECT_THROW((void)score(m, svi), DomainError);
}

TEST(FactorModel, TwoLatentBlocksAreRecovered) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        std::mt19937_64 rng(seed);
        const auto m = fit_factor_model(oracle::two_block_svi(rng, 50, 6, 0.8, 0.3));
        ASSERT_EQ(m.factor_count(), 2u) << seed;
        std::vector<Eigen::Index> dominant(6);
        for (Eigen::Index i = 0; i < 6; ++i) m.loadings.row(i).cwiseAbs().maxCoeff(&dominant[static_cast<std::size_t>(i)]);
        EXPECT_EQ(dominant[0], dominant[1]);
        EXPECT_EQ(dominant[1], dominant[2]);
        EXPECT_EQ(dominant[3], dominant[4]);
        EXPECT_EQ(dominant[4], dominant[5]);
        EXPECT_NE(dominant[0], dominant[3]);
        // sign convention: largest-magnitude loading of each factor is positive
        for (Eigen::Index j = 0; j < 2; ++j) {
            Eigen::Index arg = 0;
            m.loadings.col(j).cwiseAbs().maxCoeff(&arg);
            EXPECT_GT(m.loadings(arg, j), 0.0);
        }
    }
}

TEST(FactorModel, LoadingsCsvLayout) {
    std::mt19937_64 rng(8);
    const auto m = fit_factor_model(oracle::two_block_svi(rng, 40, 4));
    std::ostringstream out;
    write_loadings_csv(out, m);
    const auto text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "term,fact1,fact2");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
