// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//     acceptance                    run all criteria
//     acceptance 4 7                run only the listed criteria
//     acceptance --allow-fail 5     still report criterion 5, but do not let
//                                   its failure alone set the exit status

#include "moodcast/moodcast.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

using namespace moodcast;
using oracle::series;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;  ///< runtime limit, <= 0 when none
    std::function<Outcome()> run;
};

/// Collects failed checks so a criterion can report the first few.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok) {
            ++failed_;
            if (failed_ <= 3) failures_ += (failures_.empty() ? "" : "; ") + what;
        }
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream s;
        s.precision(12);
        s << what << ": got " << got << ", want " << want;
        expect(std::fabs(got - want) <= tol, s.str());
    }
    template <class F>
    void throws(F&& fn, const std::string& what) {
        bool thrown = false;
        try {
            fn();
        } catch (const Error&) {
            thrown = true;
        }
        expect(thrown, what + " did not throw");
    }
    [[nodiscard]] Outcome outcome() const {
        if (failed_ == 0) return {true, std::to_string(total_) + " checks"};
        return {false, std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed: " + failures_};
    }

private:
    int total_ = 0;
    int failed_ = 0;
    std::string failures_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Formula examples

Outcome formula_suite() {
    Checks c;
    constexpr double tol = 1e-9;
    constexpr double hand = 1e-4;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    c.near(bullishness(0, 0), 0.0, tol, "bullishness(0,0)");
    c.near(bullishness(9, 0), std::log(10.0), tol, "bullishness(9,0)");
    c.near(bullishness(9, 0), 2.302585, hand, "bullishness(9,0) hand value");
    for (auto [a, b] : {std::pair{3.0, 7.0}, {12.0, 1.0}, {0.0, 5.0}}) {
        c.near(bullishness(a, b), -bullishness(b, a), tol, "bullishness antisymmetry");
    }

    c.expect(agreement(10, 0).has_value(), "agreement(10,0) defined");
    c.near(agreement(10, 0).value_or(nan), 1.0, tol, "agreement(10,0)");
    c.near(agreement(5, 5).value_or(nan), 0.0, tol, "agreement(5,5)");
    c.expect(!agreement(0, 0).has_value(), "agreement(0,0) is missing");

    c.near(message_volume(0), 0.0, tol, "message_volume(0)");
    c.near(message_volume(1), std::log(2.0), tol, "message_volume(1)");
    c.near(message_volume(1), 0.6931, hand, "message_volume(1) hand value");

    auto ret = [](std::vector<double> close) { return weekly_returns(series("close", std::move(close))); };
    c.near(ret({100, 100})[0], 0.0, tol, "returns [100,100]");
    c.near(ret({100, 100 * std::exp(0.01)})[0], 1.0, tol, "returns 1% log move");
    c.near(ret({100, 110})[0], 100.0 * std::log(1.1), tol, "returns [100,110]");
    c.near(ret({100, 110})[0], 9.531, hand, "returns [100,110] hand value");
    c.expect(ret({100, 110}).start() == oracle::first_week() + 1, "returns dated at the later week");

    const auto w = oracle::first_week();
    auto bar = [&](double o, double h, double l, double cl) { return OhlcvWeekly{w, o, h, l, cl, 1000}; };
    const std::vector<OhlcvWeekly> flat{bar(10, 10, 10, 10), bar(10, 10, 10, 10)};
    c.near(gk_volatility(flat).sigma, 0.0, tol, "GK flat bars");
    const std::vector<OhlcvWeekly> wide{bar(5, 5 * std::exp(1.0), 5, 5)};
    c.near(gk_volatility(wide).sigma, std::sqrt(0.5), tol, "GK H/L=e, C=O");
    c.near(gk_volatility(wide).sigma, 0.70711, hand, "GK H/L=e hand value");
    const std::vector<OhlcvWeekly> degenerate{bar(10, 11, 11, 11)};
    const auto gk = gk_volatility(degenerate);
    c.near(gk.sigma, 0.0, tol, "GK H=L, C!=O clamps");
    c.expect(gk.clamped_bars == 1, "GK clamped bar counted");

    const std::vector<double> a{100, 200, 50};
    c.near(mape(a, a), 0.0, tol, "MAPE forecast = actual");
    c.near(mape(a, std::vector<double>{110, 220, 55}), 10.0, tol, "MAPE 1.1x");
    c.near(mape(std::vector<double>{100, 200}, std::vector<double>{110, 180}), 10.0, tol, "MAPE [100,200] vs [110,180]");
    c.throws([] { (void)mape(std::vector<double>{0, 1}, std::vector<double>{1, 1}); }, "MAPE with zero actual");

    const std::vector<double> moves{5, 7, 6, 9, 3};
    std::vector<double> same{nan}, opposite{nan};
    for (std::size_t t = 1; t < moves.size(); ++t) {
        same.push_back(moves[t - 1] + 0.5 * (moves[t] - moves[t - 1]));
        opposite.push_back(moves[t - 1] - (moves[t] - moves[t - 1]));
    }
    c.near(direction_accuracy(moves, same), 100.0, tol, "direction, same moves");
    c.near(direction_accuracy(moves, opposite), 0.0, tol, "direction, opposite moves");
    c.near(direction_accuracy(std::vector<double>{1, 2, 1, 2}, std::vector<double>{nan, 2, 1, 2}), 100.0, tol,
           "direction [1,2,1,2]");
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 2. Eigen / varimax invariants

Outcome factor_suite() {
    Checks c;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto svi = oracle::two_block_svi(rng, 60, 6);
        const std::string tag = "seed " + std::to_string(seed) + ": ";

        const auto raw = extract_factors(svi);
        double trace = 0;
        for (double e : raw.eigenvalues) trace += e;
        c.near(trace, 6.0, 1e-9, tag + "eigenvalue trace");

        const auto vr = varimax(raw.loadings);
        for (Eigen::Index i = 0; i < raw.loadings.rows(); ++i) {
            c.near(vr.loadings.row(i).squaredNorm(), raw.loadings.row(i).squaredNorm(), 1e-9, tag + "communality");
        }
        for (std::size_t k = 1; k < vr.criterion.size(); ++k) {
            c.expect(vr.criterion[k] >= vr.criterion[k - 1] - 1e-12, tag + "criterion decreased at sweep " + std::to_string(k));
        }
        const Eigen::MatrixXd rr = vr.rotation.transpose() * vr.rotation;
        c.expect(rr.isIdentity(1e-9), tag + "rotation not orthogonal");
        if (raw.loadings.cols() == 2) {
            c.expect(oracle::varimax_value(vr.loadings) >= oracle::varimax_grid_max(raw.loadings, 4000) - 1e-6,
                     tag + "rotation below brute-force angle search");
        }

        const auto model = fit_factor_model(svi);
        c.expect(model.factor_count() == 2, tag + "retained " + std::to_string(model.factor_count()) + " factors");
        if (model.factor_count() != 2) continue;
        std::vector<Eigen::Index> dominant(6);
        for (Eigen::Index i = 0; i < 6; ++i) model.loadings.row(i).cwiseAbs().maxCoeff(&dominant[static_cast<std::size_t>(i)]);
        c.expect(dominant[0] == dominant[1] && dominant[1] == dominant[2] && dominant[3] == dominant[4] &&
                     dominant[4] == dominant[5] && dominant[0] != dominant[3],
                 tag + "blocks not recovered");
        const auto& s = model.scores;
        c.expect(std::fabs(oracle::pearson_direct(s[0].values(), s[1].values())) < 0.05, tag + "scores correlated");
    }
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 3. Cross-correlation lag recovery

Outcome ccf_suite() {
    int hits = 0;
    int agree = 0;
    const int pairs = 50;
    const std::size_t n = 66;
    for (int i = 0; i < pairs; ++i) {
        std::mt19937_64 rng(7000 + i);
        const int shift = static_cast<int>(std::uniform_int_distribution<int>(-7, 7)(rng));
        const std::size_t s = static_cast<std::size_t>(std::abs(shift));
        const auto base = oracle::white_noise(rng, n + s);
        const auto noise = oracle::white_noise(rng, n, 0.2);
        // x_t = y_{t - shift} plus noise
        std::vector<double> x, y;
        if (shift >= 0) {
            x.assign(base.begin(), base.begin() + static_cast<long>(n));
            y.assign(base.begin() + static_cast<long>(s), base.end());
        } else {
            x.assign(base.begin() + static_cast<long>(s), base.end());
            y.assign(base.begin(), base.begin() + static_cast<long>(n));
        }
        for (std::size_t t = 0; t < n; ++t) x[t] += noise[t];
        const auto g = cross_correlogram(series("x", x), series("y", y), 7);
        std::size_t best = 0;
        for (std::size_t k = 0; k < g.gamma.size(); ++k) {
            if (std::fabs(g.gamma[k]) > std::fabs(g.gamma[best])) best = k;
        }
        hits += g.lags[best] == shift;
        agree += g.lags[best] == oracle::ccf_argmax(x, y, 7);
    }
    return {hits >= 48 && agree == pairs, std::to_string(hits) + "/50 planted shifts recovered, " + std::to_string(agree) +
                                                 "/50 match the direct-formula argmax"};
}

// ---------------------------------------------------------------------------
// 4. Granger calibration and power

Outcome granger_suite() {
    bool ok = true;
    std::string detail = "null rejection at 0.05:";
    for (int lag = 1; lag <= 4; ++lag) {
        std::mt19937_64 rng(100 + lag);
        int rejected = 0;
        for (int i = 0; i < 500; ++i) {
            const auto x = oracle::white_noise(rng, 66), y = oracle::white_noise(rng, 66);
            rejected += granger_test(series("y", y), series("x", x), lag).p_value < 0.05;
        }
        const double rate = rejected / 500.0;
        ok = ok && rate >= 0.02 && rate <= 0.10;
        detail += " n=" + std::to_string(lag) + " " + fmt("%.3f", rate);
    }
    std::mt19937_64 rng(999);
    int detected = 0;
    const int trials = 500;
    for (int i = 0; i < trials; ++i) {
        const auto x = oracle::white_noise(rng, 66);
        const auto e = oracle::white_noise(rng, 66, 0.25);
        std::vector<double> y(66);
        y[0] = e[0];
        for (std::size_t t = 1; t < 66; ++t) y[t] = 0.8 * x[t - 1] + e[t];
        detected += granger_test(series("y", y), series("x", x), 1).p_value < 0.01;
    }
    const double power = static_cast<double>(detected) / trials;
    ok = ok && power >= 0.95;
    return {ok, detail + "; power at 0.01 " + fmt("%.3f", power)};
}

// ---------------------------------------------------------------------------
// 5. ARIMA recovery

/// Conditional least-squares AR(1) coefficient by direct regression of x_t
/// on x_{t-1}, the independent reference for the fitted value.
double ar1_regression(const std::vector<double>& x) {
    double sxy = 0, sxx = 0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        sxy += x[t] * x[t - 1];
        sxx += x[t - 1] * x[t - 1];
    }
    return sxy / sxx;
}

Outcome arima_suite() {
    int ar_ok = 0, ma_ok = 0, roots_ok = 0, converged = 0;
    double worst = 0, worst_reference = 0;
    std::string misses;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (bool ar : {true, false}) {
            std::mt19937_64 rng(seed * 2 + (ar ? 0 : 1) + 300);
            const auto v = ar ? oracle::simulate_arma(rng, 300, {0.7}, {}) : oracle::simulate_arma(rng, 300, {}, {0.5});
            const auto m = fit_arima(series("y", v), ar ? ArimaSpec{1, 0, 0} : ArimaSpec{0, 0, 1});
            const double est = ar ? m.ar.at(0) : m.ma.at(0);
            const double err = std::fabs(est - (ar ? 0.7 : 0.5));
            worst = std::max(worst, err);
            if (ar) worst_reference = std::max(worst_reference, std::fabs(est - ar1_regression(v)));
            if (err <= 0.1) {
                (ar ? ar_ok : ma_ok) += 1;
            } else {
                misses += std::string(misses.empty() ? "" : ", ") + (ar ? "AR" : "MA") + " seed " + std::to_string(seed) +
                          fmt(" estimate %.4f", est) + (ar ? fmt(" (direct regression %.4f)", ar1_regression(v)) : "");
            }
            if (m.converged) {
                ++converged;
                roots_ok += m.min_ar_root > 1.0 && m.min_ma_root > 1.0;
            }
        }
    }
    return {ar_ok == 20 && ma_ok == 20 && roots_ok == converged,
            "AR(1) " + std::to_string(ar_ok) + "/20, MA(1) " + std::to_string(ma_ok) + "/20 within 0.1 (worst " +
                fmt("%.3f", worst) + (misses.empty() ? "" : "; " + misses) + "); AR fits agree with direct regression to " +
                fmt("%.1e", worst_reference) + "; roots outside the unit circle in " + std::to_string(roots_ok) + "/" +
                std::to_string(converged) + " converged fits"};
}

// ---------------------------------------------------------------------------
// 6. Forecast improvement protocol on fixtures

struct FixtureTarget {
    WeeklySeries target;
    std::vector<WeeklySeries> candidates;
};

/// The volatility index of the fixture's first security and its lagged
/// mood predictors, built through the full feature pipeline.
FixtureTarget fixture_target(std::uint64_t seed) {
    const auto fx = make_fixture(seed);
    const auto classifier = train(fx.training);
    const auto& sec = fx.securities.front();
    const SecurityInputs in{sec.label, sec.tweets, sec.ohlcv, sec.vix, sec.svi, std::nullopt, {}};
    AnalysisOptions opt;
    opt.seed = seed;
    opt.stages = stage_features | stage_factors;
    const auto a = analyze_security(in, &classifier, opt);
    auto prep = lagged_predictors(a.features->financial.vix, mood_series(a));
    return {std::move(prep.target), std::move(prep.candidates)};
}

Outcome forecast_protocol() {
    const int fixtures = 100;
    int improved = 0;
    double noise_delta = 0;
    for (int s = 0; s < fixtures; ++s) {
        const auto seed = static_cast<std::uint64_t>(s + 1);
        const auto ft = fixture_target(seed);
        const std::size_t split = split_point(ft.target.size(), 0.76);
        StepwiseOptions so;
        so.mining.fit.seed = seed;
        const auto with = rolling_forecast(emms_pipeline({true, so}), ft.target, ft.candidates, split);
        const auto without = rolling_forecast(emms_pipeline({false, so}), ft.target, ft.candidates, split);
        improved += with.mape < without.mape;

        std::mt19937_64 rng(seed * 7919);
        std::vector<WeeklySeries> noise;
        for (const auto& cnd : ft.candidates) {
            noise.emplace_back(cnd.name(), cnd.start(), oracle::white_noise(rng, cnd.size()));
        }
        const auto with_noise = rolling_forecast(emms_pipeline({true, so}), ft.target, noise, split);
        noise_delta += (with_noise.mape - without.mape) / without.mape;
    }
    noise_delta /= fixtures;
    return {improved >= 90 && std::fabs(noise_delta) <= 0.15,
            "mood predictors lower MAPE in " + std::to_string(improved) + "/100 fixtures; noise predictors change MAPE by " +
                fmt("%+.1f%%", 100 * noise_delta) + " on average"};
}

// ---------------------------------------------------------------------------
// 7. No look-ahead

Outcome tripwire() {
    const auto ft = fixture_target(42);
    const std::size_t split = split_point(ft.target.size(), 0.76);
    StepwiseOptions so;
    so.mining.fit.seed = 42;
    const auto pipeline = emms_pipeline({true, so});
    const auto clean = rolling_forecasts(pipeline, ft.target, ft.candidates, split);
    int compared = 0, equal = 0;
    for (double sentinel : {std::numeric_limits<double>::quiet_NaN(), 1e300, -1e300}) {
        for (std::size_t t = split; t < ft.target.size(); ++t) {
            std::vector<double> yv(ft.target.values().begin(), ft.target.values().end());
            for (std::size_t j = t; j < yv.size(); ++j) yv[j] = sentinel;
            std::vector<WeeklySeries> poisoned;
            for (const auto& x : ft.candidates) {
                std::vector<double> xv(x.values().begin(), x.values().end());
                for (std::size_t j = t + 1; j < xv.size(); ++j) xv[j] = sentinel;
                poisoned.emplace_back(x.name(), x.start(), std::move(xv));
            }
            const auto run = rolling_forecasts(pipeline, WeeklySeries(ft.target.name(), ft.target.start(), yv), poisoned,
                                               split, t);
            ++compared;
            // bitwise comparison; both sides are finite forecasts
            equal += run.points.back().forecast == clean.points[t - split].forecast &&
                     std::isfinite(run.points.back().forecast);
        }
    }
    return {equal == compared, std::to_string(equal) + "/" + std::to_string(compared) +
                                   " poisoned forecasts identical to the clean run (" +
                                   std::to_string(clean.trained.predictors.size()) + " predictors selected)"};
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "moodcast_acceptance_run";
    fs::remove_all(dir);
    write_fixture(make_fixture(42), dir);
    auto cfg = load_config(dir / "config.ini");
    cfg.out = dir / "run1";
    const auto first = run_pipeline(cfg);
    cfg.out = dir / "run2";
    const auto second = run_pipeline(cfg);
    if (first.exit_code() != 0 || second.exit_code() != 0) return {false, "a run failed"};

    const auto m1 = slurp(first.manifest), m2 = slurp(second.manifest);
    const auto manifest = nlohmann::json::parse(m1);
    std::size_t verified = 0;
    bool hashes_ok = true;
    for (const auto& f : manifest["files"]) {
        const auto path = f["path"].get<std::string>();
        for (const auto& root : {dir / "run1", dir / "run2"}) {
            hashes_ok = hashes_ok && sha256_hex(slurp(root / path)) == f["sha256"].get<std::string>();
        }
        ++verified;
    }
    fs::remove_all(dir);
    return {m1 == m2 && hashes_ok && manifest["complete"].get<bool>() && verified > 0,
            std::to_string(verified) + " artifacts, manifests " + (m1 == m2 ? "identical" : "differ") +
                (hashes_ok ? ", every file matches its recorded SHA-256" : ", hash mismatch")};
}

// ---------------------------------------------------------------------------
// 9. Incomplete beta against quadrature

Outcome incomplete_beta_oracle() {
    double worst = 0;
    int points = 0;
    for (double a : {0.5, 1.0, 2.5, 7.0, 20.0}) {
        for (double b : {0.6, 1.5, 4.0, 12.0, 31.0}) {
            for (double x : {0.03, 0.3, 0.62, 0.95}) {
                const double diff = std::fabs(special::incomplete_beta(a, b, x) - oracle::incomplete_beta_quadrature(a, b, x));
                worst = std::max(worst, diff);
                ++points;
            }
        }
    }
    return {worst <= 1e-8 && points == 100, std::to_string(points) + " grid points, max deviation " + fmt("%.2e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "formula examples", 1.0, formula_suite},
        {2, "eigen/varimax invariants on 20 seeds", 10.0, factor_suite},
        {3, "cross-correlation lag recovery", 5.0, ccf_suite},
        {4, "Granger calibration and power", 60.0, granger_suite},
        {5, "ARIMA parameter recovery", 60.0, arima_suite},
        {6, "forecast improvement on 100 fixtures", 300.0, forecast_protocol},
        {7, "no look-ahead tripwire", 0.0, tripwire},
        {8, "end-to-end determinism", 120.0, determinism},
        {9, "incomplete beta vs quadrature", 0.0, incomplete_beta_oracle},
    };
    std::set<int> only, allowed;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--allow-fail" && i + 1 < argc) {
            allowed.insert(std::atoi(argv[++i]));
        } else {
            only.insert(std::atoi(arg.c_str()));
        }
    }

    bool all_pass = true;
    std::vector<int> tolerated;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt("%.2f s", secs);
        if (c.limit_seconds > 0) {
            timing += fmt(" (limit %.0f s)", c.limit_seconds);
            if (secs >= c.limit_seconds) {
                o.pass = false;
                timing += " over the runtime limit";
            }
        }
        if (!o.pass && allowed.count(c.id)) {
            tolerated.push_back(c.id);
        } else {
            all_pass = all_pass && o.pass;
        }
        std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << c.title << ": " << o.detail
                  << " [" << timing << "]" << std::endl;
    }
    for (int id : tolerated) {
        std::cout << "note: criterion " << id << " failed and is listed with --allow-fail (known failure, see README)"
                  << std::endl;
    }
    return all_pass ? 0 : 1;
}
