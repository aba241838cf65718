#pragma once

#include "moodcast/errors.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/series.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace moodcast {

/// Synthetic stand-in for a weekly sentiment / search / market dataset.
///
/// Per security a latent mood L_t follows an AR(1). Tweets in week t are
/// positive with probability logistic(L_t); returns and the volatility index
/// respond to L_{t-1}; half of the search terms load on L_t, the other half
/// on an independent latent series.
struct FixtureOptions {
    std::size_t weeks = 66;
    std::vector<std::string> labels{"GLD", "USO"};
    double tweets_per_day = 30.0;
    std::size_t training_tweets = 2000;
    double latent_phi = 0.6;
    double return_loading = 1.5;  ///< R_t = loading * L_{t-1} + N(0, 1), percent
    double vix_level = 25.0;
    double vix_loading = 4.0;     ///< VIX_t = level + loading * L_{t-1} + N(0, vix_noise)
    double vix_noise = 0.6;
    std::chrono::sys_days first_friday = std::chrono::sys_days{std::chrono::year{2010} / 6 / 4};
};

struct SecurityFixture {
    std::string label;
    std::vector<TweetRecord> tweets;  ///< unlabeled
    std::vector<OhlcvWeekly> ohlcv;
    WeeklySeries vix;
    SviMatrix svi;
    WeeklySeries latent;  ///< the planted mood series, for tests
};

struct Fixture {
    std::uint64_t seed = 0;
    std::vector<TweetRecord> training;  ///< labeled classifier corpus
    std::vector<SecurityFixture> securities;
};

namespace detail {

inline constexpr std::array<std::string_view, 14> kPositiveWords{
    "bullish", "gain", "rally", "buy", "strong", "profit", "surge",
    "beat", "moon", "breakout", "green", "soaring", "winning", "upgrade"};
inline constexpr std::array<std::string_view, 14> kNegativeWords{
    "bearish", "loss", "crash", "sell", "weak", "fear", "drop",
    "miss", "dump", "red", "sinking", "plunge", "losing", "downgrade"};
inline constexpr std::array<std::string_view, 16> kNeutralWords{
    "market", "today", "price", "chart", "volume", "trading", "week", "news",
    "watch", "analysts", "earnings", "shares", "index", "fund", "session", "open"};
inline constexpr std::array<std::string_view, 6> kFillers{"the", "is", "on", "for", "this", "and"};

inline double logistic_of(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <class Rng>
std::string tweet_text(Rng& rng, bool positive, std::string_view ticker) {
    std::uniform_int_distribution<std::size_t> pol(0, kPositiveWords.size() - 1);
    std::uniform_int_distribution<std::size_t> neu(0, kNeutralWords.size() - 1);
    std::uniform_int_distribution<std::size_t> fil(0, kFillers.size() - 1);
    std::uniform_int_distribution<int> count(1, 2);
    std::bernoulli_distribution stray(0.15);
    std::bernoulli_distribution has_ticker(0.7);
    const auto& own = positive ? kPositiveWords : kNegativeWords;
    const auto& other = positive ? kNegativeWords : kPositiveWords;
    std::vector<std::string> words;
    if (has_ticker(rng)) words.push_back("$" + std::string(ticker));
    const int polar = count(rng);
    for (int i = 0; i < polar; ++i) words.emplace_back(own[pol(rng)]);
    if (stray(rng)) words.emplace_back(other[pol(rng)]);
    const int neutral = count(rng) + 1;
    for (int i = 0; i < neutral; ++i) words.emplace_back(kNeutralWords[neu(rng)]);
    words.emplace_back(kFillers[fil(rng)]);
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    if (positive && stray(rng)) text += "!";
    return text;
}

/// AR(1) with unit innovations, `burn` discarded steps, n + 1 kept values
/// (index 0 is the pre-sample value L_{-1}).
template <class Rng>
std::vector<double> ar1_path(Rng& rng, std::size_t n, double phi, std::size_t burn = 50) {
    std::normal_distribution<double> z(0.0, 1.0);
    double x = 0.0;
    for (std::size_t i = 0; i < burn; ++i) x = phi * x + z(rng);
    std::vector<double> out(n + 1);
    for (auto& v : out) {
        x = phi * x + z(rng);
        v = x;
    }
    return out;
}

}  // namespace detail

/// Generates a fixture fully determined by `seed`.
[[nodiscard]] inline Fixture make_fixture(std::uint64_t seed, const FixtureOptions& opt = {}) {
    using namespace std::chrono;
    if (opt.weeks < 20) throw DomainError("fixture needs at least 20 weeks");
    if (opt.labels.empty()) throw DomainError("fixture needs at least one security");
    if (weekday{opt.first_friday} != Friday) throw DomainError("fixture start must be a Friday");

    Fixture fx;
    fx.seed = seed;
    const WeekStamp first(opt.first_friday);
    const WeekStamp last = first + static_cast<long>(opt.weeks - 1);

    {
        std::seed_seq ss{seed, std::uint64_t{0xC1A55}};
        std::mt19937_64 rng(ss);
        std::bernoulli_distribution coin(0.5);
        std::uniform_int_distribution<long> secs(0, 86399);
        for (std::size_t i = 0; i < opt.training_tweets; ++i) {
            const bool positive = coin(rng);
            const auto ts = sys_seconds{opt.first_friday - days{400}} + seconds{secs(rng)} + days{static_cast<long>(i % 300)};
            fx.training.push_back({"train-" + std::to_string(i), ts, detail::tweet_text(rng, positive, "MKT"),
                                   positive ? Sentiment::positive : Sentiment::negative});
        }
    }

    for (std::size_t s = 0; s < opt.labels.size(); ++s) {
        const auto& label = opt.labels[s];
        std::seed_seq ss{seed, std::uint64_t{s + 1}};
        std::mt19937_64 rng(ss);
        std::normal_distribution<double> z(0.0, 1.0);

        // path[0] is L_{-1}; week i uses path[i + 1], its lag path[i].
        const auto mood = detail::ar1_path(rng, opt.weeks, opt.latent_phi);
        const auto other = detail::ar1_path(rng, opt.weeks, opt.latent_phi);
        auto mood_at = [&](std::size_t week) { return mood[week + 1]; };

        SecurityFixture sec{label, {}, {}, WeeklySeries("vix", first, {0.0}), {},
                            WeeklySeries("latent", first, std::vector<double>(mood.begin() + 1, mood.end()))};

        // Tweets: from the Saturday before the first closing Friday through the
        // last closing Friday at 21:00.
        std::poisson_distribution<int> per_day(opt.tweets_per_day);
        std::uniform_int_distribution<long> secs(0, 86399);
        std::size_t id = 0;
        const auto day0 = opt.first_friday - days{6};
        const auto day1 = last.week_end();
        for (auto day = day0; day <= day1; day += days{1}) {
            const int k = per_day(rng);
            std::vector<long> stamps(static_cast<std::size_t>(k));
            for (auto& st : stamps) st = secs(rng);
            std::sort(stamps.begin(), stamps.end());
            for (long st : stamps) {
                const sys_seconds ts = sys_seconds{day} + seconds{st};
                const auto slot = window_slot(ts);
                if (slot.week < first || slot.week > last) continue;
                const auto week = static_cast<std::size_t>(slot.week.weeks_since(first));
                std::bernoulli_distribution positive(detail::logistic_of(mood_at(week)));
                sec.tweets.push_back({label + "-" + std::to_string(id++), ts,
                                      detail::tweet_text(rng, positive(rng), label), std::nullopt});
            }
        }

        // Market data driven by last week's mood.
        double close = 100.0 / static_cast<double>(s + 1);
        std::normal_distribution<double> range(0.0, 0.01);
        std::normal_distribution<double> log_volume(15.0, 0.3);
        std::normal_distribution<double> vix_noise(0.0, opt.vix_noise);
        std::vector<double> vix(opt.weeks);
        for (std::size_t i = 0; i < opt.weeks; ++i) {
            const double lagged = mood[i];
            const double ret = opt.return_loading * lagged + z(rng);
            const double open = close;
            close = open * std::exp(ret / 100.0);
            OhlcvWeekly bar;
            bar.week = first + static_cast<long>(i);
            bar.open = open;
            bar.close = close;
            bar.high = std::max(open, close) * std::exp(std::fabs(range(rng)));
            bar.low = std::min(open, close) * std::exp(-std::fabs(range(rng)));
            bar.volume = std::round(std::exp(log_volume(rng)));
            sec.ohlcv.push_back(bar);
            vix[i] = opt.vix_level + opt.vix_loading * lagged + vix_noise(rng);
        }
        sec.vix = WeeklySeries("vix", first, std::move(vix));

        // Search volumes: three terms on the mood, three on an independent latent.
        const double latent_sd = 1.0 / std::sqrt(1.0 - opt.latent_phi * opt.latent_phi);
        sec.svi.terms = {label + " price", label + " buy", label + " news",
                         "recession", "unemployment", "inflation"};
        for (std::size_t i = 0; i < opt.weeks; ++i) {
            sec.svi.weeks.push_back(first + static_cast<long>(i));
            for (std::size_t c = 0; c < sec.svi.terms.size(); ++c) {
                const double f = (c < 3 ? mood_at(i) : other[i + 1]) / latent_sd;
                sec.svi.volumes.push_back(std::max(0.0, 50.0 + 10.0 * (0.85 * f + 0.3 * z(rng))));
            }
        }
        fx.securities.push_back(std::move(sec));
    }
    return fx;
}

namespace detail {
inline std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
}
}  // namespace detail

/// Writes the fixture as input files plus a ready-to-run `config.ini`.
/// SVI rows are dated on the Monday of each week, like downloaded extracts.
inline void write_fixture(const Fixture& fx, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());

    {
        auto out = detail::open_for_write(dir / "training.csv");
        write_tweets(out, fx.training, TweetFormat::csv);
    }
    std::string config = "# synthetic fixture, seed " + std::to_string(fx.seed) +
                         "\nseed = " + std::to_string(fx.seed) +
                         "\nout = out\nsplit = 0.76\nlags = 1,2,3,4\nccf_max_lag = 7\n"
                         "classifier_training = training.csv\nvix_transform = log\n";
    for (const auto& s : fx.securities) {
        const fs::path sub = dir / s.label;
        fs::create_directories(sub, ec);
        if (ec) throw DataError("cannot create '" + sub.string() + "': " + ec.message());
        {
            auto out = detail::open_for_write(sub / "tweets.csv");
            write_tweets(out, s.tweets, TweetFormat::csv);
        }
        {
            auto out = detail::open_for_write(sub / "ohlcv.csv");
            write_ohlcv(out, s.ohlcv);
        }
        {
            auto out = detail::open_for_write(sub / "vix.csv");
            write_weekly_series(out, s.vix);
        }
        {
            auto out = detail::open_for_write(sub / "svi.csv");
            std::vector<std::string> header{"date"};
            header.insert(header.end(), s.svi.terms.begin(), s.svi.terms.end());
            csv::write_row(out, header);
            for (std::size_t r = 0; r < s.svi.rows(); ++r) {
                std::vector<std::string> f{format_date(s.svi.weeks[r].week_end() - std::chrono::days{4})};
                for (std::size_t c = 0; c < s.svi.cols(); ++c) f.push_back(csv::format_number(s.svi(r, c)));
                csv::write_row(out, f);
            }
        }
        config += "\n[security." + s.label + "]\ntweets = " + s.label + "/tweets.csv\nohlcv = " + s.label +
                  "/ohlcv.csv\nvix = " + s.label + "/vix.csv\nsvi = " + s.label + "/svi.csv\n";
    }
    auto out = detail::open_for_write(dir / "config.ini");
    out << config;
}

}  // namespace moodcast
