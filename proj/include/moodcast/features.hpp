#pragma once

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/series.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace moodcast {

namespace detail {
inline void check_counts(double pos, double neg) {
    if (!(pos >= 0.0) || !(neg >= 0.0) || !std::isfinite(pos) || !std::isfinite(neg)) {
        throw DomainError("message counts must be finite and non-negative");
    }
}
}  // namespace detail

/// ln((1 + pos) / (1 + neg))
[[nodiscard]] inline double bullishness(double pos, double neg) {
    detail::check_counts(pos, neg);
    return std::log1p(pos) - std::log1p(neg);
}

/// 1 - sqrt(1 - |pos - neg| / (pos + neg)); nullopt for an empty window.
/// The absolute value keeps bearish unanimity at 1, like bullish unanimity.
[[nodiscard]] inline std::optional<double> agreement(double pos, double neg) {
    detail::check_counts(pos, neg);
    const double total = pos + neg;
    if (total == 0.0) return std::nullopt;
    return 1.0 - std::sqrt(1.0 - std::fabs(pos - neg) / total);
}

/// ln(1 + count); the shift keeps silent windows finite.
[[nodiscard]] inline double message_volume(std::size_t count) {
    return std::log1p(static_cast<double>(count));
}

/// Percent log returns, 100 * (ln C_t - ln C_{t-1}). First week is dropped.
[[nodiscard]] inline WeeklySeries weekly_returns(const WeeklySeries& close) {
    if (close.size() < 2) throw InsufficientDataError("returns need at least two closes");
    const auto logs = log_transform(close);
    std::vector<double> r(close.size() - 1);
    for (std::size_t i = 1; i < close.size(); ++i) r[i - 1] = (logs[i] - logs[i - 1]) * 100.0;
    return WeeklySeries("returns", close.start() + 1, std::move(r));
}

struct GarmanKlass {
    double sigma = 0.0;
    std::size_t clamped_bars = 0;  ///< bars whose term went negative and was set to 0
};

/// Garman-Klass range volatility over `bars`:
/// sqrt(mean(0.5 ln(H/L)^2 - (2 ln 2 - 1) ln(C/O)^2)). Per-bar terms below
/// zero (degenerate bars with H == L but C != O) are clamped to zero and counted.
[[nodiscard]] inline GarmanKlass gk_volatility(std::span<const OhlcvWeekly> bars) {
    if (bars.empty()) throw InsufficientDataError("Garman-Klass volatility needs at least one bar");
    static const double k = 2.0 * std::log(2.0) - 1.0;
    GarmanKlass out;
    double sum = 0.0;
    for (const auto& b : bars) {
        if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0)) {
            throw DomainError("non-positive price in bar for week " + b.week.to_string());
        }
        const double hl = std::log(b.high / b.low);
        const double co = std::log(b.close / b.open);
        double term = 0.5 * hl * hl - k * co * co;
        if (term < 0.0) {
            term = 0.0;
            ++out.clamped_bars;
        }
        sum += term;
    }
    out.sigma = std::sqrt(sum / static_cast<double>(bars.size()));
    return out;
}

// ---------------------------------------------------------------------------

/// Positive/negative counts in the two windows of one week.
struct WindowTally {
    std::size_t positive_wd = 0;
    std::size_t negative_wd = 0;
    std::size_t positive_wk = 0;
    std::size_t negative_wk = 0;

    friend bool operator==(const WindowTally&, const WindowTally&) = default;
};

[[nodiscard]] inline std::map<WeekStamp, WindowTally> tally_windows(const WeeklyWindows& windows) {
    std::map<WeekStamp, WindowTally> out;
    auto count = [](const std::vector<TweetRecord>& bucket, std::size_t& pos, std::size_t& neg) {
        for (const auto& t : bucket) {
            if (!t.label) throw DomainError("tweet '" + t.id + "' is unlabeled");
            (*t.label == Sentiment::positive ? pos : neg)++;
        }
    };
    for (const auto& [week, b] : windows.weeks) {
        auto& t = out[week];
        count(b.weekday, t.positive_wd, t.negative_wd);
        count(b.weekend, t.positive_wk, t.negative_wk);
    }
    return out;
}

struct TwitterFeatureSet {
    std::string security;
    std::vector<WeeklySeries> series;  ///< canonical order, see twitter_feature_names()
};

[[nodiscard]] inline const std::vector<std::string>& twitter_feature_names() {
    static const std::vector<std::string> names{
        "positive_wd", "negative_wd", "bullishness_wd", "msg_volume_wd", "agreement_wd",
        "positive_wk", "negative_wk", "bullishness_wk", "msg_volume_wk", "agreement_wk"};
    return names;
}

/// Raw levels. Log transforms for analysis are applied downstream.
struct SecurityFeatures {
    std::string security;
    WeeklySeries close;
    WeeklySeries returns;
    WeeklySeries volatility;
    WeeklySeries log_volume;
    WeeklySeries vix;

    [[nodiscard]] std::vector<WeeklySeries> all() const { return {close, returns, volatility, log_volume, vix}; }
};

struct FeatureBundle {
    TwitterFeatureSet twitter;
    SecurityFeatures financial;
    std::size_t clamped_volatility_bars = 0;
};

/// Tallies are expected gapless; weeks inside the tally range without an
/// entry count as silent. All eleven-plus series come out aligned.
[[nodiscard]] inline FeatureBundle build_feature_sets(const std::string& security,
                                                      const std::map<WeekStamp, WindowTally>& tallies,
                                                      const std::vector<OhlcvWeekly>& ohlcv,
                                                      const WeeklySeries& vix,
                                                      const std::optional<WeeklySeries>& price = std::nullopt) {
    if (tallies.empty()) throw InsufficientDataError(security + ": no sentiment windows");
    if (ohlcv.size() < 2) throw InsufficientDataError(security + ": need at least two OHLCV bars");

    const WeekStamp t0 = tallies.begin()->first;
    const WeekStamp t1 = tallies.rbegin()->first;
    const auto nweeks = static_cast<std::size_t>(t1.weeks_since(t0)) + 1;
    std::vector<std::vector<double>> tw(10, std::vector<double>(nweeks));
    for (std::size_t i = 0; i < nweeks; ++i) {
        const auto it = tallies.find(t0 + static_cast<long>(i));
        const WindowTally t = it == tallies.end() ? WindowTally{} : it->second;
        auto fill = [&](std::size_t base, std::size_t pos, std::size_t neg) {
            const auto p = static_cast<double>(pos);
            const auto n = static_cast<double>(neg);
            tw[base + 0][i] = p;
            tw[base + 1][i] = n;
            tw[base + 2][i] = bullishness(p, n);
            tw[base + 3][i] = message_volume(pos + neg);
            tw[base + 4][i] = agreement(p, n).value_or(kMissing);
        };
        fill(0, t.positive_wd, t.negative_wd);
        fill(5, t.positive_wk, t.negative_wk);
    }

    std::vector<double> close, vol, logv;
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < ohlcv.size(); ++i) {
        if (i > 0 && ohlcv[i].week.weeks_since(ohlcv[i - 1].week) != 1) {
            throw DataError(security + ": OHLCV bars are not consecutive weeks");
        }
        close.push_back(ohlcv[i].close);
        const auto gk = gk_volatility(std::span<const OhlcvWeekly>(&ohlcv[i], 1));
        clamped += gk.clamped_bars;
        vol.push_back(gk.sigma);
        logv.push_back(ohlcv[i].volume > 0 ? std::log(ohlcv[i].volume) : kMissing);
    }
    const WeekStamp b0 = ohlcv.front().week;
    WeeklySeries close_s = price ? price->renamed("close") : WeeklySeries("close", b0, close);

    std::vector<WeeklySeries> all;
    const auto& names = twitter_feature_names();
    for (std::size_t k = 0; k < 10; ++k) all.emplace_back(names[k], t0, std::move(tw[k]));
    all.push_back(close_s);
    all.push_back(weekly_returns(close_s));
    all.emplace_back("volatility", b0, std::move(vol));
    all.emplace_back("log_volume", b0, std::move(logv));
    all.push_back(vix.renamed("vix"));

    auto aligned = align(all);
    FeatureBundle out{TwitterFeatureSet{security, {aligned.begin(), aligned.begin() + 10}},
                      SecurityFeatures{security, aligned[10], aligned[11], aligned[12], aligned[13], aligned[14]},
                      clamped};
    return out;
}

/// Wide CSV: week plus one column per series; empty cells for missing values.
/// All series must share one week range.
inline void write_wide_csv(std::ostream& out, const std::vector<WeeklySeries>& series) {
    if (series.empty()) return;
    std::vector<std::string> header{"week"};
    for (const auto& s : series) {
        if (s.start() != series.front().start() || s.size() != series.front().size()) {
            throw AlignmentError("wide CSV needs aligned series; '" + s.name() + "' differs");
        }
        header.push_back(s.name());
    }
    csv::write_row(out, header);
    for (std::size_t i = 0; i < series.front().size(); ++i) {
        std::vector<std::string> row{series.front().week(i).to_string()};
        for (const auto& s : series) row.push_back(csv::format_number(s[i]));
        csv::write_row(out, row);
    }
}

}  // namespace moodcast
