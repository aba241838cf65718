#pragma once

#include "moodcast/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace moodcast {

namespace chr = std::chrono;

/// Marker for an explicitly missing weekly observation.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

[[nodiscard]] inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// "YYYY-MM-DD"
[[nodiscard]] inline std::string format_date(chr::sys_days day) {
    const chr::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Friday on or after `day`. Saturdays and Sundays therefore belong to the
/// following trading week, Monday..Friday to their own.
[[nodiscard]] inline chr::sys_days closing_friday(chr::sys_days day) noexcept {
    const unsigned wd = chr::weekday{day}.c_encoding();  // Sunday = 0
    const int ahead = (5 - static_cast<int>(wd) + 7) % 7;
    return day + chr::days{ahead};
}

/// A trading week, identified by the Friday on which it closes (21:00 UTC).
class WeekStamp {
public:
    WeekStamp() = default;

    /// Throws DomainError unless `friday` is a Friday.
    explicit WeekStamp(chr::sys_days friday) : week_end_(friday) {
        if (chr::weekday{friday} != chr::Friday) {
            throw DomainError("week stamp " + format_date(friday) + " is not a Friday");
        }
    }

    /// Week containing `day` (see closing_friday).
    [[nodiscard]] static WeekStamp containing(chr::sys_days day) {
        return WeekStamp(closing_friday(day));
    }

    [[nodiscard]] chr::sys_days week_end() const noexcept { return week_end_; }
    [[nodiscard]] int year() const noexcept {
        return static_cast<int>(chr::year_month_day{week_end_}.year());
    }
    [[nodiscard]] std::string to_string() const { return format_date(week_end_); }

    [[nodiscard]] WeekStamp operator+(long weeks) const noexcept {
        WeekStamp w;
        w.week_end_ = week_end_ + chr::days{7 * weeks};
        return w;
    }
    [[nodiscard]] WeekStamp operator-(long weeks) const noexcept { return *this + (-weeks); }

    /// Signed number of weeks from `other` to *this.
    [[nodiscard]] long weeks_since(const WeekStamp& other) const noexcept {
        return (week_end_ - other.week_end_).count() / 7;
    }

    friend auto operator<=>(const WeekStamp&, const WeekStamp&) = default;

private:
    chr::sys_days week_end_{chr::sys_days{chr::days{1}}};  // 1970-01-02, a Friday
};

/// A named, gapless run of weekly observations. Missing weeks are NaN.
class WeeklySeries {
public:
    WeeklySeries(std::string name, WeekStamp start, std::vector<double> values)
        : name_(std::move(name)), start_(start), values_(std::move(values)) {
        if (name_.empty()) throw DomainError("weekly series needs a name");
        if (values_.empty()) throw DomainError("weekly series '" + name_ + "' is empty");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (std::isinf(values_[i])) {
                throw DomainError("series '" + name_ + "' has an infinite value at week " +
                                  (start_ + static_cast<long>(i)).to_string());
            }
        }
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] WeekStamp start() const noexcept { return start_; }
    [[nodiscard]] WeekStamp last() const noexcept {
        return start_ + static_cast<long>(values_.size()) - 1;
    }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] WeekStamp week(std::size_t i) const noexcept {
        return start_ + static_cast<long>(i);
    }
    [[nodiscard]] bool covers(WeekStamp w) const noexcept { return w >= start_ && w <= last(); }
    /// Value at week `w`, which must be covered.
    [[nodiscard]] double at(WeekStamp w) const {
        if (!covers(w)) throw DomainError("series '" + name_ + "' does not cover " + w.to_string());
        return values_[static_cast<std::size_t>(w.weeks_since(start_))];
    }
    [[nodiscard]] bool has_missing() const noexcept {
        return std::any_of(values_.begin(), values_.end(), [](double v) { return is_missing(v); });
    }

    [[nodiscard]] WeeklySeries renamed(std::string name) const {
        return WeeklySeries(std::move(name), start_, values_);
    }

    /// Sub-range [first, last], both inclusive and covered.
    [[nodiscard]] WeeklySeries slice(WeekStamp first, WeekStamp last) const {
        if (!covers(first) || !covers(last) || last < first) {
            throw DomainError("slice " + first.to_string() + ".." + last.to_string() +
                              " outside series '" + name_ + "'");
        }
        const auto b = static_cast<std::ptrdiff_t>(first.weeks_since(start_));
        const auto e = static_cast<std::ptrdiff_t>(last.weeks_since(start_)) + 1;
        return WeeklySeries(name_, first, {values_.begin() + b, values_.begin() + e});
    }

    friend bool operator==(const WeeklySeries& a, const WeeklySeries& b) {
        if (a.name_ != b.name_ || a.start_ != b.start_ || a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double x = a.values_[i];
            const double y = b.values_[i];
            if (!(x == y || (is_missing(x) && is_missing(y)))) return false;
        }
        return true;
    }

private:
    std::string name_;
    WeekStamp start_;
    std::vector<double> values_;
};

/// Truncates every series to the common week range, preserving order.
[[nodiscard]] inline std::vector<WeeklySeries> align(const std::vector<WeeklySeries>& series) {
    if (series.empty()) return {};
    WeekStamp first = series.front().start();
    WeekStamp last = series.front().last();
    for (const auto& s : series) {
        first = std::max(first, s.start());
        last = std::min(last, s.last());
    }
    if (last < first) {
        // name the pair that fails to overlap
        std::string culprit;
        for (std::size_t i = 0; i < series.size() && culprit.empty(); ++i) {
            for (std::size_t j = i + 1; j < series.size(); ++j) {
                if (series[i].last() < series[j].start() || series[j].last() < series[i].start()) {
                    culprit = "'" + series[i].name() + "' and '" + series[j].name() + "'";
                    break;
                }
            }
        }
        throw AlignmentError("series " + culprit + " have no weeks in common");
    }
    std::vector<WeeklySeries> out;
    out.reserve(series.size());
    for (const auto& s : series) out.push_back(s.slice(first, last));
    return out;
}

/// Value at week t of the result equals the input at week t-k.
[[nodiscard]] inline WeeklySeries lag(const WeeklySeries& s, long k) {
    const auto n = static_cast<long>(s.size());
    if (std::labs(k) >= n) {
        throw DomainError("lag " + std::to_string(k) + " exhausts series '" + s.name() +
                          "' of length " + std::to_string(n));
    }
    const auto v = s.values();
    if (k >= 0) {
        return WeeklySeries(s.name(), s.start() + k, {v.begin(), v.end() - k});
    }
    return WeeklySeries(s.name(), s.start(), {v.begin() - k, v.end()});
}

/// d-th order first differences; each pass drops the first week.
[[nodiscard]] inline WeeklySeries difference(const WeeklySeries& s, int d) {
    if (d < 0) throw DomainError("difference order must be non-negative");
    if (static_cast<std::size_t>(d) >= s.size()) {
        throw DomainError("difference order " + std::to_string(d) + " exhausts series '" +
                          s.name() + "'");
    }
    std::vector<double> v(s.values().begin(), s.values().end());
    for (int pass = 0; pass < d; ++pass) {
        for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
        v.pop_back();
    }
    return WeeklySeries(s.name(), s.start() + d, std::move(v));
}

/// Natural logarithm, elementwise. Missing stays missing.
[[nodiscard]] inline WeeklySeries log_transform(const WeeklySeries& s) {
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = s[i];
        if (is_missing(v)) {
            out[i] = kMissing;
            continue;
        }
        if (v <= 0.0) {
            throw DomainError("log of non-positive value " + std::to_string(v) + " in '" +
                              s.name() + "' at week " + s.week(i).to_string());
        }
        out[i] = std::log(v);
    }
    return WeeklySeries(s.name(), s.start(), std::move(out));
}

}  // namespace moodcast
