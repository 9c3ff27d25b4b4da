// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Post-to-reaction delay statistics: the empirical delay filter used to
// shift reaction profiles, its cumulative curve, and the time by which a
// given fraction of reactions has arrived.

#pragma once

#include <besttime/error.hpp>
#include <besttime/grid.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace besttime {

struct DelayPair
{
    EpochSeconds post_time = 0;
    EpochSeconds reaction_time = 0;

    EpochSeconds delay() const noexcept { return reaction_time - post_time; }
};

//! Discrete distribution of reaction delay over lags [m*w, (m+1)*w) inside
//! a finite window.
class PTRFilter
{
public:
    static constexpr EpochSeconds kDefaultWindow = kDaySeconds;
    static constexpr EpochSeconds kDefaultLagWidth = 900;

    PTRFilter(std::vector<double> mass, EpochSeconds lag_width)
        : mass_(std::move(mass)), lag_width_(lag_width) {
        if (lag_width_ <= 0)
            throw ValidationError("lag_width", "must be positive");
        check_kernel(mass_);
    }

    //! All mass at lag `lag`.
    static PTRFilter delta(std::size_t lag, std::size_t lags = 96,
                           EpochSeconds lag_width = kDefaultLagWidth) {
        std::vector<double> m(std::max(lags, lag + 1), 0.0);
        m[lag] = 1.0;
        return PTRFilter(std::move(m), lag_width);
    }

    std::span<const double> mass() const noexcept { return mass_; }
    std::size_t lags() const noexcept { return mass_.size(); }
    EpochSeconds lag_width() const noexcept { return lag_width_; }
    EpochSeconds window() const noexcept {
        return lag_width_ * static_cast<EpochSeconds>(mass_.size());
    }

    double operator[](std::size_t m) const { return mass_[m]; }

private:
    std::vector<double> mass_;
    EpochSeconds lag_width_;
};

inline ActionProfile delayed_profile(const ActionProfile& reactions, const PTRFilter& filter) {
    return delayed_profile(reactions, filter.mass());
}

inline std::size_t lag_count(EpochSeconds window, EpochSeconds lag_width) {
    if (lag_width <= 0 || window <= 0 || window % lag_width != 0)
        throw ValidationError("window", "must be a positive multiple of lag_width");
    return static_cast<std::size_t>(window / lag_width);
}

//! Delay counts per lag. Shards fill their own histogram and merge.
class DelayHistogram
{
public:
    DelayHistogram(EpochSeconds window = PTRFilter::kDefaultWindow,
                   EpochSeconds lag_width = PTRFilter::kDefaultLagWidth)
        : counts_(lag_count(window, lag_width), 0), lag_width_(lag_width), window_(window) { }

    void add(EpochSeconds delay) {
        if (delay < 0)
            return;
        if (delay >= window_) {
            ++out_of_window_;
            return;
        }
        ++counts_[static_cast<std::size_t>(delay / lag_width_)];
        ++in_window_;
    }

    void add(const DelayPair& p) { add(p.delay()); }

    void merge(const DelayHistogram& other) {
        if (other.counts_.size() != counts_.size() || other.lag_width_ != lag_width_)
            throw ValidationError("histogram", "cannot merge histograms on different lags");
        for (std::size_t m = 0; m < counts_.size(); ++m)
            counts_[m] += other.counts_[m];
        in_window_ += other.in_window_;
        out_of_window_ += other.out_of_window_;
    }

    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::uint64_t in_window() const noexcept { return in_window_; }
    std::uint64_t out_of_window() const noexcept { return out_of_window_; }
    EpochSeconds lag_width() const noexcept { return lag_width_; }

    PTRFilter to_filter() const {
        if (in_window_ == 0)
            throw InsufficientData("no reaction delays inside the filter window");
        std::vector<double> mass(counts_.size());
        const double n = static_cast<double>(in_window_);
        for (std::size_t m = 0; m < counts_.size(); ++m)
            mass[m] = static_cast<double>(counts_[m]) / n;
        return PTRFilter(std::move(mass), lag_width_);
    }

    //! Fraction of in-window delays at or below the end of each lag.
    std::vector<double> cumulative() const {
        if (in_window_ == 0)
            throw InsufficientData("no reaction delays inside the filter window");
        std::vector<double> curve(counts_.size());
        std::uint64_t running = 0;
        const double n = static_cast<double>(in_window_);
        for (std::size_t m = 0; m < counts_.size(); ++m) {
            running += counts_[m];
            curve[m] = static_cast<double>(running) / n;
        }
        return curve;
    }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t in_window_ = 0;
    std::uint64_t out_of_window_ = 0;
    EpochSeconds lag_width_;
    EpochSeconds window_;
};

inline PTRFilter estimate_ptr(std::span<const DelayPair> pairs,
                              EpochSeconds window = PTRFilter::kDefaultWindow,
                              EpochSeconds lag_width = PTRFilter::kDefaultLagWidth) {
    DelayHistogram h(window, lag_width);
    for (const auto& p : pairs)
        h.add(p);
    return h.to_filter();
}

inline std::vector<double> cumulative_curve(std::span<const DelayPair> pairs,
                                            EpochSeconds window = PTRFilter::kDefaultWindow,
                                            EpochSeconds lag_width = PTRFilter::kDefaultLagWidth) {
    DelayHistogram h(window, lag_width);
    for (const auto& p : pairs)
        h.add(p);
    return h.cumulative();
}

//! Smallest delay t such that at least a fraction p of the in-window delays
//! are <= t.
inline EpochSeconds time_to_fraction(std::span<const DelayPair> pairs, double p,
                                     EpochSeconds window = PTRFilter::kDefaultWindow) {
    if (!(p > 0.0 && p <= 1.0))
        throw ValidationError("p", "fraction must lie in (0, 1]");
    std::vector<EpochSeconds> delays;
    delays.reserve(pairs.size());
    for (const auto& pr : pairs) {
        const EpochSeconds d = pr.delay();
        if (d >= 0 && d < window)
            delays.push_back(d);
    }
    if (delays.empty())
        throw InsufficientData("no reaction delays inside the window");
    const double n = static_cast<double>(delays.size());
    // Guard p*n landing one ulp above an integer.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, delays.size());
    auto nth = delays.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(delays.begin(), nth, delays.end());
    return *nth;
}

inline double total_variation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        tv += std::abs(x - y);
    }
    return 0.5 * tv;
}

//! Two-column table: lag_start_seconds, probability.
inline void write_filter_table(std::ostream& os, const PTRFilter& f) {
    os << "# lag_start_seconds\tprobability\n";
    char buf[64];
    for (std::size_t m = 0; m < f.lags(); ++m) {
        std::snprintf(buf, sizeof(buf), "%lld\t%.17g\n",
                      static_cast<long long>(static_cast<EpochSeconds>(m) * f.lag_width()),
                      f[m]);
        os << buf;
    }
}

inline PTRFilter read_filter_table(std::istream& is) {
    std::vector<double> mass;
    std::vector<EpochSeconds> starts;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        long long start = 0;
        double p = 0.0;
        if (!(ls >> start >> p))
            throw IoError("malformed filter table line: " + line);
        starts.push_back(start);
        mass.push_back(p);
    }
    if (mass.empty())
        throw IoError("empty filter table");
    const EpochSeconds width = starts.size() > 1 ? starts[1] - starts[0] : PTRFilter::kDefaultLagWidth;
    for (std::size_t m = 0; m < starts.size(); ++m)
        if (starts[m] != static_cast<EpochSeconds>(m) * width)
            throw IoError("filter table lags are not evenly spaced from zero");
    return PTRFilter(std::move(mass), width);
}

} // namespace besttime
