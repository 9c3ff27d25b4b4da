// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Weekly bucket grid, action profiles and schedules.
//
// A profile is a histogram of events over the buckets of one week. Events
// from many weeks fold into the same bucket, so every transform here treats
// the vector as periodic.

#pragma once

#include <besttime/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace besttime {

using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kDaySeconds = 86400;
inline constexpr EpochSeconds kWeekSeconds = 7 * kDaySeconds;
inline constexpr int kMaxTzOffsetMinutes = 14 * 60;

//! Tolerance on unit-sum checks.
inline constexpr double kSumTolerance = 1e-9;

inline void check_tz_offset(int tz_offset_minutes) {
    if (tz_offset_minutes < -kMaxTzOffsetMinutes ||
        tz_offset_minutes > kMaxTzOffsetMinutes)
        throw ValidationError("tz_offset",
                              "offset " + std::to_string(tz_offset_minutes) +
                                  " min outside [-840, 840]");
}

//! Partition of one week into equal half-open buckets. Bucket 0 starts at
//! Monday 00:00 local time.
class WeeklyGrid
{
public:
    static constexpr EpochSeconds kDefaultBucketWidth = 900;

    WeeklyGrid() = default;

    explicit WeeklyGrid(EpochSeconds bucket_width) : width_(bucket_width) {
        if (bucket_width <= 0 || kWeekSeconds % bucket_width != 0)
            throw ValidationError(
                "bucket_width",
                "must be a positive divisor of 604800 seconds, got " +
                    std::to_string(bucket_width));
    }

    //! Grid with `buckets` equal buckets per week (toy grids in tests).
    static WeeklyGrid with_buckets(std::size_t buckets) {
        if (buckets == 0 || kWeekSeconds % static_cast<EpochSeconds>(buckets) != 0)
            throw ValidationError("buckets_per_period",
                                  "must divide 604800, got " + std::to_string(buckets));
        return WeeklyGrid(kWeekSeconds / static_cast<EpochSeconds>(buckets));
    }

    EpochSeconds bucket_width() const noexcept { return width_; }

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(kWeekSeconds / width_);
    }

    //! Index of the bucket containing `timestamp` shifted into local time.
    std::size_t bucket_index(EpochSeconds timestamp, int tz_offset_minutes = 0) const {
        // 1970-01-01 was a Thursday: three days past the Monday origin.
        const EpochSeconds local = timestamp + EpochSeconds{tz_offset_minutes} * 60 +
                                   3 * kDaySeconds;
        EpochSeconds in_week = local % kWeekSeconds;
        if (in_week < 0)
            in_week += kWeekSeconds;
        return static_cast<std::size_t>(in_week / width_);
    }

    //! Day of week of a bucket, 0 = Monday .. 6 = Sunday.
    int day_of_week(std::size_t bucket) const noexcept {
        return static_cast<int>(static_cast<EpochSeconds>(bucket) * width_ / kDaySeconds);
    }

    bool is_weekday(std::size_t bucket) const noexcept { return day_of_week(bucket) < 5; }

    //! "Mon 09:15" style label of the bucket start.
    std::string label(std::size_t bucket) const {
        static constexpr std::array<const char*, 7> days = {"Mon", "Tue", "Wed", "Thu",
                                                            "Fri", "Sat", "Sun"};
        const EpochSeconds start = static_cast<EpochSeconds>(bucket) * width_;
        const EpochSeconds sec = start % kDaySeconds;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s %02d:%02d", days[day_of_week(bucket)],
                      static_cast<int>(sec / 3600), static_cast<int>(sec % 3600 / 60));
        return buf;
    }

    //! Number of whole buckets spanned by an offset, rounded to nearest.
    long offset_buckets(long minutes) const noexcept {
        return std::lround(static_cast<double>(minutes) * 60.0 / static_cast<double>(width_));
    }

    friend bool operator==(const WeeklyGrid&, const WeeklyGrid&) = default;

private:
    EpochSeconds width_ = kDefaultBucketWidth;
};

inline std::size_t bucket_index(EpochSeconds timestamp, int tz_offset_minutes,
                                const WeeklyGrid& grid = WeeklyGrid{}) {
    check_tz_offset(tz_offset_minutes);
    return grid.bucket_index(timestamp, tz_offset_minutes);
}

enum class ProfileKind {
    CreatedPosts,
    VisiblePosts,
    SelfReactions,
    DelayedSelfReactions,
    EstimatedAudienceReactions,
};

//! Non-negative real counts per bucket.
class ActionProfile
{
public:
    ActionProfile() = default;

    ActionProfile(ProfileKind kind, std::size_t buckets) : kind_(kind), values_(buckets, 0.0) { }

    ActionProfile(ProfileKind kind, std::vector<double> values)
        : kind_(kind), values_(std::move(values)) {
        for (double v : values_)
            if (!(v >= 0.0))
                throw ValidationError("profile", "elements must be non-negative");
    }

    ProfileKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    double operator[](std::size_t k) const { return values_[k]; }

    //! Unchecked mutable access for accumulation; callers add non-negative mass only.
    void add(std::size_t k, double mass) { values_[k] += mass; }

    double total() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

    double mean() const noexcept {
        return values_.empty() ? 0.0 : total() / static_cast<double>(values_.size());
    }

    bool is_zero() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

    ActionProfile with_kind(ProfileKind kind) const {
        ActionProfile p = *this;
        p.kind_ = kind;
        return p;
    }

    friend bool operator==(const ActionProfile&, const ActionProfile&) = default;

private:
    ProfileKind kind_ = ProfileKind::CreatedPosts;
    std::vector<double> values_;
};

enum class Provenance { S1, S2, S1w, S2w, MFU, AFD, Uniform };

inline constexpr std::array<Provenance, 6> kDerivedProvenances = {
    Provenance::S1, Provenance::S2, Provenance::S1w,
    Provenance::S2w, Provenance::MFU, Provenance::AFD};

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::S1: return "S1";
    case Provenance::S2: return "S2";
    case Provenance::S1w: return "S1w";
    case Provenance::S2w: return "S2w";
    case Provenance::MFU: return "MFU";
    case Provenance::AFD: return "AFD";
    case Provenance::Uniform: return "UNIFORM";
    }
    return "?";
}

inline Provenance parse_provenance(std::string_view s) {
    for (Provenance p : {Provenance::S1, Provenance::S2, Provenance::S1w, Provenance::S2w,
                         Provenance::MFU, Provenance::AFD, Provenance::Uniform})
        if (to_string(p) == s)
            return p;
    throw ValidationError("provenance", "unknown schedule kind '" + std::string(s) + "'");
}

//! Probability mass function over weekly buckets.
class Schedule
{
public:
    Schedule(Provenance provenance, std::vector<double> probabilities)
        : provenance_(provenance), probabilities_(std::move(probabilities)) {
        double sum = 0.0;
        for (double p : probabilities_) {
            if (!(p >= 0.0))
                throw ValidationError("schedule", "probabilities must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw ValidationError("schedule", "probabilities sum to " + std::to_string(sum));
    }

    static Schedule uniform(std::size_t buckets) {
        return Schedule(Provenance::Uniform,
                        std::vector<double>(buckets, 1.0 / static_cast<double>(buckets)));
    }

    Provenance provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return probabilities_.size(); }
    std::span<const double> probabilities() const noexcept { return probabilities_; }
    double operator[](std::size_t k) const { return probabilities_[k]; }

    Schedule with_provenance(Provenance p) const {
        Schedule s = *this;
        s.provenance_ = p;
        return s;
    }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    Provenance provenance_;
    std::vector<double> probabilities_;
};

//! First index of the largest element.
inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

//! Histogram of `timestamps` over the grid in the given local offset.
inline ActionProfile aggregate_profile(std::span<const EpochSeconds> timestamps,
                                       int tz_offset_minutes, const WeeklyGrid& grid = {},
                                       ProfileKind kind = ProfileKind::CreatedPosts) {
    check_tz_offset(tz_offset_minutes);
    ActionProfile profile(kind, grid.size());
    for (EpochSeconds t : timestamps)
        profile.add(grid.bucket_index(t, tz_offset_minutes), 1.0);
    return profile;
}

inline void check_kernel(std::span<const double> kernel) {
    double sum = 0.0;
    for (double m : kernel) {
        if (!(m >= 0.0))
            throw ValidationError("filter", "masses must be non-negative");
        sum += m;
    }
    if (kernel.empty() || std::abs(sum - 1.0) > kSumTolerance)
        throw ValidationError("filter", "not normalized (sum " + std::to_string(sum) + ")");
}

//! Forward-looking circular correlation of a reaction profile with a delay
//! kernel: out[k] = sum_m kernel[m] * in[(k + m) mod N]. Element k estimates
//! the reactions a user produces within the kernel window after bucket k.
//!
//! Equivalent to the textbook convolution with the kernel mirrored in lag.
inline ActionProfile delayed_profile(const ActionProfile& reactions,
                                     std::span<const double> kernel) {
    check_kernel(kernel);
    const std::size_t n = reactions.size();
    std::vector<double> out(n, 0.0);
    if (n == 0)
        return ActionProfile(ProfileKind::DelayedSelfReactions, std::move(out));
    const auto in = reactions.values();
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < kernel.size(); ++m) {
            if (kernel[m] != 0.0)
                acc += kernel[m] * in[(k + m) % n];
        }
        out[k] = acc;
    }
    return ActionProfile(ProfileKind::DelayedSelfReactions, std::move(out));
}

//! s[i] = q[i] / sum(q). Throws NoSignal when q carries no mass.
inline Schedule normalize_to_schedule(std::span<const double> q, Provenance provenance) {
    double sum = 0.0;
    for (double v : q) {
        if (!(v >= 0.0))
            throw ValidationError("profile", "elements must be non-negative");
        sum += v;
    }
    if (!(sum > 0.0))
        throw NoSignal("profile has no mass");
    std::vector<double> s(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        s[i] = q[i] / sum;
    return Schedule(provenance, std::move(s));
}

inline Schedule normalize_to_schedule(const ActionProfile& q, Provenance provenance) {
    return normalize_to_schedule(q.values(), provenance);
}

//! Circular shift: out[(k + shift) mod N] = in[k]. Moves a series from one
//! local grid to another that is `shift` buckets ahead.
inline std::vector<double> rotate(std::span<const double> in, long shift) {
    const long n = static_cast<long>(in.size());
    std::vector<double> out(in.size(), 0.0);
    if (n == 0)
        return out;
    const long s = ((shift % n) + n) % n;
    for (long k = 0; k < n; ++k)
        out[static_cast<std::size_t>((k + s) % n)] = in[static_cast<std::size_t>(k)];
    return out;
}

inline ActionProfile rotate(const ActionProfile& in, long shift) {
    if (shift == 0)
        return in;
    return ActionProfile(in.kind(), rotate(in.values(), shift));
}

} // namespace besttime
