// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Comparisons between audience-reaction series: Pearson correlation,
// cosine similarity, cohort aggregates and sampled pairwise distributions.

#pragma once

#include <besttime/error.hpp>
#include <besttime/grid.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace besttime {

inline void check_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw ValidationError("series", "series must be non-empty and of equal length");
}

//! Pearson correlation; empty when either series is constant.
inline std::optional<double> correlation(std::span<const double> a, std::span<const double> b) {
    check_same_length(a, b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

//! Dot product over norms; empty when either vector is zero.
inline std::optional<double> cosine_similarity(std::span<const double> a,
                                               std::span<const double> b) {
    check_same_length(a, b);
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0)
        return std::nullopt;
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

enum class Metric { Correlation, Cosine };

inline std::string_view to_string(Metric m) {
    return m == Metric::Correlation ? "correlation" : "cosine";
}

inline std::optional<double> apply(Metric m, std::span<const double> a, std::span<const double> b) {
    return m == Metric::Correlation ? correlation(a, b) : cosine_similarity(a, b);
}

//! A member's series with the tz offset it is expressed in.
struct CohortMember
{
    std::span<const double> series;
    int tz_offset = 0;
};

struct Cohort
{
    std::string label;
    int tz_offset = 0;            //!< local time the aggregate is expressed in
    std::vector<double> aggregate; //!< normalized, sums to 1
    double mass = 0.0;             //!< total mass before normalization
};

//! Most common offset among members; ties go to the smaller offset.
inline int modal_offset(std::span<const CohortMember> members) {
    std::map<int, std::size_t> counts;
    for (const auto& m : members)
        ++counts[m.tz_offset];
    int best = 0;
    std::size_t best_count = 0;
    for (const auto& [tz, c] : counts)
        if (c > best_count) {
            best = tz;
            best_count = c;
        }
    return best;
}

//! Sum of member series, each shifted into the cohort's local time, then
//! renormalized. `tz_offset` defaults to the members' modal offset.
inline Cohort cohort_aggregate(std::string label, std::span<const CohortMember> members,
                               const WeeklyGrid& grid = WeeklyGrid{},
                               std::optional<int> tz_offset = std::nullopt) {
    if (members.empty())
        throw NoSignal("empty cohort '" + label + "'");
    Cohort c;
    c.label = std::move(label);
    c.tz_offset = tz_offset ? *tz_offset : modal_offset(members);
    const std::size_t n = members.front().series.size();
    std::vector<double> sum(n, 0.0);
    for (const auto& m : members) {
        if (m.series.size() != n)
            throw ValidationError("series", "cohort members on different grids");
        const long s = grid.offset_buckets(static_cast<long>(c.tz_offset) - m.tz_offset);
        const long nn = static_cast<long>(n);
        const long shift = ((s % nn) + nn) % nn;
        for (std::size_t k = 0; k < n; ++k)
            sum[(k + static_cast<std::size_t>(shift)) % n] += m.series[k];
    }
    double total = 0.0;
    for (double v : sum)
        total += v;
    if (!(total > 0.0))
        throw NoSignal("cohort '" + c.label + "' has no mass");
    for (double& v : sum)
        v /= total;
    c.aggregate = std::move(sum);
    c.mass = total;
    return c;
}

//! Histogram of a similarity metric over [-1, 1].
struct MetricDistribution
{
    Metric metric = Metric::Correlation;
    double bin_width = 0.05;
    std::vector<std::uint64_t> bins;
    std::uint64_t samples = 0;
    std::uint64_t undefined = 0; //!< sampled pairs whose metric was undefined

    static MetricDistribution make(Metric m, double bin_width) {
        if (!(bin_width > 0.0 && bin_width <= 2.0))
            throw ValidationError("bin_width", "must lie in (0, 2]");
        MetricDistribution d;
        d.metric = m;
        d.bin_width = bin_width;
        d.bins.assign(static_cast<std::size_t>(std::ceil(2.0 / bin_width - 1e-9)), 0);
        return d;
    }

    std::size_t bin_of(double v) const {
        auto i = static_cast<long>(std::floor((v + 1.0) / bin_width));
        return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(bins.size()) - 1));
    }

    void add(double v) {
        ++bins[bin_of(v)];
        ++samples;
    }

    double bin_start(std::size_t i) const { return -1.0 + static_cast<double>(i) * bin_width; }
};

//! Samples `budget` pairs with replacement, u1 from `a` and u2 from `b`.
inline MetricDistribution pairwise_distribution(std::span<const std::span<const double>> a,
                                                std::span<const std::span<const double>> b,
                                                Metric metric, std::size_t budget,
                                                std::uint64_t seed, double bin_width = 0.05) {
    if (a.empty() || b.empty())
        throw NoSignal("pairwise distribution needs two non-empty cohorts");
    auto d = MetricDistribution::make(metric, bin_width);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
    for (std::size_t i = 0; i < budget; ++i) {
        const auto& x = a[pick_a(rng)];
        const auto& y = b[pick_b(rng)];
        if (auto v = apply(metric, x, y))
            d.add(*v);
        else
            ++d.undefined;
    }
    if (d.samples == 0)
        throw NoSignal("no sampled pair had a defined metric");
    return d;
}

//! cohort,tz_offset,bucket,value with header.
inline void write_cohort_csv(std::ostream& os, std::span<const Cohort> cohorts) {
    os << "cohort,tz_offset,bucket,value\n";
    char buf[40];
    for (const auto& c : cohorts)
        for (std::size_t k = 0; k < c.aggregate.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.10g", c.aggregate[k]);
            os << c.label << ',' << c.tz_offset << ',' << k << ',' << buf << '\n';
        }
}

struct LabeledDistribution
{
    std::string label;
    MetricDistribution dist;
};

inline void write_distribution_csv(std::ostream& os, std::span<const LabeledDistribution> ds) {
    os << "comparison,metric,bin_start,bin_end,count,samples,undefined\n";
    char lo[32], hi[32];
    for (const auto& [label, d] : ds)
        for (std::size_t i = 0; i < d.bins.size(); ++i) {
            std::snprintf(lo, sizeof(lo), "%.4f", d.bin_start(i));
            std::snprintf(hi, sizeof(hi), "%.4f", std::min(1.0, d.bin_start(i) + d.bin_width));
            os << label << ',' << to_string(d.metric) << ',' << lo << ',' << hi << ','
               << d.bins[i] << ',' << d.samples << ',' << d.undefined << '\n';
        }
}

} // namespace besttime
