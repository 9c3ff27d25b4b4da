// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Held-out scoring of schedules with reactions-per-message (RPM) and
// ReactionGain (RG = RPM at a ranked bucket / the user's overall RPM),
// averaged per rank over the users who posted in that bucket.

#pragma once

#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/schedules.hpp>

#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace besttime {

struct EvaluationWindow
{
    TimeWindow span;
    //! Reactions later than this after their post are not attributed.
    EpochSeconds attribution = kDaySeconds;

    void validate_against(const TimeWindow& derivation) const {
        if (span.length() <= 0)
            throw ValidationError("evaluation_window", "empty window");
        if (span.overlaps(derivation))
            throw ValidationError("evaluation_window",
                                  "overlaps derivation_window; windows must be disjoint");
    }
};

//! One user's held-out posting outcomes per local bucket.
struct UserOutcomes
{
    std::vector<double> posts;     //!< c_k summed over the window's days
    std::vector<double> reactions; //!< r_k, attributed reactions to those posts
    double total_posts = 0.0;
    double total_reactions = 0.0;
};

//! Earliest and latest timestamps that fed the metrics, for leakage audits.
struct UsageAudit
{
    EpochSeconds earliest = std::numeric_limits<EpochSeconds>::max();
    EpochSeconds latest = std::numeric_limits<EpochSeconds>::min();
    std::size_t posts_used = 0;
    std::size_t reactions_used = 0;

    void touch(EpochSeconds t) {
        earliest = std::min(earliest, t);
        latest = std::max(latest, t);
    }

    bool inside(const TimeWindow& w) const {
        return posts_used + reactions_used == 0 || (earliest >= w.start && latest < w.end);
    }
};

//! Posts and attributed reactions both lie inside the window; a reaction
//! counts when it arrives less than `attribution` seconds after its post.
inline std::vector<UserOutcomes> collect_outcomes(std::span<const PostRecord> posts,
                                                  std::span<const JoinedPair> joined,
                                                  std::span<const int> tz, std::size_t users,
                                                  const WeeklyGrid& grid,
                                                  const EvaluationWindow& window,
                                                  UsageAudit* audit = nullptr) {
    std::vector<double> per_post(posts.size(), 0.0);
    UsageAudit local;
    for (const auto& j : joined) {
        const PostRecord& p = posts[j.post];
        if (!window.span.contains(p.created_at) || !window.span.contains(j.pair.reaction_time))
            continue;
        if (j.pair.delay() >= window.attribution)
            continue;
        per_post[j.post] += 1.0;
        ++local.reactions_used;
        local.touch(j.pair.reaction_time);
    }
    std::vector<UserOutcomes> out(users);
    for (auto& o : out) {
        o.posts.assign(grid.size(), 0.0);
        o.reactions.assign(grid.size(), 0.0);
    }
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const PostRecord& p = posts[i];
        if (p.author >= users || !window.span.contains(p.created_at))
            continue;
        const int off = p.author < tz.size() ? tz[p.author] : 0;
        const std::size_t k = grid.bucket_index(p.created_at, off);
        auto& o = out[p.author];
        o.posts[k] += 1.0;
        o.reactions[k] += per_post[i];
        o.total_posts += 1.0;
        o.total_reactions += per_post[i];
        ++local.posts_used;
        local.touch(p.created_at);
    }
    if (audit)
        *audit = local;
    return out;
}

//! Reactions per message in the bucket ranked `rank` (1-based); empty when
//! the user made no posts there.
inline std::optional<double> rpm_at_rank(const UserOutcomes& o, const RankedTimes& ranked,
                                         std::size_t rank) {
    if (rank == 0 || rank > ranked.size())
        return std::nullopt;
    const std::size_t b = ranked[rank - 1].bucket;
    if (o.posts[b] == 0.0)
        return std::nullopt;
    return o.reactions[b] / o.posts[b];
}

inline std::optional<double> rpm_overall(const UserOutcomes& o) {
    if (o.total_posts == 0.0)
        return std::nullopt;
    return o.total_reactions / o.total_posts;
}

inline std::optional<double> reaction_gain(std::optional<double> rpm_rank,
                                           std::optional<double> rpm_user) {
    if (!rpm_rank || !rpm_user || !(*rpm_user > 0.0))
        return std::nullopt;
    return *rpm_rank / *rpm_user;
}

struct AverageGain
{
    std::optional<double> value;
    std::size_t users = 0;
};

inline AverageGain avg_reaction_gain(std::span<const std::optional<double>> gains) {
    AverageGain out;
    double sum = 0.0;
    for (const auto& g : gains)
        if (g) {
            sum += *g;
            ++out.users;
        }
    if (out.users > 0)
        out.value = sum / static_cast<double>(out.users);
    return out;
}

struct RankGain
{
    std::size_t rank = 0;
    std::optional<double> rg_avg;
    std::size_t users = 0;
    std::size_t posts = 0;
};

struct ScheduleGain
{
    Provenance kind = Provenance::S1;
    std::vector<RankGain> ranks;
    std::size_t evaluated_users = 0;  //!< users with the schedule and held-out posts
    std::size_t zero_rpm_users = 0;   //!< posted but never received a reaction
    std::size_t missing_schedule = 0; //!< posted but had no schedule of this kind
};

struct GainReport
{
    std::size_t max_rank = 32;
    std::vector<ScheduleGain> schedules;
};

struct EvaluationOptions
{
    std::size_t max_rank = 32;
    DayFilter days = DayFilter::Weekday;
    WeeklyGrid grid;
};

//! Scores each requested schedule kind over the population. Users count
//! toward a rank only when they posted in that rank's bucket.
inline GainReport evaluate(std::span<const UserSchedules> schedules,
                           std::span<const UserOutcomes> outcomes,
                           std::span<const Provenance> kinds, const EvaluationOptions& opts) {
    if (opts.max_rank == 0)
        throw ValidationError("ranks", "must be >= 1");
    GainReport report;
    report.max_rank = opts.max_rank;
    for (Provenance kind : kinds) {
        ScheduleGain sg;
        sg.kind = kind;
        std::vector<std::vector<std::optional<double>>> gains(opts.max_rank);
        std::vector<std::size_t> posts(opts.max_rank, 0);
        for (std::size_t u = 0; u < outcomes.size(); ++u) {
            const auto& o = outcomes[u];
            const auto overall = rpm_overall(o);
            if (!overall)
                continue;
            if (u >= schedules.size() || !schedules[u].get(kind)) {
                ++sg.missing_schedule;
                continue;
            }
            if (!(*overall > 0.0)) {
                ++sg.zero_rpm_users;
                continue;
            }
            ++sg.evaluated_users;
            const auto ranked = top_k_times(*schedules[u].get(kind), opts.max_rank, opts.days,
                                            opts.grid);
            for (std::size_t r = 1; r <= ranked.size(); ++r) {
                auto g = reaction_gain(rpm_at_rank(o, ranked, r), overall);
                if (g) {
                    gains[r - 1].push_back(g);
                    posts[r - 1] += static_cast<std::size_t>(o.posts[ranked[r - 1].bucket]);
                }
            }
        }
        for (std::size_t r = 0; r < opts.max_rank; ++r) {
            const auto avg = avg_reaction_gain(gains[r]);
            sg.ranks.push_back({r + 1, avg.value, avg.users, posts[r]});
        }
        report.schedules.push_back(std::move(sg));
    }
    return report;
}

namespace detail {
inline std::string format_gain(const std::optional<double>& v) {
    if (!v)
        return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
}
} // namespace detail

//! schedule \t rank \t rg_avg \t users \t posts
inline void write_gain_tsv(std::ostream& os, const GainReport& r) {
    os << "# schedule\trank\trg_avg\tusers\tposts\n";
    for (const auto& s : r.schedules)
        for (const auto& g : s.ranks)
            os << to_string(s.kind) << '\t' << g.rank << '\t' << detail::format_gain(g.rg_avg)
               << '\t' << g.users << '\t' << g.posts << '\n';
}

//! Long-format CSV with a header row: one row per (schedule, rank).
inline void write_gain_csv(std::ostream& os, const GainReport& r) {
    os << "schedule,rank,rg_avg,users,posts\n";
    for (const auto& s : r.schedules)
        for (const auto& g : s.ranks)
            os << to_string(s.kind) << ',' << g.rank << ',' << detail::format_gain(g.rg_avg)
               << ',' << g.users << ',' << g.posts << '\n';
}

} // namespace besttime
