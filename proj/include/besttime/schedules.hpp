// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Personalized posting schedules.
//
// First-degree: sum the audience's delayed reaction profiles.
// Second-degree: per member, divide delayed reactions by the posts the
// member can see (a linear function of what the people they follow
// create), clamp to a probability, and sum.
// Weighted variants scale each member by their share of the reactions the
// user received. Timezone-cohort baselines aggregate posting frequency
// (MFU) or first-degree profiles (AFD).

#pragma once

#include <besttime/error.hpp>
#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/parallel.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace besttime {

struct VisibilityModel
{
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!(beta > 0.0))
            throw ValidationError("beta", "must be > 0");
        if (!(alpha >= 0.0))
            throw ValidationError("alpha", "must be >= 0");
    }
};

//! Share of a user's received reactions contributed by each member.
class AudienceWeights
{
public:
    AudienceWeights() = default;
    explicit AudienceWeights(std::map<UserId, double> w) : weights_(std::move(w)) { }

    double operator()(UserId member) const {
        auto it = weights_.find(member);
        return it == weights_.end() ? 0.0 : it->second;
    }

    const std::map<UserId, double>& entries() const noexcept { return weights_; }

private:
    std::map<UserId, double> weights_;
};

enum class DayFilter { All, Weekday, Weekend };

struct RankedBucket
{
    std::size_t bucket = 0;
    double probability = 0.0;
};

using RankedTimes = std::vector<RankedBucket>;

//! q[(k + shift) mod N] += weight * x[k]
inline void accumulate_shifted(std::vector<double>& q, std::span<const double> x, double weight,
                               long shift) {
    const long n = static_cast<long>(q.size());
    if (static_cast<long>(x.size()) != n)
        throw ValidationError("profile", "length mismatch with grid");
    const long s = ((shift % n) + n) % n;
    if (s == 0) {
        for (long k = 0; k < n; ++k)
            q[static_cast<std::size_t>(k)] += weight * x[static_cast<std::size_t>(k)];
        return;
    }
    for (long k = 0; k < n; ++k)
        q[static_cast<std::size_t>((k + s) % n)] += weight * x[static_cast<std::size_t>(k)];
}

namespace detail {

inline std::size_t common_length(std::span<const ActionProfile> profiles) {
    if (profiles.empty())
        throw NoSignal("empty audience");
    const std::size_t n = profiles.front().size();
    for (const auto& p : profiles)
        if (p.size() != n)
            throw ValidationError("profile", "audience profiles on different grids");
    return n;
}

inline void check_weights(std::span<const double> w, std::size_t members) {
    if (w.size() != members)
        throw ValidationError("weights", "one weight per audience member required");
    for (double x : w)
        if (!(x >= 0.0 && x <= 1.0))
            throw ValidationError("weights", "must lie in [0, 1]");
}

} // namespace detail

//! Q(a0): element-wise sum of the audience's delayed reaction profiles.
inline ActionProfile first_degree_profile(std::span<const ActionProfile> audience_delayed) {
    const std::size_t n = detail::common_length(audience_delayed);
    std::vector<double> q(n, 0.0);
    for (const auto& r : audience_delayed)
        accumulate_shifted(q, r.values(), 1.0, 0);
    return ActionProfile(ProfileKind::EstimatedAudienceReactions, std::move(q));
}

inline Schedule first_degree(std::span<const ActionProfile> audience_delayed) {
    return normalize_to_schedule(first_degree_profile(audience_delayed), Provenance::S1);
}

inline Schedule weighted_first_degree(std::span<const ActionProfile> audience_delayed,
                                      std::span<const double> weights) {
    const std::size_t n = detail::common_length(audience_delayed);
    detail::check_weights(weights, audience_delayed.size());
    std::vector<double> q(n, 0.0);
    for (std::size_t j = 0; j < audience_delayed.size(); ++j)
        accumulate_shifted(q, audience_delayed[j].values(), weights[j], 0);
    return normalize_to_schedule(q, Provenance::S1w);
}

//! Mean-rescaled creation profile; zero when the user never posted.
inline std::vector<double> rescaled_creation(const ActionProfile& c) {
    const double mean = c.mean();
    std::vector<double> out(c.size(), 0.0);
    if (mean > 0.0)
        for (std::size_t k = 0; k < c.size(); ++k)
            out[k] = c[k] / mean;
    return out;
}

//! V(b) with creators' profiles already on b's local grid.
inline ActionProfile visible_posts(std::span<const ActionProfile> followed_created,
                                   const VisibilityModel& model, std::size_t buckets) {
    model.validate();
    std::vector<double> sum(buckets, 0.0);
    for (const auto& c : followed_created) {
        if (c.size() != buckets)
            throw ValidationError("profile", "creation profile on a different grid");
        accumulate_shifted(sum, rescaled_creation(c), 1.0, 0);
    }
    for (double& v : sum)
        v = model.alpha * v + model.beta;
    return ActionProfile(ProfileKind::VisiblePosts, std::move(sum));
}

//! p(b, t_k) = min(1, r_d,k(b) / v_k(b)).
inline std::vector<double> reaction_probability(const ActionProfile& delayed,
                                                const ActionProfile& visible) {
    if (delayed.size() != visible.size())
        throw ValidationError("profile", "delayed and visible profiles differ in length");
    std::vector<double> p(delayed.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!(visible[k] > 0.0))
            throw ValidationError("visible", "visible-post counts must be > 0");
        p[k] = std::min(1.0, delayed[k] / visible[k]);
    }
    return p;
}

inline ActionProfile second_degree_profile(std::span<const ActionProfile> audience_delayed,
                                           std::span<const ActionProfile> audience_visible,
                                           std::span<const double> weights = {}) {
    const std::size_t n = detail::common_length(audience_delayed);
    if (audience_visible.size() != audience_delayed.size())
        throw ValidationError("visible", "one visibility profile per audience member required");
    if (!weights.empty())
        detail::check_weights(weights, audience_delayed.size());
    std::vector<double> q(n, 0.0);
    for (std::size_t j = 0; j < audience_delayed.size(); ++j)
        accumulate_shifted(q, reaction_probability(audience_delayed[j], audience_visible[j]),
                           weights.empty() ? 1.0 : weights[j], 0);
    return ActionProfile(ProfileKind::EstimatedAudienceReactions, std::move(q));
}

inline Schedule second_degree(std::span<const ActionProfile> audience_delayed,
                              std::span<const ActionProfile> audience_visible) {
    return normalize_to_schedule(second_degree_profile(audience_delayed, audience_visible),
                                 Provenance::S2);
}

inline Schedule weighted_second_degree(std::span<const ActionProfile> audience_delayed,
                                       std::span<const ActionProfile> audience_visible,
                                       std::span<const double> weights) {
    detail::check_weights(weights, audience_delayed.size());
    return normalize_to_schedule(
        second_degree_profile(audience_delayed, audience_visible, weights), Provenance::S2w);
}

//! w(a0, b) = reactions from b / all reactions received by a0, over joined
//! reactions inside `window`. Reactions without a known reactor count
//! toward the total only.
inline AudienceWeights compute_weights(UserId user, std::span<const JoinedPair> joined,
                                       const TimeWindow& window) {
    std::map<UserId, double> counts;
    double total = 0.0;
    for (const auto& j : joined) {
        if (j.author != user || !window.contains(j.pair.reaction_time))
            continue;
        total += 1.0;
        if (j.reactor != kNoUser)
            counts[j.reactor] += 1.0;
    }
    if (total == 0.0)
        throw EmptyHistory("user received no reactions in the derivation window");
    for (auto& [member, c] : counts)
        c /= total;
    return AudienceWeights(std::move(counts));
}

//! Reaction counts received per author, indexed by (author -> reactor -> count).
//! Built once so per-user weights avoid rescanning the join.
class ReceivedReactions
{
public:
    ReceivedReactions(std::span<const JoinedPair> joined, const TimeWindow& window,
                      std::size_t users)
        : by_author_(users), totals_(users, 0.0) {
        for (const auto& j : joined) {
            if (j.author >= users || !window.contains(j.pair.reaction_time))
                continue;
            totals_[j.author] += 1.0;
            if (j.reactor != kNoUser)
                by_author_[j.author][j.reactor] += 1.0;
        }
    }

    AudienceWeights weights(UserId user) const {
        if (user >= totals_.size() || totals_[user] == 0.0)
            throw EmptyHistory("user received no reactions in the derivation window");
        std::map<UserId, double> w = by_author_[user];
        for (auto& [member, c] : w)
            c /= totals_[user];
        return AudienceWeights(std::move(w));
    }

private:
    std::vector<std::map<UserId, double>> by_author_;
    std::vector<double> totals_;
};

//! bs_i = sum over cohort of c_i(u), normalized.
inline Schedule mfu_baseline(std::span<const ActionProfile> cohort_created) {
    if (cohort_created.empty())
        throw NoSignal("empty cohort");
    const std::size_t n = detail::common_length(cohort_created);
    std::vector<double> sum(n, 0.0);
    for (const auto& c : cohort_created)
        accumulate_shifted(sum, c.values(), 1.0, 0);
    return normalize_to_schedule(sum, Provenance::MFU);
}

//! bs_i = sum over cohort users holding a first-degree Q(u) of q_i(u), normalized.
inline Schedule afd_baseline(std::span<const ActionProfile> cohort_q) {
    if (cohort_q.empty())
        throw NoSignal("no cohort user has a first-degree profile");
    const std::size_t n = detail::common_length(cohort_q);
    std::vector<double> sum(n, 0.0);
    for (const auto& q : cohort_q)
        accumulate_shifted(sum, q.values(), 1.0, 0);
    return normalize_to_schedule(sum, Provenance::AFD);
}

inline bool passes(DayFilter f, const WeeklyGrid& grid, std::size_t bucket) {
    switch (f) {
    case DayFilter::All: return true;
    case DayFilter::Weekday: return grid.is_weekday(bucket);
    case DayFilter::Weekend: return !grid.is_weekday(bucket);
    }
    return true;
}

//! Highest-probability buckets passing `filter`; ties go to the lower index.
inline RankedTimes top_k_times(const Schedule& schedule, std::size_t k,
                               DayFilter filter = DayFilter::All,
                               const WeeklyGrid& grid = WeeklyGrid{}) {
    if (k == 0)
        throw ValidationError("k", "must be >= 1");
    if (schedule.size() != grid.size())
        throw ValidationError("schedule", "length does not match grid");
    RankedTimes all;
    all.reserve(schedule.size());
    for (std::size_t b = 0; b < schedule.size(); ++b)
        if (passes(filter, grid, b))
            all.push_back({b, schedule[b]});
    const std::size_t take = std::min(k, all.size());
    auto better = [](const RankedBucket& x, const RankedBucket& y) {
        return x.probability > y.probability ||
               (x.probability == y.probability && x.bucket < y.bucket);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                      better);
    all.resize(take);
    return all;
}

//------------------------------------------------------------------------------
// Whole-population derivation

//! Read-only inputs shared by every per-user derivation. Profiles are
//! indexed by UserId and expressed in each user's own local grid.
struct ScheduleInputs
{
    const SocialGraph* graph = nullptr;
    std::span<const int> tz;                 //!< minutes, by UserId
    std::span<const ActionProfile> created;  //!< C(u)
    std::span<const ActionProfile> delayed;  //!< R_d(u)
    VisibilityModel model;
    WeeklyGrid grid;

    //! Buckets that move a series from `from`'s local grid to `to`'s.
    long shift(UserId from, UserId to) const {
        return grid.offset_buckets(static_cast<long>(tz_of(to)) - tz_of(from));
    }

    int tz_of(UserId u) const { return u < tz.size() ? tz[u] : 0; }
};

//! V(b) on b's local grid, creators rotated in from their own offsets.
inline ActionProfile visible_posts_for(UserId member, const ScheduleInputs& in) {
    in.model.validate();
    const std::size_t n = in.grid.size();
    std::vector<double> sum(n, 0.0);
    for (UserId a : in.graph->followed(member))
        accumulate_shifted(sum, rescaled_creation(in.created[a]), 1.0, in.shift(a, member));
    for (double& v : sum)
        v = in.model.alpha * v + in.model.beta;
    return ActionProfile(ProfileKind::VisiblePosts, std::move(sum));
}

inline std::vector<ActionProfile> visible_posts_all(const ScheduleInputs& in, std::size_t workers) {
    std::vector<ActionProfile> v(in.graph->size());
    parallel_for(v.size(), workers, [&](std::size_t b) {
        v[b] = visible_posts_for(static_cast<UserId>(b), in);
    });
    return v;
}

struct UserSchedules
{
    std::optional<ActionProfile> q1; //!< unnormalized first-degree Q(u), for AFD
    std::array<std::optional<Schedule>, 6> by_kind{}; //!< indexed by Provenance

    const std::optional<Schedule>& get(Provenance p) const {
        return by_kind[static_cast<std::size_t>(p)];
    }
    std::optional<Schedule>& get(Provenance p) { return by_kind[static_cast<std::size_t>(p)]; }
};

//! S1, S2, S1w, S2w for one user; kinds that carry no signal stay empty.
inline UserSchedules derive_personal(UserId user, const ScheduleInputs& in,
                                     std::span<const ActionProfile> visible,
                                     const std::optional<AudienceWeights>& weights) {
    UserSchedules out;
    const auto audience = in.graph->audience(user);
    if (audience.empty())
        return out;
    const std::size_t n = in.grid.size();
    std::vector<double> q1(n, 0.0), q2(n, 0.0), q1w(n, 0.0), q2w(n, 0.0);
    for (UserId b : audience) {
        const long s = in.shift(b, user);
        const auto& rd = in.delayed[b];
        const auto p = reaction_probability(rd, visible[b]);
        accumulate_shifted(q1, rd.values(), 1.0, s);
        accumulate_shifted(q2, p, 1.0, s);
        if (weights) {
            const double w = (*weights)(b);
            accumulate_shifted(q1w, rd.values(), w, s);
            accumulate_shifted(q2w, p, w, s);
        }
    }
    auto attempt = [&](std::vector<double>& q, Provenance kind) {
        try {
            out.get(kind) = normalize_to_schedule(q, kind);
        }
        catch (const NoSignal&) {
        }
    };
    attempt(q1, Provenance::S1);
    attempt(q2, Provenance::S2);
    if (weights) {
        attempt(q1w, Provenance::S1w);
        attempt(q2w, Provenance::S2w);
    }
    if (out.get(Provenance::S1))
        out.q1 = ActionProfile(ProfileKind::EstimatedAudienceReactions, std::move(q1));
    return out;
}

//! Users grouped by tz offset; MFU and AFD per group.
struct CohortBaselines
{
    std::map<int, std::optional<Schedule>> mfu;
    std::map<int, std::optional<Schedule>> afd;
};

inline CohortBaselines derive_baselines(std::span<const UserId> cohort_users,
                                        const ScheduleInputs& in,
                                        std::span<const UserSchedules> personal) {
    std::map<int, std::vector<ActionProfile>> created, qs;
    for (UserId u : cohort_users) {
        const int tz = in.tz_of(u);
        created[tz].push_back(in.created[u]);
        if (u < personal.size() && personal[u].q1)
            qs[tz].push_back(*personal[u].q1);
        else
            qs[tz];
    }
    CohortBaselines out;
    for (auto& [tz, profiles] : created) {
        try {
            out.mfu[tz] = mfu_baseline(profiles);
        }
        catch (const NoSignal&) {
            out.mfu[tz] = std::nullopt;
        }
        try {
            out.afd[tz] = afd_baseline(qs[tz]);
        }
        catch (const NoSignal&) {
            out.afd[tz] = std::nullopt;
        }
    }
    return out;
}

inline void attach_baselines(UserSchedules& s, int tz, const CohortBaselines& b) {
    if (auto it = b.mfu.find(tz); it != b.mfu.end())
        s.get(Provenance::MFU) = it->second;
    if (auto it = b.afd.find(tz); it != b.afd.end())
        s.get(Provenance::AFD) = it->second;
}

//! S1w -> S1 -> AFD -> MFU -> uniform; the result's provenance names the
//! kind that was used.
inline Schedule recommended(const UserSchedules& s, std::size_t buckets) {
    for (Provenance p : {Provenance::S1w, Provenance::S1, Provenance::AFD, Provenance::MFU})
        if (s.get(p))
            return *s.get(p);
    return Schedule::uniform(buckets);
}

//! Everything the schedule stage needs beyond the per-user inputs.
struct DerivationResult
{
    std::vector<UserSchedules> users; //!< by UserId
    CohortBaselines baselines;
};

inline DerivationResult derive_all(const ScheduleInputs& in, const ReceivedReactions& received,
                                   std::size_t workers) {
    const std::size_t users = in.graph->size();
    const auto visible = visible_posts_all(in, workers);
    DerivationResult out;
    out.users.resize(users);
    parallel_for(users, workers, [&](std::size_t u) {
        std::optional<AudienceWeights> w;
        try {
            w = received.weights(static_cast<UserId>(u));
        }
        catch (const EmptyHistory&) {
        }
        out.users[u] = derive_personal(static_cast<UserId>(u), in, visible, w);
    });
    std::vector<UserId> all(users);
    for (UserId u = 0; u < users; ++u)
        all[u] = u;
    out.baselines = derive_baselines(all, in, out.users);
    for (UserId u = 0; u < users; ++u)
        attach_baselines(out.users[u], in.tz_of(u), out.baselines);
    return out;
}

} // namespace besttime
