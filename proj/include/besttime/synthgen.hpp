// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic event logs with planted weekly activity and a known delay
// kernel.
//
// Every user has a weekly intensity: a base rate plus a peak inherited from
// their community. Intensity drives posting (Poisson count per bucket per
// week) and doubles as the user's activity level. For each post, every
// follower draws a delay lag from the kernel and reacts with probability
// min(1, p * affinity * activity(reaction time)), where activity is the
// follower's intensity divided by its weekly mean. Reactions past the end
// of the observation span are dropped.
//
// Each author's posts and reactions come from their own seeded stream, so
// output is identical for any worker count.

#pragma once

#include <besttime/error.hpp>
#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace besttime::synth {

//! Reaction probability multiplier for one (author, follower) edge.
struct Affinity
{
    std::size_t author = 0;
    std::size_t follower = 0;
    double multiplier = 1.0;
};

//! A post placed at an exact time in addition to the Poisson ones.
struct PlantedPost
{
    std::size_t author = 0;
    EpochSeconds time = 0;
};

struct SynthConfig
{
    std::uint64_t seed = 1;
    std::size_t users = 100;
    Network network = Network::TW;
    EpochSeconds start = 1420416000; //!< Monday 2015-01-05 00:00 UTC
    int span_days = 119;             //!< 63 derivation + 56 evaluation
    EpochSeconds bucket_width = 900;

    std::size_t followers_min = 50;
    std::size_t followers_max = 50;
    std::size_t communities = 1;
    double homophily = 1.0; //!< chance a follower comes from the author's community
    std::vector<std::size_t> community_peaks; //!< local bucket; empty draws weekday buckets
    std::size_t peak_width = 1;
    double peak_rate = 2.0;  //!< expected posts per peak bucket per week
    double base_rate = 0.02; //!< expected posts per other bucket per week

    std::vector<double> kernel = {1.0}; //!< delay mass per lag of bucket_width
    bool delay_jitter = false;          //!< spread delays uniformly inside each lag
    double reaction_prob = 0.2;

    std::vector<int> tz_offsets = {0};           //!< by community, round robin
    std::vector<std::string> cities = {"metro"}; //!< by community, round robin
    std::vector<Affinity> affinities;
    std::vector<PlantedPost> planted_posts;
    bool symmetric_edges = false; //!< add the reverse of every edge

    void validate() const {
        if (users == 0)
            throw ValidationError("users", "must be >= 1");
        if (span_days < 7)
            throw ValidationError("span_days", "must be >= 7");
        if (followers_min > followers_max)
            throw ValidationError("followers_min", "exceeds followers_max");
        if (communities == 0)
            throw ValidationError("communities", "must be >= 1");
        if (!(peak_rate >= 0.0) || !(base_rate >= 0.0) || !(reaction_prob >= 0.0) ||
            !(homophily >= 0.0 && homophily <= 1.0))
            throw ValidationError("rates", "must be non-negative (homophily in [0, 1])");
        check_kernel(kernel);
        WeeklyGrid g(bucket_width);
        for (std::size_t p : community_peaks)
            if (p >= g.size())
                throw ValidationError("community_peaks", "bucket out of range");
        if (tz_offsets.empty() || cities.empty())
            throw ValidationError("tz_offsets", "need at least one offset and city");
        for (int tz : tz_offsets)
            check_tz_offset(tz);
        for (const auto& a : affinities)
            if (a.author >= users || a.follower >= users || !(a.multiplier >= 0.0))
                throw ValidationError("affinities", "bad affinity entry");
        for (const auto& p : planted_posts)
            if (p.author >= users)
                throw ValidationError("planted_posts", "author out of range");
    }
};

//! Everything derived from the config before any event is drawn.
struct World
{
    WeeklyGrid grid;
    std::vector<std::string> names;
    std::vector<std::size_t> community;
    std::vector<int> tz;
    std::vector<std::vector<double>> intensity; //!< local grid, posts per bucket per week
    std::vector<std::vector<double>> activity;  //!< intensity / weekly mean
    std::vector<std::vector<std::size_t>> followers; //!< sorted
    std::vector<std::vector<std::pair<std::size_t, double>>> affinity; //!< by author

    double affinity_of(std::size_t author, std::size_t follower) const {
        for (const auto& [f, m] : affinity[author])
            if (f == follower)
                return m;
        return 1.0;
    }
};

inline std::string user_name(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "u%05zu", i);
    return buf;
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

inline World build_world(const SynthConfig& cfg) {
    cfg.validate();
    World w;
    w.grid = WeeklyGrid(cfg.bucket_width);
    const std::size_t n = w.grid.size();
    auto rng = substream(cfg.seed, 0xC0FFEEu, 1);

    std::vector<std::size_t> peaks = cfg.community_peaks;
    std::uniform_int_distribution<std::size_t> weekday_bucket(0, n * 5 / 7 - 1);
    while (peaks.size() < cfg.communities)
        peaks.push_back(weekday_bucket(rng));

    w.names.resize(cfg.users);
    w.community.resize(cfg.users);
    w.tz.resize(cfg.users);
    w.intensity.assign(cfg.users, std::vector<double>(n, cfg.base_rate));
    w.activity.assign(cfg.users, std::vector<double>(n, 1.0));
    for (std::size_t u = 0; u < cfg.users; ++u) {
        w.names[u] = user_name(u);
        const std::size_t c = u % cfg.communities;
        w.community[u] = c;
        w.tz[u] = cfg.tz_offsets[c % cfg.tz_offsets.size()];
        for (std::size_t d = 0; d < cfg.peak_width; ++d)
            w.intensity[u][(peaks[c] + d) % n] = cfg.peak_rate;
        double mean = 0.0;
        for (double x : w.intensity[u])
            mean += x;
        mean /= static_cast<double>(n);
        if (mean > 0.0)
            for (std::size_t k = 0; k < n; ++k)
                w.activity[u][k] = w.intensity[u][k] / mean;
    }

    // Followers: sample without replacement, preferring the author's community.
    w.followers.resize(cfg.users);
    for (std::size_t u = 0; u < cfg.users; ++u) {
        std::uniform_int_distribution<std::size_t> count(cfg.followers_min, cfg.followers_max);
        const std::size_t want = std::min(count(rng), cfg.users - 1);
        std::vector<std::size_t> same, other;
        for (std::size_t v = 0; v < cfg.users; ++v) {
            if (v == u)
                continue;
            (w.community[v] == w.community[u] ? same : other).push_back(v);
        }
        std::shuffle(same.begin(), same.end(), rng);
        std::shuffle(other.begin(), other.end(), rng);
        std::bernoulli_distribution from_same(cfg.homophily);
        auto& f = w.followers[u];
        while (f.size() < want) {
            const bool pick_same = (from_same(rng) && !same.empty()) || other.empty();
            auto& pool = pick_same ? same : other;
            f.push_back(pool.back());
            pool.pop_back();
        }
    }
    if (cfg.symmetric_edges) {
        auto copy = w.followers;
        for (std::size_t u = 0; u < cfg.users; ++u)
            for (std::size_t v : copy[u])
                w.followers[v].push_back(u);
    }
    for (auto& f : w.followers) {
        std::sort(f.begin(), f.end());
        f.erase(std::unique(f.begin(), f.end()), f.end());
    }

    w.affinity.resize(cfg.users);
    for (const auto& a : cfg.affinities)
        w.affinity[a.author].emplace_back(a.follower, a.multiplier);
    return w;
}

struct SynthOutput
{
    World world;
    std::string posts;
    std::string reactions;
    std::string edges;
    std::string users;
    std::string ground_truth; //!< user \t true_peak_bucket
    std::size_t post_count = 0;
    std::size_t reaction_count = 0;
    std::size_t censored = 0; //!< reactions dropped past the span end
};

//! Expected reactions to a post made at the start of local bucket k,
//! maximized over k by direct enumeration. Ties go to the lowest index.
inline std::size_t ground_truth_peak(const SynthConfig& cfg, const World& w, std::size_t user) {
    const std::size_t n = w.grid.size();
    std::vector<double> expected(n, 0.0);
    for (std::size_t b : w.followers[user]) {
        const long shift = w.grid.offset_buckets(static_cast<long>(w.tz[b]) - w.tz[user]);
        const double aff = w.affinity_of(user, b);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t m = 0; m < cfg.kernel.size(); ++m) {
                if (cfg.kernel[m] == 0.0)
                    continue;
                const long nn = static_cast<long>(n);
                const long kb = ((static_cast<long>(k + m) + shift) % nn + nn) % nn;
                const double act = w.activity[b][static_cast<std::size_t>(kb)];
                expected[k] += cfg.kernel[m] * std::min(1.0, cfg.reaction_prob * aff * act);
            }
    }
    return argmax(expected);
}

inline SynthOutput generate(const SynthConfig& cfg, std::size_t workers = 1) {
    SynthOutput out;
    out.world = build_world(cfg);
    const World& w = out.world;
    const std::size_t n = w.grid.size();
    const std::string net(to_string(cfg.network));
    const EpochSeconds end = cfg.start + static_cast<EpochSeconds>(cfg.span_days) * kDaySeconds;
    const EpochSeconds width = cfg.bucket_width;

    struct AuthorEvents
    {
        std::string posts, reactions;
        std::size_t post_count = 0, reaction_count = 0, censored = 0;
    };
    std::vector<AuthorEvents> events(cfg.users);

    parallel_for(cfg.users, workers, [&](std::size_t a) {
        auto rng = substream(cfg.seed, a, 2);
        std::discrete_distribution<std::size_t> lag(cfg.kernel.begin(), cfg.kernel.end());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<EpochSeconds> within(0, width - 1);

        std::vector<EpochSeconds> times;
        // Weeks are walked in the author's local clock, then shifted back to UTC.
        const EpochSeconds local_start = cfg.start + EpochSeconds{w.tz[a]} * 60;
        const EpochSeconds first_monday =
            local_start - (((local_start + 3 * kDaySeconds) % kWeekSeconds) + kWeekSeconds) %
                              kWeekSeconds;
        for (EpochSeconds week = first_monday; week < end + EpochSeconds{w.tz[a]} * 60;
             week += kWeekSeconds) {
            for (std::size_t k = 0; k < n; ++k) {
                const double rate = w.intensity[a][k];
                if (rate <= 0.0)
                    continue;
                std::poisson_distribution<int> count(rate);
                for (int c = count(rng); c > 0; --c) {
                    const EpochSeconds t = week + static_cast<EpochSeconds>(k) * width +
                                           within(rng) - EpochSeconds{w.tz[a]} * 60;
                    if (t >= cfg.start && t < end)
                        times.push_back(t);
                }
            }
        }
        for (const auto& p : cfg.planted_posts)
            if (p.author == a)
                times.push_back(p.time);
        std::sort(times.begin(), times.end());

        auto& ev = events[a];
        char line[160];
        for (std::size_t i = 0; i < times.size(); ++i) {
            const EpochSeconds t = times[i];
            const std::string pid = w.names[a] + "_" + std::to_string(i);
            std::snprintf(line, sizeof(line), "%s\t%s\t%s\t%lld\n", net.c_str(),
                          w.names[a].c_str(), pid.c_str(), static_cast<long long>(t));
            ev.posts += line;
            ++ev.post_count;
            for (std::size_t b : w.followers[a]) {
                EpochSeconds delay = static_cast<EpochSeconds>(lag(rng)) * width;
                if (cfg.delay_jitter)
                    delay += within(rng);
                const EpochSeconds rt = t + delay;
                const double act = w.activity[b][w.grid.bucket_index(rt, w.tz[b])];
                const double prob = std::min(1.0, cfg.reaction_prob * w.affinity_of(a, b) * act);
                if (!(unit(rng) < prob))
                    continue;
                if (rt >= end) {
                    ++ev.censored;
                    continue;
                }
                std::snprintf(line, sizeof(line), "%s\t%s\t%s\t%lld\n", net.c_str(), pid.c_str(),
                              w.names[b].c_str(), static_cast<long long>(rt));
                ev.reactions += line;
                ++ev.reaction_count;
            }
        }
    });

    for (auto& ev : events) {
        out.posts += ev.posts;
        out.reactions += ev.reactions;
        out.post_count += ev.post_count;
        out.reaction_count += ev.reaction_count;
        out.censored += ev.censored;
    }
    for (std::size_t a = 0; a < cfg.users; ++a) {
        for (std::size_t b : w.followers[a])
            out.edges += net + "\t" + w.names[a] + "\t" + w.names[b] + "\n";
        const std::size_t c = w.community[a];
        out.users += w.names[a] + "\t" + std::to_string(w.tz[a]) + "\t" +
                     cfg.cities[c % cfg.cities.size()] + "\t" + net + "\n";
        out.ground_truth +=
            w.names[a] + "\t" + std::to_string(ground_truth_peak(cfg, w, a)) + "\n";
    }
    return out;
}

} // namespace besttime::synth
