// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Canonical event logs, the follower graph, and the joins that turn raw
// posts and reactions into delay pairs and per-user weekly profiles.
//
// File formats (UTF-8, LF, no header, '#' lines ignored):
//   posts.tsv      network \t author \t post_id \t epoch_seconds
//   reactions.tsv  network \t post_id \t reactor \t epoch_seconds
//   edges.tsv      network \t src \t dst        (dst is in src's audience)
//   users.tsv      user \t tz_offset_minutes \t city \t network

#pragma once

#include <besttime/error.hpp>
#include <besttime/grid.hpp>
#include <besttime/ptr_filter.hpp>
#include <besttime/tsv.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace besttime {

enum class Network : std::uint8_t { TW, FB, FP, GP };

inline std::string_view to_string(Network n) {
    switch (n) {
    case Network::TW: return "TW";
    case Network::FB: return "FB";
    case Network::FP: return "FP";
    case Network::GP: return "GP";
    }
    return "?";
}

inline std::optional<Network> parse_network(std::string_view s) {
    if (s == "TW") return Network::TW;
    if (s == "FB") return Network::FB;
    if (s == "FP") return Network::FP;
    if (s == "GP") return Network::GP;
    return std::nullopt;
}

//! Friend-style networks where audience and followed sets coincide.
inline bool is_bidirectional(Network n) { return n == Network::FB; }

using UserId = std::uint32_t;
inline constexpr UserId kNoUser = std::numeric_limits<UserId>::max();

//! Interns opaque user tokens to dense ids in first-seen order.
class UserTable
{
public:
    UserId intern(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it != index_.end())
            return it->second;
        const auto id = static_cast<UserId>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), id);
        return id;
    }

    std::optional<UserId> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    const std::string& name(UserId id) const { return names_.at(id); }
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, UserId> index_;
};

struct PostRecord
{
    Network network = Network::TW;
    UserId author = kNoUser;
    std::string post_id;
    EpochSeconds created_at = 0;
};

struct ReactionRecord
{
    Network network = Network::TW;
    std::string post_id;
    UserId reactor = kNoUser; //!< kNoUser when the source omits reactor ids
    EpochSeconds reacted_at = 0;
};

struct UserMeta
{
    UserId user = kNoUser;
    int tz_offset = 0;
    bool tz_known = true;
    std::string city;
    Network network = Network::TW;
};

//! Audience (U_out) and followed (U_in) adjacency, kept as mutual transposes.
class SocialGraph
{
public:
    void add_edge(UserId src, UserId dst) {
        grow(std::max(src, dst) + 1);
        out_[src].push_back(dst);
        in_[dst].push_back(src);
    }

    //! Sorts and deduplicates adjacency lists. Called by loaders.
    void finalize() {
        for (auto* side : {&out_, &in_})
            for (auto& list : *side) {
                std::sort(list.begin(), list.end());
                list.erase(std::unique(list.begin(), list.end()), list.end());
            }
    }

    void grow(std::size_t users) {
        if (out_.size() < users) {
            out_.resize(users);
            in_.resize(users);
        }
    }

    std::size_t size() const noexcept { return out_.size(); }

    std::span<const UserId> audience(UserId u) const {
        return u < out_.size() ? std::span<const UserId>(out_[u]) : std::span<const UserId>{};
    }

    std::span<const UserId> followed(UserId u) const {
        return u < in_.size() ? std::span<const UserId>(in_[u]) : std::span<const UserId>{};
    }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& l : out_)
            n += l.size();
        return n;
    }

    //! Transposing the audience lists reproduces the followed lists exactly.
    bool transpose_consistent() const {
        std::vector<std::vector<UserId>> t(out_.size());
        for (UserId a = 0; a < out_.size(); ++a)
            for (UserId b : out_[a])
                t[b].push_back(a);
        for (auto& l : t)
            std::sort(l.begin(), l.end());
        return t == in_;
    }

    bool symmetric() const { return out_ == in_; }

private:
    std::vector<std::vector<UserId>> out_;
    std::vector<std::vector<UserId>> in_;
};

struct LoadOptions
{
    std::optional<Network> network;      //!< keep only this network when set
    double max_malformed_fraction = 0.01;
    std::size_t workers = 1;
};

struct LoadReport
{
    std::string path;
    std::size_t lines = 0;
    std::size_t comments = 0;
    std::size_t parsed = 0;
    std::size_t malformed = 0;
    std::size_t filtered = 0; //!< well-formed but for another network
    std::vector<std::size_t> malformed_examples; //!< 1-based line numbers, first few
};

template <typename Record>
struct Loaded
{
    std::vector<Record> records;
    LoadReport report;
};

namespace detail {

//! Runs parse(fields, raw) over every data line, sharded by byte range.
//! parse returns kOk, kFiltered or kMalformed. Throws IoError when the
//! malformed share exceeds the configured limit.
template <typename Raw, typename ParseFn>
std::pair<std::vector<std::vector<Raw>>, LoadReport>
parse_shards(std::string_view buf, const std::string& path, const LoadOptions& opts,
             ParseFn&& parse) {
    const auto shards = tsv::split_shards(buf, std::max<std::size_t>(opts.workers, 1));
    std::vector<std::vector<Raw>> out(shards.size());
    std::vector<LoadReport> reports(shards.size());
    std::vector<std::vector<std::size_t>> bad_lines(shards.size());
    tsv::parallel_shards(shards, opts.workers, [&](std::size_t i, std::string_view shard) {
        std::vector<std::string_view> fields;
        auto& rep = reports[i];
        tsv::for_each_line(shard, [&](std::string_view line) {
            ++rep.lines;
            if (line.empty() || line.front() == '#') {
                ++rep.comments;
                return;
            }
            tsv::split_fields(line, fields);
            Raw raw;
            switch (parse(fields, raw)) {
            case 0:
                ++rep.parsed;
                out[i].push_back(std::move(raw));
                break;
            case 1:
                ++rep.filtered;
                break;
            default:
                ++rep.malformed;
                if (bad_lines[i].size() < 5)
                    bad_lines[i].push_back(rep.lines);
                break;
            }
        });
    });
    LoadReport total;
    total.path = path;
    std::size_t line_base = 0;
    for (std::size_t i = 0; i < shards.size(); ++i) {
        for (std::size_t l : bad_lines[i])
            if (total.malformed_examples.size() < 5)
                total.malformed_examples.push_back(line_base + l);
        line_base += reports[i].lines;
        total.lines += reports[i].lines;
        total.comments += reports[i].comments;
        total.parsed += reports[i].parsed;
        total.malformed += reports[i].malformed;
        total.filtered += reports[i].filtered;
    }
    const std::size_t data_lines = total.lines - total.comments;
    if (data_lines > 0 &&
        static_cast<double>(total.malformed) >
            opts.max_malformed_fraction * static_cast<double>(data_lines))
        throw IoError(path + ": " + std::to_string(total.malformed) + " of " +
                      std::to_string(data_lines) + " lines malformed");
    return {std::move(out), std::move(total)};
}

// parse() return codes
inline constexpr int kOk = 0;
inline constexpr int kFiltered = 1;
inline constexpr int kMalformed = 2;

inline int check_network(std::string_view field, const LoadOptions& opts, Network& out) {
    auto n = parse_network(field);
    if (!n)
        return kMalformed;
    out = *n;
    if (opts.network && *opts.network != *n)
        return kFiltered;
    return kOk;
}

} // namespace detail

inline Loaded<PostRecord> parse_posts(std::string_view buf, UserTable& users,
                                      const LoadOptions& opts = {},
                                      const std::string& path = "<memory>") {
    struct Raw
    {
        Network network;
        std::string_view author, post_id;
        EpochSeconds t;
    };
    auto [shards, report] = detail::parse_shards<Raw>(
        buf, path, opts, [&](const std::vector<std::string_view>& f, Raw& r) {
            if (f.size() != 4 || f[1].empty() || f[2].empty())
                return detail::kMalformed;
            auto t = tsv::parse_int(f[3]);
            if (!t)
                return detail::kMalformed;
            const int rc = detail::check_network(f[0], opts, r.network);
            r.author = f[1];
            r.post_id = f[2];
            r.t = *t;
            return rc;
        });
    Loaded<PostRecord> out;
    out.report = std::move(report);
    out.records.reserve(out.report.parsed);
    for (auto& shard : shards)
        for (auto& r : shard)
            out.records.push_back({r.network, users.intern(r.author), std::string(r.post_id), r.t});
    return out;
}

//! A reactor field of "-" or empty marks an unknown reactor.
inline Loaded<ReactionRecord> parse_reactions(std::string_view buf, UserTable& users,
                                              const LoadOptions& opts = {},
                                              const std::string& path = "<memory>") {
    struct Raw
    {
        Network network;
        std::string_view post_id, reactor;
        EpochSeconds t;
    };
    auto [shards, report] = detail::parse_shards<Raw>(
        buf, path, opts, [&](const std::vector<std::string_view>& f, Raw& r) {
            if (f.size() != 4 || f[1].empty())
                return detail::kMalformed;
            auto t = tsv::parse_int(f[3]);
            if (!t)
                return detail::kMalformed;
            const int rc = detail::check_network(f[0], opts, r.network);
            r.post_id = f[1];
            r.reactor = f[2];
            r.t = *t;
            return rc;
        });
    Loaded<ReactionRecord> out;
    out.report = std::move(report);
    out.records.reserve(out.report.parsed);
    for (auto& shard : shards)
        for (auto& r : shard) {
            const UserId reactor =
                (r.reactor.empty() || r.reactor == "-") ? kNoUser : users.intern(r.reactor);
            out.records.push_back({r.network, std::string(r.post_id), reactor, r.t});
        }
    return out;
}

struct GraphLoad
{
    SocialGraph graph;
    LoadReport report;
};

//! When `require_symmetric` is set (friend networks) a graph whose edge
//! lists are not mutual is rejected.
inline GraphLoad parse_graph(std::string_view buf, UserTable& users, const LoadOptions& opts = {},
                             bool require_symmetric = false,
                             const std::string& path = "<memory>") {
    struct Raw
    {
        Network network;
        std::string_view src, dst;
    };
    auto [shards, report] = detail::parse_shards<Raw>(
        buf, path, opts, [&](const std::vector<std::string_view>& f, Raw& r) {
            if (f.size() != 3 || f[1].empty() || f[2].empty())
                return detail::kMalformed;
            const int rc = detail::check_network(f[0], opts, r.network);
            r.src = f[1];
            r.dst = f[2];
            return rc;
        });
    GraphLoad out;
    out.report = std::move(report);
    for (auto& shard : shards)
        for (auto& r : shard) {
            const UserId a = users.intern(r.src);
            const UserId b = users.intern(r.dst);
            out.graph.add_edge(a, b);
        }
    out.graph.grow(users.size());
    out.graph.finalize();
    if (require_symmetric && !out.graph.symmetric())
        throw IoError(path + ": bidirectional network but edge list is not symmetric");
    return out;
}

//! tz_offset "NA" or empty means unknown: defaults to UTC and flagged.
inline Loaded<UserMeta> parse_users(std::string_view buf, UserTable& users,
                                    const LoadOptions& opts = {},
                                    const std::string& path = "<memory>") {
    struct Raw
    {
        std::string_view user, city;
        int tz = 0;
        bool tz_known = true;
        Network network;
    };
    auto [shards, report] = detail::parse_shards<Raw>(
        buf, path, opts, [&](const std::vector<std::string_view>& f, Raw& r) {
            if (f.size() != 4 || f[0].empty())
                return detail::kMalformed;
            if (f[1].empty() || f[1] == "NA") {
                r.tz = 0;
                r.tz_known = false;
            }
            else {
                auto tz = tsv::parse_int(f[1]);
                if (!tz || *tz < -kMaxTzOffsetMinutes || *tz > kMaxTzOffsetMinutes)
                    return detail::kMalformed;
                r.tz = static_cast<int>(*tz);
            }
            const int rc = detail::check_network(f[3], opts, r.network);
            r.user = f[0];
            r.city = f[2];
            return rc;
        });
    Loaded<UserMeta> out;
    out.report = std::move(report);
    for (auto& shard : shards)
        for (auto& r : shard)
            out.records.push_back(
                {users.intern(r.user), r.tz, r.tz_known, std::string(r.city), r.network});
    return out;
}

inline Loaded<PostRecord> load_posts(const std::string& path, UserTable& users,
                                     const LoadOptions& opts = {}) {
    const std::string buf = tsv::read_file(path);
    return parse_posts(buf, users, opts, path);
}

inline Loaded<ReactionRecord> load_reactions(const std::string& path, UserTable& users,
                                             const LoadOptions& opts = {}) {
    const std::string buf = tsv::read_file(path);
    return parse_reactions(buf, users, opts, path);
}

inline GraphLoad load_graph(const std::string& path, UserTable& users,
                            const LoadOptions& opts = {}, bool require_symmetric = false) {
    const std::string buf = tsv::read_file(path);
    return parse_graph(buf, users, opts, require_symmetric, path);
}

inline Loaded<UserMeta> load_users(const std::string& path, UserTable& users,
                                   const LoadOptions& opts = {}) {
    const std::string buf = tsv::read_file(path);
    return parse_users(buf, users, opts, path);
}

//! A reaction resolved against its post.
struct JoinedPair
{
    UserId author = kNoUser;
    UserId reactor = kNoUser;
    std::uint32_t post = 0; //!< index into the posts vector
    DelayPair pair;
};

struct JoinResult
{
    std::vector<JoinedPair> pairs;
    std::size_t dangling = 0;
    std::size_t negative = 0;
    std::size_t duplicate_posts = 0; //!< later duplicates of a post_id, ignored

    std::vector<DelayPair> delay_pairs() const {
        std::vector<DelayPair> d;
        d.reserve(pairs.size());
        for (const auto& p : pairs)
            d.push_back(p.pair);
        return d;
    }
};

//! One pair per reaction whose post resolves with a non-negative delay.
inline JoinResult join_reactions(std::span<const PostRecord> posts,
                                 std::span<const ReactionRecord> reactions) {
    JoinResult out;
    std::unordered_map<std::string, std::uint32_t> index;
    index.reserve(posts.size());
    for (std::uint32_t i = 0; i < posts.size(); ++i) {
        std::string key(to_string(posts[i].network));
        key += '\t';
        key += posts[i].post_id;
        if (!index.emplace(std::move(key), i).second)
            ++out.duplicate_posts;
    }
    out.pairs.reserve(reactions.size());
    std::string key;
    for (const auto& r : reactions) {
        key.assign(to_string(r.network));
        key += '\t';
        key += r.post_id;
        auto it = index.find(key);
        if (it == index.end()) {
            ++out.dangling;
            continue;
        }
        const PostRecord& p = posts[it->second];
        if (r.reacted_at < p.created_at) {
            ++out.negative;
            continue;
        }
        out.pairs.push_back({p.author, r.reactor, it->second, {p.created_at, r.reacted_at}});
    }
    return out;
}

//! Half-open [start, end) span of epoch seconds.
struct TimeWindow
{
    EpochSeconds start = 0;
    EpochSeconds end = 0;

    static TimeWindow days(EpochSeconds start, int days) {
        return {start, start + static_cast<EpochSeconds>(days) * kDaySeconds};
    }

    bool contains(EpochSeconds t) const noexcept { return t >= start && t < end; }
    bool overlaps(const TimeWindow& o) const noexcept { return start < o.end && o.start < end; }
    EpochSeconds length() const noexcept { return end - start; }
};

//! Per-user tz offsets indexed by UserId; users without metadata get 0.
inline std::vector<int> tz_table(std::span<const UserMeta> meta, std::size_t users) {
    std::vector<int> tz(users, 0);
    for (const auto& m : meta)
        if (m.user < users)
            tz[m.user] = m.tz_offset;
    return tz;
}

struct UserProfiles
{
    std::vector<ActionProfile> created;   //!< C(u), by UserId
    std::vector<ActionProfile> reactions; //!< R(u): reactions u performed
};

//! C(u) from posts u authored and R(u) from joined reactions u performed,
//! each in u's local grid, restricted to events inside `window`.
inline UserProfiles build_profiles(std::span<const PostRecord> posts,
                                   std::span<const JoinedPair> joined,
                                   std::span<const int> tz_by_user, std::size_t users,
                                   const WeeklyGrid& grid, const TimeWindow& window) {
    UserProfiles out;
    out.created.assign(users, ActionProfile(ProfileKind::CreatedPosts, grid.size()));
    out.reactions.assign(users, ActionProfile(ProfileKind::SelfReactions, grid.size()));
    auto tz_of = [&](UserId u) { return u < tz_by_user.size() ? tz_by_user[u] : 0; };
    for (const auto& p : posts) {
        if (p.author >= users || !window.contains(p.created_at))
            continue;
        out.created[p.author].add(grid.bucket_index(p.created_at, tz_of(p.author)), 1.0);
    }
    for (const auto& j : joined) {
        if (j.reactor >= users || !window.contains(j.pair.reaction_time))
            continue;
        out.reactions[j.reactor].add(grid.bucket_index(j.pair.reaction_time, tz_of(j.reactor)),
                                     1.0);
    }
    return out;
}

//! Adapter for the published timestamp dump. Each line holds one post:
//!   author \t post_epoch \t reaction_epoch[,reaction_epoch...]
//! Reactor identities are not part of that layout, so the resulting
//! reactions carry kNoUser and only support delay analysis.
struct OpenDatasetLoad
{
    std::vector<PostRecord> posts;
    std::vector<ReactionRecord> reactions;
    LoadReport report;
    bool analysis_only = true;
};

inline OpenDatasetLoad parse_open_dataset(std::string_view buf, Network network, UserTable& users,
                                          const LoadOptions& opts = {},
                                          const std::string& path = "<memory>") {
    struct Raw
    {
        std::string_view author;
        EpochSeconds t = 0;
        std::vector<EpochSeconds> reactions;
        std::size_t line = 0;
    };
    auto [shards, report] = detail::parse_shards<Raw>(
        buf, path, opts, [&](const std::vector<std::string_view>& f, Raw& r) {
            if (f.size() < 2 || f.size() > 3 || f[0].empty())
                return detail::kMalformed;
            auto t = tsv::parse_int(f[1]);
            if (!t)
                return detail::kMalformed;
            r.author = f[0];
            r.t = *t;
            if (f.size() == 3 && !f[2].empty()) {
                std::string_view rest = f[2];
                while (!rest.empty()) {
                    const auto comma = rest.find(',');
                    auto v = tsv::parse_int(rest.substr(0, comma));
                    if (!v)
                        return detail::kMalformed;
                    r.reactions.push_back(*v);
                    if (comma == std::string_view::npos)
                        break;
                    rest.remove_prefix(comma + 1);
                }
            }
            return detail::kOk;
        });
    OpenDatasetLoad out;
    out.report = std::move(report);
    std::size_t n = 0;
    for (auto& shard : shards)
        for (auto& r : shard) {
            std::string pid = "o" + std::to_string(n++);
            for (EpochSeconds rt : r.reactions)
                out.reactions.push_back({network, pid, kNoUser, rt});
            out.posts.push_back({network, users.intern(r.author), std::move(pid), r.t});
        }
    return out;
}

inline std::ostream& operator<<(std::ostream& os, const LoadReport& r) {
    os << r.path << "\tlines=" << r.lines << "\tparsed=" << r.parsed
       << "\tmalformed=" << r.malformed << "\tcomments=" << r.comments
       << "\tother_network=" << r.filtered;
    return os;
}

} // namespace besttime
