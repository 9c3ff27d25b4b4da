// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Tab-separated text helpers: whole-file reads, byte-range sharding with
// line realignment, and field splitting without allocation.

#pragma once

#include <besttime/error.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace besttime::tsv {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("error while reading '" + path + "'");
    return std::move(ss).str();
}

//! Cut `buf` into at most `shards` contiguous pieces. Each cut is moved
//! forward to just past the next '\n' so no line straddles two shards.
inline std::vector<std::string_view> split_shards(std::string_view buf, std::size_t shards) {
    std::vector<std::string_view> out;
    if (buf.empty())
        return out;
    if (shards == 0)
        shards = 1;
    const std::size_t target = buf.size() / shards + 1;
    std::size_t begin = 0;
    while (begin < buf.size()) {
        std::size_t end = std::min(buf.size(), begin + target);
        if (end < buf.size()) {
            const std::size_t nl = buf.find('\n', end - 1);
            end = nl == std::string_view::npos ? buf.size() : nl + 1;
        }
        out.push_back(buf.substr(begin, end - begin));
        begin = end;
    }
    return out;
}

//! Calls fn(line) for every line, without the trailing '\n' (and '\r').
template <typename Fn>
void for_each_line(std::string_view buf, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < buf.size()) {
        std::size_t nl = buf.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = buf.size();
        std::string_view line = buf.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        fn(line);
        pos = nl + 1;
    }
}

//! Splits on '\t' into `fields`; returns the field count.
inline std::size_t split_fields(std::string_view line, std::vector<std::string_view>& fields) {
    fields.clear();
    std::size_t pos = 0;
    while (true) {
        const std::size_t tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    return fields.size();
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last)
        return std::nullopt;
    return v;
}

//! Runs fn(shard_index, shard) over shards, using up to `workers` threads.
template <typename Fn>
void parallel_shards(const std::vector<std::string_view>& shards, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || shards.size() <= 1) {
        for (std::size_t i = 0; i < shards.size(); ++i)
            fn(i, shards[i]);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(shards.size());
    for (std::size_t i = 0; i < shards.size(); ++i)
        pool.emplace_back([&, i] { fn(i, shards[i]); });
    for (auto& t : pool)
        t.join();
}

} // namespace besttime::tsv
