// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "minipkg/errors.hpp"

namespace minipkg
{
    // A version is an optional epoch, a dot-separated list of segments and an
    // optional local part after `+`. Each segment holds one or more units: a
    // non-negative integer or a lowercase alphabetic token ("2.0rc1" has the
    // segments [2] and [0, "rc", 1]). `_` and `-` separate segments exactly
    // like `.` and are canonicalized to `.` on render.
    struct version
    {
        using unit = std::variant<std::uint64_t, std::string>;
        using segment = std::vector<unit>;

        std::uint64_t epoch = 0;
        std::vector<segment> segments;
        std::vector<segment> local;

        auto operator==(const version&) const -> bool = default;
    };

    namespace detail
    {
        inline auto is_digit(char c) -> bool
        {
            return c >= '0' && c <= '9';
        }

        inline auto is_alpha(char c) -> bool
        {
            return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        }

        inline auto to_lower(char c) -> char
        {
            return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        }

        inline auto parse_segment(std::string_view chunk, std::string_view full)
            -> version::segment
        {
            if (chunk.empty())
            {
                throw malformed_version("empty segment in '" + std::string(full) + "'");
            }
            version::segment seg;
            std::size_t i = 0;
            while (i < chunk.size())
            {
                if (is_digit(chunk[i]))
                {
                    std::size_t j = i;
                    while (j < chunk.size() && is_digit(chunk[j]))
                    {
                        ++j;
                    }
                    std::uint64_t value = 0;
                    auto res = std::from_chars(chunk.data() + i, chunk.data() + j, value);
                    if (res.ec != std::errc())
                    {
                        throw malformed_version(
                            "numeric component out of range in '" + std::string(full) + "'"
                        );
                    }
                    seg.emplace_back(value);
                    i = j;
                }
                else if (is_alpha(chunk[i]))
                {
                    std::string token;
                    while (i < chunk.size() && is_alpha(chunk[i]))
                    {
                        token.push_back(to_lower(chunk[i]));
                        ++i;
                    }
                    seg.emplace_back(std::move(token));
                }
                else
                {
                    throw malformed_version(
                        "illegal character '" + std::string(1, chunk[i]) + "' in '"
                        + std::string(full) + "'"
                    );
                }
            }
            return seg;
        }

        inline auto parse_segment_list(std::string_view text, std::string_view full)
            -> std::vector<version::segment>
        {
            std::vector<version::segment> out;
            std::size_t start = 0;
            for (std::size_t i = 0; i <= text.size(); ++i)
            {
                if (i == text.size() || text[i] == '.' || text[i] == '_' || text[i] == '-')
                {
                    out.push_back(parse_segment(text.substr(start, i - start), full));
                    start = i + 1;
                }
            }
            return out;
        }
    }

    inline auto parse_version(std::string_view text) -> version
    {
        if (text.empty())
        {
            throw malformed_version("empty string");
        }
        version v;
        std::string_view rest = text;

        if (auto bang = rest.find('!'); bang != std::string_view::npos)
        {
            auto epoch_text = rest.substr(0, bang);
            if (epoch_text.empty())
            {
                throw malformed_version("empty epoch in '" + std::string(text) + "'");
            }
            for (char c : epoch_text)
            {
                if (!detail::is_digit(c))
                {
                    throw malformed_version(
                        "epoch must be a non-negative integer in '" + std::string(text) + "'"
                    );
                }
            }
            auto res = std::from_chars(epoch_text.data(), epoch_text.data() + epoch_text.size(), v.epoch);
            if (res.ec != std::errc())
            {
                throw malformed_version("epoch out of range in '" + std::string(text) + "'");
            }
            rest = rest.substr(bang + 1);
            if (rest.find('!') != std::string_view::npos)
            {
                throw malformed_version("more than one epoch marker in '" + std::string(text) + "'");
            }
        }

        std::string_view main = rest;
        std::string_view local;
        if (auto plus = rest.find('+'); plus != std::string_view::npos)
        {
            main = rest.substr(0, plus);
            local = rest.substr(plus + 1);
            if (local.empty())
            {
                throw malformed_version("empty local part in '" + std::string(text) + "'");
            }
            if (local.find('+') != std::string_view::npos)
            {
                throw malformed_version("more than one local marker in '" + std::string(text) + "'");
            }
        }
        if (main.empty())
        {
            throw malformed_version("missing release segments in '" + std::string(text) + "'");
        }

        v.segments = detail::parse_segment_list(main, text);
        if (!local.empty())
        {
            v.local = detail::parse_segment_list(local, text);
        }
        return v;
    }

    inline auto render(const version& v) -> std::string
    {
        std::string out;
        if (v.epoch != 0)
        {
            out += std::to_string(v.epoch);
            out += '!';
        }
        auto append_segments = [&out](const std::vector<version::segment>& segs)
        {
            bool first_seg = true;
            for (const auto& seg : segs)
            {
                if (!first_seg)
                {
                    out += '.';
                }
                first_seg = false;
                for (const auto& u : seg)
                {
                    if (std::holds_alternative<std::uint64_t>(u))
                    {
                        out += std::to_string(std::get<std::uint64_t>(u));
                    }
                    else
                    {
                        out += std::get<std::string>(u);
                    }
                }
            }
        };
        append_segments(v.segments);
        if (!v.local.empty())
        {
            out += '+';
            append_segments(v.local);
        }
        return out;
    }

    namespace detail
    {
        // `dev` sorts below every other alphabetic token, and any alphabetic
        // token sorts below any number. Missing trailing units pad as 0.
        inline auto compare_units(const version::unit& a, const version::unit& b)
            -> std::strong_ordering
        {
            const bool a_num = std::holds_alternative<std::uint64_t>(a);
            const bool b_num = std::holds_alternative<std::uint64_t>(b);
            if (a_num && b_num)
            {
                return std::get<std::uint64_t>(a) <=> std::get<std::uint64_t>(b);
            }
            if (a_num != b_num)
            {
                return a_num ? std::strong_ordering::greater : std::strong_ordering::less;
            }
            const auto& sa = std::get<std::string>(a);
            const auto& sb = std::get<std::string>(b);
            const bool a_dev = sa == "dev";
            const bool b_dev = sb == "dev";
            if (a_dev || b_dev)
            {
                if (a_dev && b_dev)
                {
                    return std::strong_ordering::equal;
                }
                return a_dev ? std::strong_ordering::less : std::strong_ordering::greater;
            }
            int c = sa.compare(sb);
            if (c < 0)
            {
                return std::strong_ordering::less;
            }
            if (c > 0)
            {
                return std::strong_ordering::greater;
            }
            return std::strong_ordering::equal;
        }

        inline const version::unit zero_unit = std::uint64_t{ 0 };

        inline auto compare_segments(const version::segment& a, const version::segment& b)
            -> std::strong_ordering
        {
            const std::size_t n = std::max(a.size(), b.size());
            for (std::size_t i = 0; i < n; ++i)
            {
                const version::unit& ua = i < a.size() ? a[i] : zero_unit;
                const version::unit& ub = i < b.size() ? b[i] : zero_unit;
                if (auto c = compare_units(ua, ub); c != std::strong_ordering::equal)
                {
                    return c;
                }
            }
            return std::strong_ordering::equal;
        }

        inline const version::segment zero_segment = { zero_unit };

        inline auto compare_segment_lists(
            const std::vector<version::segment>& a,
            const std::vector<version::segment>& b
        ) -> std::strong_ordering
        {
            const std::size_t n = std::max(a.size(), b.size());
            for (std::size_t i = 0; i < n; ++i)
            {
                const version::segment& sa = i < a.size() ? a[i] : zero_segment;
                const version::segment& sb = i < b.size() ? b[i] : zero_segment;
                if (auto c = compare_segments(sa, sb); c != std::strong_ordering::equal)
                {
                    return c;
                }
            }
            return std::strong_ordering::equal;
        }
    }

    // Total order over (epoch, segments, local). Trailing components pad as
    // numeric zero, so "1.0" and "1.0.0" compare equal.
    inline auto compare_versions(const version& a, const version& b) -> std::strong_ordering
    {
        if (auto c = a.epoch <=> b.epoch; c != std::strong_ordering::equal)
        {
            return c;
        }
        if (auto c = detail::compare_segment_lists(a.segments, b.segments);
            c != std::strong_ordering::equal)
        {
            return c;
        }
        return detail::compare_segment_lists(a.local, b.local);
    }

    inline auto versions_equal(const version& a, const version& b) -> bool
    {
        return compare_versions(a, b) == std::strong_ordering::equal;
    }

    // True when `v` equals `prefix` or extends it segment-by-segment, the
    // meaning of a `name=X` match spec.
    inline auto version_starts_with(const version& v, const version& prefix) -> bool
    {
        if (v.epoch != prefix.epoch)
        {
            return false;
        }
        if (versions_equal(v, prefix))
        {
            return true;
        }
        if (prefix.segments.size() > v.segments.size())
        {
            return false;
        }
        for (std::size_t i = 0; i < prefix.segments.size(); ++i)
        {
            if (detail::compare_segments(v.segments[i], prefix.segments[i])
                != std::strong_ordering::equal)
            {
                return false;
            }
            // an exact structural match is required; padding applies only to
            // whole missing segments
            if (v.segments[i].size() != prefix.segments[i].size())
            {
                return false;
            }
        }
        if (!prefix.local.empty())
        {
            if (prefix.local.size() > v.local.size())
            {
                return false;
            }
            for (std::size_t i = 0; i < prefix.local.size(); ++i)
            {
                if (detail::compare_segments(v.local[i], prefix.local[i])
                    != std::strong_ordering::equal)
                {
                    return false;
                }
            }
        }
        return true;
    }
}
