// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "minipkg/digest.hpp"
#include "minipkg/errors.hpp"
#include "minipkg/platform.hpp"
#include "minipkg/record.hpp"

namespace minipkg
{
    struct channel_index
    {
        std::string channel;
        platform plat = platform::noarch;
        std::map<std::string, package_record> records;
    };

    // Declared system facts used to materialize virtual packages. The core
    // never probes the live system; callers pass an explicit profile.
    struct platform_profile
    {
        platform plat = platform::linux_64;
        std::optional<std::string> glibc_version;
        std::optional<std::string> osx_version;

        auto operator==(const platform_profile&) const -> bool = default;
    };

    inline auto detect_virtual_packages(const platform_profile& profile)
        -> std::vector<virtual_package>
    {
        std::vector<virtual_package> out;
        if (is_linux(profile.plat) && profile.glibc_version)
        {
            out.push_back(make_virtual_package("__glibc", *profile.glibc_version));
        }
        if (profile.plat == platform::win_64)
        {
            out.push_back(make_virtual_package("__win", "0"));
        }
        if (is_osx(profile.plat) && profile.osx_version)
        {
            out.push_back(make_virtual_package("__osx", *profile.osx_version));
        }
        return out;
    }

    inline auto parse_repodata(
        const std::string& text,
        const std::string& channel,
        platform plat
    ) -> channel_index
    {
        nlohmann::json doc;
        try
        {
            doc = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw malformed_index("channel '" + channel + "': " + e.what());
        }
        if (!doc.is_object() || !doc.contains("info") || !doc.contains("packages"))
        {
            throw malformed_index("channel '" + channel + "': missing info or packages");
        }
        const auto subdir = doc["info"].value("subdir", std::string{});
        if (subdir != platform_name(plat))
        {
            throw malformed_index(
                "channel '" + channel + "': subdir '" + subdir + "' does not match '"
                + std::string(platform_name(plat)) + "'"
            );
        }
        channel_index index;
        index.channel = channel;
        index.plat = plat;
        for (const auto& [filename, entry] : doc["packages"].items())
        {
            index.records.emplace(filename, record_from_index_entry(filename, entry, channel, plat));
        }
        return index;
    }

    namespace detail
    {
        inline auto is_http_locator(const std::string& locator) -> bool
        {
            return locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0;
        }

        // nullopt on 404 so callers can treat an absent subdir as empty
        inline auto http_fetch(const std::string& locator, const std::string& path)
            -> std::optional<std::string>
        {
            auto scheme_end = locator.find("://") + 3;
            auto path_start = locator.find('/', scheme_end);
            std::string base = path_start == std::string::npos ? locator
                                                               : locator.substr(0, path_start);
            std::string prefix = path_start == std::string::npos ? ""
                                                                 : locator.substr(path_start);
            httplib::Client client(base);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(30, 0);
            auto res = client.Get(prefix + path);
            if (!res)
            {
                throw source_unreachable(
                    "cannot reach '" + locator + "': " + httplib::to_string(res.error())
                );
            }
            if (res->status == 404)
            {
                return std::nullopt;
            }
            if (res->status != 200)
            {
                throw source_unreachable(
                    "fetching '" + locator + path + "' returned status "
                    + std::to_string(res->status)
                );
            }
            return res->body;
        }

        inline auto read_index_document(const std::string& locator, platform plat)
            -> std::optional<std::string>
        {
            std::string rel = std::string(platform_name(plat)) + "/repodata.json";
            if (is_http_locator(locator))
            {
                return http_fetch(locator, "/" + rel);
            }
            auto path = std::filesystem::path(locator) / rel;
            if (!std::filesystem::exists(path))
            {
                return std::nullopt;
            }
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw source_unreachable("cannot read '" + path.string() + "'");
            }
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
    }

    inline auto load_index(const std::string& locator, const std::string& channel, platform plat)
        -> channel_index
    {
        auto text = detail::read_index_document(locator, plat);
        if (!text)
        {
            throw source_unreachable(
                "no index document for platform '" + std::string(platform_name(plat))
                + "' at '" + locator + "'"
            );
        }
        return parse_repodata(*text, channel, plat);
    }

    // Loads the platform index plus the noarch index when either exists.
    // A channel carrying neither is unreachable.
    inline auto load_channel(const std::string& locator, const std::string& channel, platform plat)
        -> std::vector<channel_index>
    {
        std::vector<channel_index> out;
        auto plat_text = detail::read_index_document(locator, plat);
        if (plat_text)
        {
            out.push_back(parse_repodata(*plat_text, channel, plat));
        }
        if (plat != platform::noarch)
        {
            auto noarch_text = detail::read_index_document(locator, platform::noarch);
            if (noarch_text)
            {
                out.push_back(parse_repodata(*noarch_text, channel, platform::noarch));
            }
        }
        if (out.empty())
        {
            throw source_unreachable(
                "channel '" + channel + "' at '" + locator + "' has no index for '"
                + std::string(platform_name(plat)) + "' or noarch"
            );
        }
        return out;
    }

    struct candidate
    {
        package_record record;
        std::size_t rank = 0;
    };

    struct merged_index
    {
        platform plat = platform::noarch;
        std::vector<std::string> channel_order;
        std::map<std::string, std::vector<candidate>> by_name;

        [[nodiscard]] auto candidates_for(const std::string& name) const
            -> const std::vector<candidate>&
        {
            static const std::vector<candidate> empty;
            auto it = by_name.find(name);
            return it == by_name.end() ? empty : it->second;
        }

        // Deterministic fingerprint of everything solve can observe; the
        // lockfile embeds it so a changed index is detectable.
        [[nodiscard]] auto content_digest() const -> std::string
        {
            sha256_hasher h;
            for (const auto& [name, candidates] : by_name)
            {
                for (const auto& c : candidates)
                {
                    h.update(c.record.channel);
                    h.update("/");
                    h.update(platform_name(c.record.plat));
                    h.update("/");
                    h.update(c.record.filename);
                    h.update("#");
                    h.update(c.record.digest);
                    h.update("\n");
                }
            }
            return h.hex_digest();
        }
    };

    namespace detail
    {
        inline auto candidate_preferred(const candidate& a, const candidate& b) -> bool
        {
            if (a.rank != b.rank)
            {
                return a.rank < b.rank;
            }
            if (auto c = compare_versions(a.record.ver, b.record.ver);
                c != std::strong_ordering::equal)
            {
                return c == std::strong_ordering::greater;
            }
            if (a.record.build_number != b.record.build_number)
            {
                return a.record.build_number > b.record.build_number;
            }
            const bool a_noarch = a.record.plat == platform::noarch;
            const bool b_noarch = b.record.plat == platform::noarch;
            if (a_noarch != b_noarch)
            {
                return !a_noarch;
            }
            if (a.record.build != b.record.build)
            {
                return a.record.build < b.record.build;
            }
            return a.record.filename < b.record.filename;
        }
    }

    inline auto merge_channels(const std::vector<channel_index>& indexes) -> merged_index
    {
        merged_index merged;
        for (const auto& index : indexes)
        {
            if (index.plat != platform::noarch)
            {
                merged.plat = index.plat;
            }
        }

        std::vector<std::string> order;
        auto rank_of = [&order](const std::string& channel) -> std::size_t
        {
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                if (order[i] == channel)
                {
                    return i;
                }
            }
            order.push_back(channel);
            return order.size() - 1;
        };

        std::map<std::string, std::size_t> best_rank;
        for (const auto& index : indexes)
        {
            auto rank = rank_of(index.channel);
            for (const auto& [filename, record] : index.records)
            {
                auto it = best_rank.find(record.name);
                if (it == best_rank.end() || rank < it->second)
                {
                    best_rank[record.name] = rank;
                }
            }
        }

        for (const auto& index : indexes)
        {
            auto rank = rank_of(index.channel);
            for (const auto& [filename, record] : index.records)
            {
                // strict priority: lower-ranked channels shadow the rest
                if (rank != best_rank[record.name])
                {
                    continue;
                }
                merged.by_name[record.name].push_back(candidate{ record, rank });
            }
        }
        for (auto& [name, candidates] : merged.by_name)
        {
            std::sort(candidates.begin(), candidates.end(), detail::candidate_preferred);
        }
        merged.channel_order = order;
        return merged;
    }
}
