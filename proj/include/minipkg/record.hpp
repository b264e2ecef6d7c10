// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minipkg/errors.hpp"
#include "minipkg/match_spec.hpp"
#include "minipkg/platform.hpp"
#include "minipkg/version.hpp"

namespace minipkg
{
    // One concrete package build as listed in a channel index. `version` is
    // kept verbatim from the index document; `ver` is its parsed form.
    struct package_record
    {
        std::string name;
        std::string version;
        std::string build;
        std::uint64_t build_number = 0;
        std::vector<std::string> depends;
        std::string channel;
        platform plat = platform::noarch;
        std::string filename;
        std::string digest;
        minipkg::version ver;

        auto operator==(const package_record& other) const -> bool
        {
            return name == other.name && version == other.version && build == other.build
                   && build_number == other.build_number && depends == other.depends
                   && channel == other.channel && plat == other.plat
                   && filename == other.filename && digest == other.digest;
        }
    };

    struct virtual_package
    {
        std::string name;
        version ver;
        std::string version_text;
        std::string build = "0";
    };

    inline auto expected_filename(
        const std::string& name,
        const std::string& version,
        const std::string& build
    ) -> std::string
    {
        return name + "-" + version + "-" + build + ".tar";
    }

    inline auto spec_matches(const match_spec& spec, const package_record& record) -> bool
    {
        if (spec.name != record.name)
        {
            return false;
        }
        if (spec.channel && *spec.channel != record.channel)
        {
            return false;
        }
        if (!constraint_matches(spec.constraint, record.ver))
        {
            return false;
        }
        return build_matches(spec.build, record.build);
    }

    inline auto spec_matches(const match_spec& spec, const virtual_package& pkg) -> bool
    {
        if (spec.name != pkg.name)
        {
            return false;
        }
        // virtual packages belong to no channel
        if (spec.channel)
        {
            return false;
        }
        if (!constraint_matches(spec.constraint, pkg.ver))
        {
            return false;
        }
        return build_matches(spec.build, pkg.build);
    }

    inline auto make_virtual_package(std::string name, const std::string& version_text)
        -> virtual_package
    {
        virtual_package pkg;
        pkg.name = std::move(name);
        pkg.version_text = version_text;
        pkg.ver = parse_version(version_text);
        return pkg;
    }

    // Serialization for the index document entry payload; field names are
    // part of the wire format.
    inline auto record_to_index_entry(const package_record& record) -> nlohmann::ordered_json
    {
        nlohmann::ordered_json entry;
        entry["name"] = record.name;
        entry["version"] = record.version;
        entry["build"] = record.build;
        entry["build_number"] = record.build_number;
        entry["depends"] = record.depends;
        entry["sha256"] = record.digest;
        return entry;
    }

    inline auto record_from_index_entry(
        const std::string& filename,
        const nlohmann::json& entry,
        const std::string& channel,
        platform plat
    ) -> package_record
    {
        package_record record;
        record.filename = filename;
        record.channel = channel;
        record.plat = plat;
        try
        {
            entry.at("name").get_to(record.name);
            entry.at("version").get_to(record.version);
            entry.at("build").get_to(record.build);
            entry.at("build_number").get_to(record.build_number);
            entry.at("depends").get_to(record.depends);
            entry.at("sha256").get_to(record.digest);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw malformed_index("entry '" + filename + "': " + e.what());
        }
        try
        {
            record.ver = parse_version(record.version);
        }
        catch (const malformed_version& e)
        {
            throw malformed_index("entry '" + filename + "': " + e.what());
        }
        for (const auto& dep : record.depends)
        {
            try
            {
                parse_matchspec(dep);
            }
            catch (const error& e)
            {
                throw malformed_index(
                    "entry '" + filename + "': depends entry '" + dep + "': " + e.what()
                );
            }
        }
        if (filename != expected_filename(record.name, record.version, record.build))
        {
            throw malformed_index(
                "entry '" + filename + "': filename does not match name-version-build"
            );
        }
        return record;
    }
}
