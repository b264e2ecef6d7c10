// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minipkg/errors.hpp"
#include "minipkg/platform.hpp"
#include "minipkg/record.hpp"
#include "minipkg/tar.hpp"

namespace minipkg
{
    // Relocatable archives carry their payload under arbitrary relative
    // paths plus two metadata documents: info/index.json (the record) and
    // info/paths.json (per-file relocation instructions).
    struct path_entry
    {
        std::string path;
        std::string mode;
        std::optional<std::string> prefix_placeholder;
    };

    struct package_archive
    {
        std::string name;
        std::string version;
        std::string build;
        std::uint64_t build_number = 0;
        std::vector<std::string> depends;
        platform subdir = platform::noarch;
        std::vector<path_entry> paths;
        std::map<std::string, std::string> payload;
    };

    // Build prefixes are conventionally long so that any realistic install
    // prefix fits into a length-preserving binary patch.
    inline auto long_placeholder() -> const std::string&
    {
        static const std::string value = []
        {
            std::string s = "/opt/minipkg_placeholder";
            while (s.size() < 255)
            {
                s += "_pad";
            }
            s.resize(255);
            return s;
        }();
        return value;
    }

    inline auto compose_archive(const package_archive& archive) -> std::string
    {
        std::map<std::string, std::string> files = archive.payload;

        nlohmann::ordered_json index;
        index["name"] = archive.name;
        index["version"] = archive.version;
        index["build"] = archive.build;
        index["build_number"] = archive.build_number;
        index["depends"] = archive.depends;
        index["subdir"] = platform_name(archive.subdir);
        files["info/index.json"] = index.dump(2) + "\n";

        nlohmann::ordered_json paths = nlohmann::ordered_json::array();
        for (const auto& entry : archive.paths)
        {
            nlohmann::ordered_json e;
            e["path"] = entry.path;
            e["mode"] = entry.mode;
            if (entry.prefix_placeholder)
            {
                e["prefix_placeholder"] = *entry.prefix_placeholder;
            }
            paths.push_back(std::move(e));
        }
        nlohmann::ordered_json doc;
        doc["paths"] = std::move(paths);
        files["info/paths.json"] = doc.dump(2) + "\n";

        return tar::compose(files);
    }

    inline auto read_archive(const std::string& data) -> package_archive
    {
        auto files = tar::extract(data);
        auto index_it = files.find("info/index.json");
        auto paths_it = files.find("info/paths.json");
        if (index_it == files.end() || paths_it == files.end())
        {
            throw malformed_archive("missing info/index.json or info/paths.json");
        }

        package_archive archive;
        try
        {
            auto index = nlohmann::json::parse(index_it->second);
            index.at("name").get_to(archive.name);
            index.at("version").get_to(archive.version);
            index.at("build").get_to(archive.build);
            index.at("build_number").get_to(archive.build_number);
            index.at("depends").get_to(archive.depends);
            archive.subdir = parse_platform(index.at("subdir").get<std::string>());

            auto paths = nlohmann::json::parse(paths_it->second);
            for (const auto& e : paths.at("paths"))
            {
                path_entry entry;
                e.at("path").get_to(entry.path);
                e.at("mode").get_to(entry.mode);
                if (entry.mode != "text" && entry.mode != "binary")
                {
                    throw malformed_archive("unknown path mode '" + entry.mode + "'");
                }
                if (e.contains("prefix_placeholder"))
                {
                    entry.prefix_placeholder = e["prefix_placeholder"].get<std::string>();
                }
                archive.paths.push_back(std::move(entry));
            }
        }
        catch (const nlohmann::json::exception& e)
        {
            throw malformed_archive(std::string("bad metadata: ") + e.what());
        }
        catch (const malformed_document& e)
        {
            throw malformed_archive(std::string("bad metadata: ") + e.what());
        }

        for (auto& [path, content] : files)
        {
            if (path == "info/index.json" || path == "info/paths.json")
            {
                continue;
            }
            bool listed = false;
            for (const auto& entry : archive.paths)
            {
                if (entry.path == path)
                {
                    listed = true;
                    break;
                }
            }
            if (!listed)
            {
                throw malformed_archive("payload file not listed in paths.json: " + path);
            }
            archive.payload.emplace(path, std::move(content));
        }
        for (const auto& entry : archive.paths)
        {
            if (archive.payload.count(entry.path) == 0)
            {
                throw malformed_archive("paths.json lists a missing file: " + entry.path);
            }
        }
        return archive;
    }

    inline auto to_record(const package_archive& archive, std::string channel, std::string digest)
        -> package_record
    {
        package_record record;
        record.name = archive.name;
        record.version = archive.version;
        record.build = archive.build;
        record.build_number = archive.build_number;
        record.depends = archive.depends;
        record.channel = std::move(channel);
        record.plat = archive.subdir;
        record.filename = expected_filename(record.name, record.version, record.build);
        record.digest = std::move(digest);
        record.ver = parse_version(record.version);
        return record;
    }

    inline auto relocate_text(
        std::string content,
        const std::string& placeholder,
        const std::string& prefix
    ) -> std::string
    {
        std::string out;
        std::size_t start = 0;
        while (true)
        {
            auto pos = content.find(placeholder, start);
            if (pos == std::string::npos)
            {
                out.append(content, start, std::string::npos);
                break;
            }
            out.append(content, start, pos - start);
            out.append(prefix);
            start = pos + placeholder.size();
        }
        return out;
    }

    // length-preserving patch: the new prefix plus NUL padding occupies
    // exactly the placeholder's bytes
    inline auto relocate_binary(
        std::string content,
        const std::string& placeholder,
        const std::string& prefix
    ) -> std::string
    {
        if (prefix.size() > placeholder.size())
        {
            throw prefix_too_long(
                "prefix of " + std::to_string(prefix.size())
                + " bytes does not fit a placeholder of "
                + std::to_string(placeholder.size()) + " bytes"
            );
        }
        std::string patch = prefix;
        patch.resize(placeholder.size(), '\0');
        std::size_t pos = 0;
        while ((pos = content.find(placeholder, pos)) != std::string::npos)
        {
            content.replace(pos, placeholder.size(), patch);
            pos += placeholder.size();
        }
        return content;
    }

    inline auto relocate_entry(
        const path_entry& entry,
        std::string content,
        const std::string& prefix
    ) -> std::string
    {
        if (!entry.prefix_placeholder)
        {
            return content;
        }
        if (entry.mode == "binary")
        {
            return relocate_binary(std::move(content), *entry.prefix_placeholder, prefix);
        }
        return relocate_text(std::move(content), *entry.prefix_placeholder, prefix);
    }
}
