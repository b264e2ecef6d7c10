// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#ifndef MINIPKG_LOCK_HPP
#define MINIPKG_LOCK_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "minipkg/channel.hpp"
#include "minipkg/digest.hpp"
#include "minipkg/env_document.hpp"
#include "minipkg/environment.hpp"
#include "minipkg/errors.hpp"
#include "minipkg/solver.hpp"

namespace minipkg
{
    struct lock_entry
    {
        std::string name;
        std::string version;
        std::string build;
        std::string channel;
        std::string digest;

        auto operator==(const lock_entry&) const -> bool = default;
    };

    struct lock_section
    {
        std::string index_digest;
        std::vector<lock_entry> entries;

        auto operator==(const lock_section&) const -> bool = default;
    };

    struct lockfile_document
    {
        std::string spec_digest;
        std::string created;
        std::map<std::string, lock_section> sections;

        auto operator==(const lockfile_document&) const -> bool = default;
    };

    // A spec file is an environment document with a mandatory platforms list.
    inline auto parse_spec_file(const std::string& text) -> env_document
    {
        auto doc = parse_env_document(text);
        if (doc.platforms.empty())
        {
            throw malformed_document("spec file needs a non-empty 'platforms:' section");
        }
        return doc;
    }

    inline auto render_lockfile(const lockfile_document& doc) -> std::string
    {
        std::string out;
        out += "# minipkg lockfile v1\n";
        out += "# spec-sha256: " + doc.spec_digest + "\n";
        out += "# created: " + doc.created + "\n";
        for (const auto& [plat_name, section] : doc.sections)
        {
            out += "\n[" + plat_name + "]\n";
            out += "# index-sha256: " + section.index_digest + "\n";
            auto entries = section.entries;
            std::sort(
                entries.begin(),
                entries.end(),
                [](const lock_entry& a, const lock_entry& b) { return a.name < b.name; }
            );
            for (const auto& entry : entries)
            {
                out += entry.name + "=" + entry.version + "=" + entry.build + " "
                       + entry.channel + " " + entry.digest + "\n";
            }
        }
        return out;
    }

    inline auto parse_lockfile(const std::string& text) -> lockfile_document
    {
        std::vector<std::string> lines;
        std::string current;
        for (char c : text)
        {
            if (c == '\n')
            {
                lines.push_back(current);
                current.clear();
            }
            else if (c != '\r')
            {
                current.push_back(c);
            }
        }
        if (!current.empty())
        {
            lines.push_back(current);
        }
        if (lines.size() < 3 || lines[0] != "# minipkg lockfile v1"
            || lines[1].rfind("# spec-sha256: ", 0) != 0
            || lines[2].rfind("# created: ", 0) != 0)
        {
            throw malformed_document("not a minipkg lockfile");
        }
        lockfile_document doc;
        doc.spec_digest = lines[1].substr(15);
        doc.created = lines[2].substr(11);
        lock_section* section = nullptr;
        for (std::size_t i = 3; i < lines.size(); ++i)
        {
            const auto& line = lines[i];
            if (line.empty())
            {
                continue;
            }
            if (line.front() == '[' && line.back() == ']')
            {
                auto plat_name = line.substr(1, line.size() - 2);
                parse_platform(plat_name);
                if (doc.sections.count(plat_name) != 0)
                {
                    throw malformed_document("duplicate lockfile section '" + plat_name + "'");
                }
                section = &doc.sections[plat_name];
                continue;
            }
            if (section == nullptr)
            {
                throw malformed_document("lockfile line outside a section: '" + line + "'");
            }
            if (line.rfind("# index-sha256: ", 0) == 0)
            {
                section->index_digest = line.substr(16);
                continue;
            }
            auto first_space = line.find(' ');
            auto second_space
                = first_space == std::string::npos ? std::string::npos
                                                   : line.find(' ', first_space + 1);
            if (second_space == std::string::npos
                || line.find(' ', second_space + 1) != std::string::npos)
            {
                throw malformed_document("bad lockfile entry: '" + line + "'");
            }
            auto pin = line.substr(0, first_space);
            lock_entry entry;
            entry.channel = line.substr(first_space + 1, second_space - first_space - 1);
            entry.digest = line.substr(second_space + 1);
            auto eq1 = pin.find('=');
            auto eq2 = eq1 == std::string::npos ? std::string::npos : pin.find('=', eq1 + 1);
            if (eq1 == std::string::npos || eq2 == std::string::npos || eq1 == 0
                || pin.find('=', eq2 + 1) != std::string::npos)
            {
                throw malformed_document("bad lockfile pin: '" + pin + "'");
            }
            entry.name = pin.substr(0, eq1);
            entry.version = pin.substr(eq1 + 1, eq2 - eq1 - 1);
            entry.build = pin.substr(eq2 + 1);
            if (entry.version.empty() || entry.build.empty() || entry.channel.empty()
                || entry.digest.empty())
            {
                throw malformed_document("bad lockfile entry: '" + line + "'");
            }
            section->entries.push_back(std::move(entry));
        }
        return doc;
    }

    // One solve per platform; any failure aborts the whole generation with a
    // per-platform outcome report.
    inline auto generate_lock(
        const env_document& spec,
        const std::string& spec_digest,
        const std::map<std::string, merged_index>& indexes,
        const std::map<std::string, std::vector<virtual_package>>& virtuals,
        const std::string& created
    ) -> lockfile_document
    {
        std::vector<match_spec> specs;
        specs.reserve(spec.dependencies.size());
        for (const auto& dep : spec.dependencies)
        {
            specs.push_back(parse_matchspec(dep));
        }
        std::set<std::string> plat_names(spec.platforms.begin(), spec.platforms.end());

        lockfile_document doc;
        doc.spec_digest = spec_digest;
        doc.created = created;
        bool failed = false;
        std::string report;
        for (const auto& plat_name : plat_names)
        {
            auto index_it = indexes.find(plat_name);
            if (index_it == indexes.end())
            {
                throw platform_missing("no index for '" + plat_name + "'");
            }
            solve_request request;
            request.specs = specs;
            request.index = index_it->second;
            if (auto virt_it = virtuals.find(plat_name); virt_it != virtuals.end())
            {
                request.virtuals = virt_it->second;
            }

            std::optional<unsat_explanation> failure;
            std::optional<solution> outcome;
            try
            {
                auto result = solve(request);
                if (result.sat)
                {
                    outcome = std::move(result.sat);
                }
                else
                {
                    failure = std::move(result.unsat);
                }
            }
            catch (const spec_has_no_candidates&)
            {
                failure = explain(request);
            }

            if (outcome)
            {
                lock_section section;
                section.index_digest = index_it->second.content_digest();
                for (const auto& record : outcome->records)
                {
                    section.entries.push_back(
                        { record.name, record.version, record.build, record.channel,
                          record.digest }
                    );
                }
                doc.sections[plat_name] = std::move(section);
                report += plat_name + ": ok\n";
            }
            else
            {
                failed = true;
                report += plat_name + ": unsatisfiable\n";
                std::istringstream rendered(render_explanation(*failure));
                std::string line;
                while (std::getline(rendered, line))
                {
                    report += "  " + line + "\n";
                }
            }
        }
        if (failed)
        {
            throw lock_unsatisfiable("\n" + report);
        }
        return doc;
    }

    // Installs exactly the listed entries: no solving, archives fetched and
    // digest-checked before the prefix is touched.
    inline auto install_from_lock(
        const lockfile_document& lock,
        platform plat,
        const std::filesystem::path& prefix_in,
        const std::map<std::string, std::string>& locators,
        const std::string& timestamp,
        const apply_hooks* hooks = nullptr
    ) -> transaction_result
    {
        auto section_it = lock.sections.find(std::string(platform_name(plat)));
        if (section_it == lock.sections.end())
        {
            throw platform_missing(
                "lockfile has no section for '" + std::string(platform_name(plat)) + "'"
            );
        }
        auto prefix = env_detail::normalize_prefix(prefix_in);
        if (is_environment(prefix))
        {
            throw environment_exists(prefix.string());
        }
        if (std::filesystem::exists(prefix) && !std::filesystem::is_directory(prefix))
        {
            throw environment_exists(prefix.string() + " is not a directory");
        }
        if (std::filesystem::is_directory(prefix) && !std::filesystem::is_empty(prefix))
        {
            throw environment_exists(prefix.string() + " is not empty");
        }

        auto fetch_bytes = [&](const std::string& locator, const std::string& rel)
            -> std::optional<std::string>
        {
            if (detail::is_http_locator(locator))
            {
                return detail::http_fetch(locator, "/" + rel);
            }
            auto path = std::filesystem::path(locator) / rel;
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                return std::nullopt;
            }
            return std::string(
                (std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>()
            );
        };

        memory_archive_source archives;
        std::vector<package_record> records;
        std::set<std::string> seen_names;
        std::vector<std::string> channels;
        for (const auto& entry : section_it->second.entries)
        {
            if (!seen_names.insert(entry.name).second)
            {
                throw malformed_document("duplicate lock entry for '" + entry.name + "'");
            }
            auto locator_it = locators.find(entry.channel);
            if (locator_it == locators.end())
            {
                throw source_unreachable("no locator for channel '" + entry.channel + "'");
            }
            auto filename = expected_filename(entry.name, entry.version, entry.build);
            auto bytes
                = fetch_bytes(locator_it->second, std::string(platform_name(plat)) + "/" + filename);
            if (!bytes)
            {
                bytes = fetch_bytes(locator_it->second, "noarch/" + filename);
            }
            if (!bytes)
            {
                throw source_unreachable(
                    locator_it->second + ": no archive '" + filename + "' for '"
                    + std::string(platform_name(plat)) + "' or 'noarch'"
                );
            }
            auto digest = sha256_hex(*bytes);
            if (digest != entry.digest)
            {
                throw digest_mismatch(
                    "archive for '" + filename + "': expected " + entry.digest + ", got "
                    + digest
                );
            }
            auto archive = read_archive(*bytes);
            if (archive.name != entry.name || archive.version != entry.version
                || archive.build != entry.build)
            {
                throw malformed_archive(
                    "archive metadata disagrees with lock entry '" + filename + "'"
                );
            }
            package_record record;
            record.name = entry.name;
            record.version = entry.version;
            record.build = entry.build;
            record.build_number = archive.build_number;
            record.depends = archive.depends;
            record.channel = entry.channel;
            record.plat = archive.subdir;
            record.filename = filename;
            record.digest = entry.digest;
            record.ver = parse_version(entry.version);
            archives.add(record, std::move(*bytes));
            records.push_back(std::move(record));
            if (std::find(channels.begin(), channels.end(), entry.channel) == channels.end())
            {
                channels.push_back(entry.channel);
            }
        }
        std::sort(
            records.begin(),
            records.end(),
            [](const package_record& a, const package_record& b) { return a.name < b.name; }
        );

        solution target;
        target.records = records;
        environment_state empty_state;
        empty_state.prefix = prefix;
        auto tx = plan_transaction(empty_state, target);

        std::vector<std::string> pins;
        pins.reserve(records.size());
        for (const auto& record : records)
        {
            pins.push_back(record.name + "=" + record.version + "=" + record.build);
        }

        bool created_prefix = !std::filesystem::exists(prefix);
        platform_profile profile;
        profile.plat = plat;
        init_environment(prefix, profile, channels);
        transaction_context ctx{ timestamp, "create", pins, std::nullopt };
        try
        {
            auto state = apply_transaction(tx, prefix, archives, ctx, hooks);
            return { std::move(state), std::move(tx) };
        }
        catch (...)
        {
            std::filesystem::remove_all(env_detail::meta_dir(prefix));
            if (created_prefix)
            {
                std::filesystem::remove_all(prefix);
            }
            throw;
        }
    }
}

#endif
