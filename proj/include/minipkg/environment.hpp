// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#ifndef MINIPKG_ENVIRONMENT_HPP
#define MINIPKG_ENVIRONMENT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "minipkg/archive.hpp"
#include "minipkg/channel.hpp"
#include "minipkg/digest.hpp"
#include "minipkg/env_document.hpp"
#include "minipkg/errors.hpp"
#include "minipkg/file_lock.hpp"
#include "minipkg/match_spec.hpp"
#include "minipkg/record.hpp"
#include "minipkg/solver.hpp"

namespace minipkg
{
    struct history_entry
    {
        std::string timestamp;
        std::string op;
        std::vector<std::string> specs;
        std::size_t unlinked = 0;
        std::size_t linked = 0;

        auto operator==(const history_entry&) const -> bool = default;
    };

    struct environment_state
    {
        std::filesystem::path prefix;
        platform_profile profile;
        std::vector<std::string> channels;
        std::vector<package_record> installed;
        std::vector<match_spec> pins;
        std::vector<history_entry> history;

        auto operator==(const environment_state&) const -> bool = default;
    };

    // Unlink runs before link; both orders respect the dependency topology.
    struct transaction
    {
        std::vector<package_record> unlink;
        std::vector<package_record> link;

        [[nodiscard]] auto empty() const -> bool
        {
            return unlink.empty() && link.empty();
        }
    };

    struct transaction_context
    {
        std::string timestamp;
        std::string op;
        std::vector<std::string> specs;
        std::optional<std::vector<std::string>> set_channels;
    };

    // Steps are announced before each mutation; a throwing hook simulates a
    // crash at that point and must leave the prefix unchanged after rollback.
    struct apply_hooks
    {
        std::function<void(const std::string& step)> on_step;
    };

    struct archive_source
    {
        virtual ~archive_source() = default;

        // Returns raw archive bytes for the record.
        virtual auto fetch(const package_record& record) -> std::string = 0;
    };

    // Serves archives from `<locator>/<subdir>/<filename>` per channel name;
    // http(s) locators are fetched, anything else is a directory path.
    class channel_archive_source : public archive_source
    {
    public:
        explicit channel_archive_source(std::map<std::string, std::string> locators)
            : m_locators(std::move(locators))
        {
        }

        auto fetch(const package_record& record) -> std::string override
        {
            auto it = m_locators.find(record.channel);
            if (it == m_locators.end())
            {
                throw source_unreachable("no locator for channel '" + record.channel + "'");
            }
            auto rel = std::string(platform_name(record.plat)) + "/" + record.filename;
            if (detail::is_http_locator(it->second))
            {
                auto body = detail::http_fetch(it->second, "/" + rel);
                if (!body)
                {
                    throw source_unreachable(it->second + "/" + rel);
                }
                return std::move(*body);
            }
            auto path = std::filesystem::path(it->second) / rel;
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw source_unreachable(path.string());
            }
            std::string bytes(
                (std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>()
            );
            return bytes;
        }

    private:
        std::map<std::string, std::string> m_locators;
    };

    class memory_archive_source : public archive_source
    {
    public:
        auto add(const package_record& record, std::string bytes) -> void
        {
            m_store[record.channel + "/" + record.filename] = std::move(bytes);
        }

        auto fetch(const package_record& record) -> std::string override
        {
            auto it = m_store.find(record.channel + "/" + record.filename);
            if (it == m_store.end())
            {
                throw source_unreachable(record.channel + "/" + record.filename);
            }
            return it->second;
        }

    private:
        std::map<std::string, std::string> m_store;
    };

    namespace env_detail
    {
        inline auto normalize_prefix(const std::filesystem::path& p) -> std::filesystem::path
        {
            auto text = std::filesystem::absolute(p).lexically_normal().generic_string();
            while (text.size() > 1 && text.back() == '/')
            {
                text.pop_back();
            }
            return { text };
        }

        inline auto meta_dir(const std::filesystem::path& prefix) -> std::filesystem::path
        {
            return prefix / "meta";
        }

        inline auto record_doc_name(const package_record& record) -> std::string
        {
            return record.name + "-" + record.version + "-" + record.build + ".json";
        }

        inline auto read_file(const std::filesystem::path& path) -> std::optional<std::string>
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                return std::nullopt;
            }
            return std::string(
                (std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>()
            );
        }

        inline auto write_file(const std::filesystem::path& path, const std::string& bytes)
            -> void
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out)
            {
                throw error("cannot write '" + path.string() + "'", error_class::io);
            }
        }

        inline auto render_history_entry(const history_entry& entry) -> std::string
        {
            std::string specs;
            if (entry.specs.empty())
            {
                specs = "-";
            }
            else
            {
                for (std::size_t i = 0; i < entry.specs.size(); ++i)
                {
                    if (i != 0)
                    {
                        specs += " ";
                    }
                    specs += entry.specs[i];
                }
            }
            return entry.timestamp + "\t" + entry.op + "\t" + specs + "\tunlink="
                   + std::to_string(entry.unlinked) + "\tlink=" + std::to_string(entry.linked)
                   + "\n";
        }

        inline auto parse_history_line(const std::string& line) -> history_entry
        {
            std::vector<std::string> parts;
            std::string current;
            for (char c : line)
            {
                if (c == '\t')
                {
                    parts.push_back(current);
                    current.clear();
                }
                else
                {
                    current.push_back(c);
                }
            }
            parts.push_back(current);
            if (parts.size() != 5 || parts[3].rfind("unlink=", 0) != 0
                || parts[4].rfind("link=", 0) != 0)
            {
                throw corrupt_environment("bad history line: '" + line + "'");
            }
            history_entry entry;
            entry.timestamp = parts[0];
            entry.op = parts[1];
            if (parts[2] != "-")
            {
                std::string spec;
                for (char c : parts[2])
                {
                    if (c == ' ')
                    {
                        entry.specs.push_back(spec);
                        spec.clear();
                    }
                    else
                    {
                        spec.push_back(c);
                    }
                }
                entry.specs.push_back(spec);
            }
            try
            {
                entry.unlinked = std::stoull(parts[3].substr(7));
                entry.linked = std::stoull(parts[4].substr(5));
            }
            catch (const std::exception&)
            {
                throw corrupt_environment("bad history line: '" + line + "'");
            }
            return entry;
        }

        inline auto render_env_json(
            const platform_profile& profile,
            const std::vector<std::string>& channels
        ) -> std::string
        {
            nlohmann::ordered_json doc;
            doc["platform"] = platform_name(profile.plat);
            doc["channels"] = channels;
            if (profile.glibc_version)
            {
                doc["glibc_version"] = *profile.glibc_version;
            }
            if (profile.osx_version)
            {
                doc["osx_version"] = *profile.osx_version;
            }
            return doc.dump(2) + "\n";
        }

        enum class undo_kind
        {
            restore_moved,
            remove_created_file,
            remove_created_dir,
            truncate_file,
        };

        struct undo_op
        {
            undo_kind kind;
            std::filesystem::path from;
            std::filesystem::path to;
            std::uintmax_t size = 0;
        };

        inline auto run_step(const apply_hooks* hooks, const std::string& label) -> void
        {
            if (hooks != nullptr && hooks->on_step)
            {
                hooks->on_step(label);
            }
        }

        inline auto ensure_dirs(const std::filesystem::path& dir, std::vector<undo_op>& journal)
            -> void
        {
            if (std::filesystem::exists(dir))
            {
                return;
            }
            ensure_dirs(dir.parent_path(), journal);
            std::filesystem::create_directory(dir);
            journal.push_back({ undo_kind::remove_created_dir, {}, dir, 0 });
        }

        inline auto move_to_trash(
            const std::filesystem::path& original,
            const std::filesystem::path& trash,
            std::size_t& counter,
            std::vector<undo_op>& journal
        ) -> void
        {
            auto slot = trash / ("f" + std::to_string(counter));
            ++counter;
            std::filesystem::rename(original, slot);
            journal.push_back({ undo_kind::restore_moved, slot, original, 0 });
        }

        inline auto write_created(
            const std::filesystem::path& path,
            const std::string& bytes,
            std::vector<undo_op>& journal
        ) -> void
        {
            write_file(path, bytes);
            journal.push_back({ undo_kind::remove_created_file, {}, path, 0 });
        }

        inline auto rollback(const std::vector<undo_op>& journal) -> void
        {
            for (auto it = journal.rbegin(); it != journal.rend(); ++it)
            {
                switch (it->kind)
                {
                    case undo_kind::restore_moved:
                        std::filesystem::rename(it->from, it->to);
                        break;
                    case undo_kind::remove_created_file:
                        std::filesystem::remove(it->to);
                        break;
                    case undo_kind::remove_created_dir:
                        std::filesystem::remove(it->to);
                        break;
                    case undo_kind::truncate_file:
                        std::filesystem::resize_file(it->to, it->size);
                        break;
                }
            }
        }

        // Dependencies before dependents, alphabetical tie-break on name.
        inline auto topological_order(const std::vector<package_record>& records)
            -> std::vector<package_record>
        {
            std::map<std::string, std::size_t> index_of;
            for (std::size_t i = 0; i < records.size(); ++i)
            {
                index_of[records[i].name] = i;
            }
            std::vector<std::vector<std::size_t>> out_edges(records.size());
            std::vector<std::size_t> indegree(records.size(), 0);
            for (std::size_t i = 0; i < records.size(); ++i)
            {
                std::set<std::size_t> needed;
                for (const auto& dep : records[i].depends)
                {
                    auto spec = parse_matchspec(dep);
                    if (spec.name == records[i].name)
                    {
                        continue;
                    }
                    auto it = index_of.find(spec.name);
                    if (it != index_of.end() && spec_matches(spec, records[it->second]))
                    {
                        needed.insert(it->second);
                    }
                }
                for (auto dep_index : needed)
                {
                    out_edges[dep_index].push_back(i);
                    ++indegree[i];
                }
            }
            std::set<std::string> ready;
            for (std::size_t i = 0; i < records.size(); ++i)
            {
                if (indegree[i] == 0)
                {
                    ready.insert(records[i].name);
                }
            }
            std::vector<package_record> ordered;
            ordered.reserve(records.size());
            while (!ready.empty())
            {
                auto name = *ready.begin();
                ready.erase(ready.begin());
                auto i = index_of[name];
                ordered.push_back(records[i]);
                for (auto next : out_edges[i])
                {
                    if (--indegree[next] == 0)
                    {
                        ready.insert(records[next].name);
                    }
                }
            }
            if (ordered.size() != records.size())
            {
                std::vector<std::string> stuck;
                for (std::size_t i = 0; i < records.size(); ++i)
                {
                    if (indegree[i] != 0)
                    {
                        stuck.push_back(records[i].name);
                    }
                }
                std::sort(stuck.begin(), stuck.end());
                std::string joined;
                for (const auto& name : stuck)
                {
                    if (!joined.empty())
                    {
                        joined += ", ";
                    }
                    joined += name;
                }
                throw cycle_in_dependency_graph("cannot order records: " + joined);
            }
            return ordered;
        }
    }

    inline auto is_environment(const std::filesystem::path& prefix) -> bool
    {
        return std::filesystem::is_regular_file(
            env_detail::meta_dir(env_detail::normalize_prefix(prefix)) / "env.json"
        );
    }

    namespace env_detail
    {
        inline auto load_environment_unlocked(const std::filesystem::path& prefix_in)
            -> environment_state
        {
            auto prefix = normalize_prefix(prefix_in);
            auto meta = meta_dir(prefix);
            auto env_text = read_file(meta / "env.json");
            if (!env_text)
            {
                throw unknown_environment(prefix.string());
            }

            environment_state state;
            state.prefix = prefix;
            try
            {
                auto doc = nlohmann::json::parse(*env_text);
                state.profile.plat = parse_platform(doc.at("platform").get<std::string>());
                doc.at("channels").get_to(state.channels);
                if (doc.contains("glibc_version"))
                {
                    state.profile.glibc_version = doc["glibc_version"].get<std::string>();
                }
                if (doc.contains("osx_version"))
                {
                    state.profile.osx_version = doc["osx_version"].get<std::string>();
                }
            }
            catch (const nlohmann::json::exception& e)
            {
                throw corrupt_environment("bad env.json: " + std::string(e.what()));
            }

            if (auto pins_text = read_file(meta / "pins.json"))
            {
                try
                {
                    auto doc = nlohmann::json::parse(*pins_text);
                    for (const auto& item : doc)
                    {
                        state.pins.push_back(parse_matchspec(item.get<std::string>()));
                    }
                }
                catch (const nlohmann::json::exception& e)
                {
                    throw corrupt_environment("bad pins.json: " + std::string(e.what()));
                }
            }

            if (auto history_text = read_file(meta / "history"))
            {
                std::string line;
                for (char c : *history_text)
                {
                    if (c == '\n')
                    {
                        if (!line.empty())
                        {
                            state.history.push_back(parse_history_line(line));
                        }
                        line.clear();
                    }
                    else
                    {
                        line.push_back(c);
                    }
                }
            }

            for (const auto& entry : std::filesystem::directory_iterator(meta))
            {
                if (!entry.is_regular_file())
                {
                    continue;
                }
                auto fn = entry.path().filename().string();
                if (fn == "env.json" || fn == "pins.json" || entry.path().extension() != ".json")
                {
                    continue;
                }
                auto text = read_file(entry.path());
                if (!text)
                {
                    throw corrupt_environment("unreadable metadata '" + fn + "'");
                }
                try
                {
                    auto doc = nlohmann::json::parse(*text);
                    auto record = record_from_index_entry(
                        expected_filename(
                            doc.at("name").get<std::string>(),
                            doc.at("version").get<std::string>(),
                            doc.at("build").get<std::string>()
                        ),
                        doc,
                        doc.at("channel").get<std::string>(),
                        parse_platform(doc.at("subdir").get<std::string>())
                    );
                    state.installed.push_back(std::move(record));
                }
                catch (const nlohmann::json::exception& e)
                {
                    throw corrupt_environment("bad metadata '" + fn + "': " + e.what());
                }
                catch (const malformed_index& e)
                {
                    throw corrupt_environment("bad metadata '" + fn + "': " + e.what());
                }
            }
            std::sort(
                state.installed.begin(),
                state.installed.end(),
                [](const package_record& a, const package_record& b) { return a.name < b.name; }
            );
            return state;
        }

        inline auto installed_files(
            const std::filesystem::path& prefix,
            const package_record& record
        ) -> std::vector<std::string>
        {
            auto doc_path = meta_dir(prefix) / record_doc_name(record);
            auto text = read_file(doc_path);
            if (!text)
            {
                throw corrupt_environment("missing metadata for '" + record.filename + "'");
            }
            std::vector<std::string> files;
            try
            {
                auto doc = nlohmann::json::parse(*text);
                doc.at("files").get_to(files);
            }
            catch (const nlohmann::json::exception& e)
            {
                throw corrupt_environment(
                    "bad metadata for '" + record.filename + "': " + e.what()
                );
            }
            std::sort(files.begin(), files.end());
            return files;
        }
    }

    inline auto load_environment(const std::filesystem::path& prefix) -> environment_state
    {
        auto normalized = env_detail::normalize_prefix(prefix);
        if (!is_environment(normalized))
        {
            throw unknown_environment(normalized.string());
        }
        file_lock lock(env_detail::meta_dir(normalized) / ".lock", file_lock::mode::shared);
        return env_detail::load_environment_unlocked(normalized);
    }

    inline auto init_environment(
        const std::filesystem::path& prefix_in,
        const platform_profile& profile,
        const std::vector<std::string>& channels,
        const std::vector<match_spec>& pins = {}
    ) -> void
    {
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
        std::filesystem::create_directories(env_detail::meta_dir(prefix));
        env_detail::write_file(
            env_detail::meta_dir(prefix) / "env.json",
            env_detail::render_env_json(profile, channels)
        );
        nlohmann::ordered_json pins_doc = nlohmann::ordered_json::array();
        for (const auto& pin : pins)
        {
            pins_doc.push_back(render(pin));
        }
        env_detail::write_file(
            env_detail::meta_dir(prefix) / "pins.json",
            pins_doc.dump(2) + "\n"
        );
        env_detail::write_file(env_detail::meta_dir(prefix) / "history", "");
    }

    inline auto save_pins(const std::filesystem::path& prefix_in, const std::vector<match_spec>& pins)
        -> void
    {
        auto prefix = env_detail::normalize_prefix(prefix_in);
        if (!is_environment(prefix))
        {
            throw unknown_environment(prefix.string());
        }
        file_lock lock(env_detail::meta_dir(prefix) / ".lock", file_lock::mode::exclusive);
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& pin : pins)
        {
            doc.push_back(render(pin));
        }
        env_detail::write_file(env_detail::meta_dir(prefix) / "pins.json", doc.dump(2) + "\n");
    }

    inline auto plan_transaction(const environment_state& current, const solution& target)
        -> transaction
    {
        auto key = [](const package_record& r)
        { return r.name + "\t" + r.version + "\t" + r.build; };
        std::set<std::string> current_keys;
        for (const auto& record : current.installed)
        {
            current_keys.insert(key(record));
        }
        std::set<std::string> target_keys;
        for (const auto& record : target.records)
        {
            target_keys.insert(key(record));
        }

        std::vector<package_record> unlink_set;
        for (const auto& record : current.installed)
        {
            if (target_keys.find(key(record)) == target_keys.end())
            {
                unlink_set.push_back(record);
            }
        }
        std::vector<package_record> link_set;
        for (const auto& record : target.records)
        {
            if (current_keys.find(key(record)) == current_keys.end())
            {
                link_set.push_back(record);
            }
        }

        transaction tx;
        tx.link = env_detail::topological_order(link_set);
        tx.unlink = env_detail::topological_order(unlink_set);
        std::reverse(tx.unlink.begin(), tx.unlink.end());
        return tx;
    }

    inline auto apply_transaction(
        const transaction& tx,
        const std::filesystem::path& prefix_in,
        archive_source& archives,
        const transaction_context& ctx,
        const apply_hooks* hooks = nullptr
    ) -> environment_state
    {
        auto prefix = env_detail::normalize_prefix(prefix_in);
        auto meta = env_detail::meta_dir(prefix);
        if (!std::filesystem::is_directory(meta))
        {
            throw unknown_environment(prefix.string());
        }
        file_lock lock(meta / ".lock", file_lock::mode::exclusive);

        // Stage everything fallible before the first mutation: archive bytes,
        // digests, and relocated payloads.
        struct staged_file
        {
            std::string rel;
            std::string bytes;
        };
        struct staged_link
        {
            const package_record* record = nullptr;
            std::vector<staged_file> files;
            std::string meta_doc;
        };
        std::vector<staged_link> links;
        for (const auto& record : tx.link)
        {
            auto bytes = archives.fetch(record);
            auto digest = sha256_hex(bytes);
            if (digest != record.digest)
            {
                throw digest_mismatch(
                    "archive for '" + record.filename + "': expected " + record.digest
                    + ", got " + digest
                );
            }
            auto archive = read_archive(bytes);
            staged_link staged;
            staged.record = &record;
            std::vector<std::string> rels;
            for (const auto& entry : archive.paths)
            {
                const auto& payload = archive.payload.at(entry.path);
                staged.files.push_back(
                    { entry.path, relocate_entry(entry, payload, prefix.generic_string()) }
                );
                rels.push_back(entry.path);
            }
            std::sort(rels.begin(), rels.end());
            auto doc = record_to_index_entry(record);
            doc["channel"] = record.channel;
            doc["subdir"] = std::string(platform_name(record.plat));
            doc["files"] = rels;
            staged.meta_doc = doc.dump(2) + "\n";
            links.push_back(std::move(staged));
        }

        struct staged_unlink
        {
            const package_record* record = nullptr;
            std::vector<std::string> files;
        };
        std::vector<staged_unlink> unlinks;
        for (const auto& record : tx.unlink)
        {
            staged_unlink staged;
            staged.record = &record;
            staged.files = env_detail::installed_files(prefix, record);
            for (const auto& rel : staged.files)
            {
                if (!std::filesystem::is_regular_file(prefix / rel))
                {
                    throw corrupt_environment(
                        "installed file missing: '" + rel + "' of '" + record.filename + "'"
                    );
                }
            }
            unlinks.push_back(std::move(staged));
        }

        auto trash = prefix / ".minipkg-trash";
        if (std::filesystem::exists(trash))
        {
            throw corrupt_environment("stale transaction journal at '" + trash.string() + "'");
        }

        std::vector<env_detail::undo_op> journal;
        std::size_t trash_counter = 0;
        auto mutate = [&]()
        {
            std::filesystem::create_directory(trash);
            for (const auto& staged : unlinks)
            {
                for (const auto& rel : staged.files)
                {
                    env_detail::run_step(hooks, "unlink-file:" + rel);
                    env_detail::move_to_trash(prefix / rel, trash, trash_counter, journal);
                }
                env_detail::run_step(hooks, "unlink-meta:" + staged.record->filename);
                env_detail::move_to_trash(
                    meta / env_detail::record_doc_name(*staged.record),
                    trash,
                    trash_counter,
                    journal
                );
            }
            env_detail::run_step(hooks, "between-phases");
            for (const auto& staged : links)
            {
                for (const auto& file : staged.files)
                {
                    env_detail::run_step(hooks, "link-file:" + file.rel);
                    auto target = prefix / file.rel;
                    env_detail::ensure_dirs(target.parent_path(), journal);
                    if (std::filesystem::exists(target))
                    {
                        env_detail::move_to_trash(target, trash, trash_counter, journal);
                    }
                    env_detail::write_created(target, file.bytes, journal);
                }
                env_detail::run_step(hooks, "link-meta:" + staged.record->filename);
                auto doc_path = meta / env_detail::record_doc_name(*staged.record);
                if (std::filesystem::exists(doc_path))
                {
                    env_detail::move_to_trash(doc_path, trash, trash_counter, journal);
                }
                env_detail::write_created(doc_path, staged.meta_doc, journal);
            }
            if (ctx.set_channels)
            {
                env_detail::run_step(hooks, "channels");
                auto env_path = meta / "env.json";
                auto state = env_detail::load_environment_unlocked(prefix);
                env_detail::move_to_trash(env_path, trash, trash_counter, journal);
                env_detail::write_created(
                    env_path,
                    env_detail::render_env_json(state.profile, *ctx.set_channels),
                    journal
                );
            }
            env_detail::run_step(hooks, "history");
            auto history_path = meta / "history";
            history_entry entry{ ctx.timestamp, ctx.op, ctx.specs, tx.unlink.size(),
                                 tx.link.size() };
            if (std::filesystem::exists(history_path))
            {
                journal.push_back(
                    { env_detail::undo_kind::truncate_file,
                      {},
                      history_path,
                      std::filesystem::file_size(history_path) }
                );
                std::ofstream out(history_path, std::ios::binary | std::ios::app);
                auto line = env_detail::render_history_entry(entry);
                out.write(line.data(), static_cast<std::streamsize>(line.size()));
                if (!out)
                {
                    throw error("cannot write '" + history_path.string() + "'", error_class::io);
                }
            }
            else
            {
                env_detail::write_created(
                    history_path,
                    env_detail::render_history_entry(entry),
                    journal
                );
            }
            env_detail::run_step(hooks, "finalize");
        };

        try
        {
            mutate();
        }
        catch (...)
        {
            try
            {
                env_detail::rollback(journal);
                std::filesystem::remove_all(trash);
            }
            catch (const std::exception& e)
            {
                throw corrupt_environment("rollback failed: " + std::string(e.what()));
            }
            throw;
        }
        std::filesystem::remove_all(trash);
        lock.release();
        return env_detail::load_environment_unlocked(prefix);
    }

    enum class export_mode
    {
        full,
        no_builds,
    };

    inline auto export_environment(const environment_state& state, export_mode mode)
        -> env_document
    {
        env_document doc;
        doc.name = state.prefix.filename().string();
        doc.channels = state.channels;
        for (const auto& record : state.installed)
        {
            if (mode == export_mode::full)
            {
                doc.dependencies.push_back(
                    record.name + "=" + record.version + "=" + record.build
                );
            }
            else
            {
                doc.dependencies.push_back(record.name + "=" + record.version);
            }
        }
        return doc;
    }

    // Latest create/install spec per name wins; remove erases the name. The
    // resulting order is the first-request order of each surviving name.
    inline auto fold_requested(const std::vector<history_entry>& history)
        -> std::vector<match_spec>
    {
        std::vector<std::string> order;
        std::map<std::string, std::string> by_name;
        for (const auto& entry : history)
        {
            for (const auto& text : entry.specs)
            {
                auto name = parse_matchspec(text).name;
                if (entry.op == "remove")
                {
                    by_name.erase(name);
                }
                else
                {
                    if (by_name.find(name) == by_name.end()
                        && std::find(order.begin(), order.end(), name) == order.end())
                    {
                        order.push_back(name);
                    }
                    by_name[name] = text;
                }
            }
        }
        std::vector<match_spec> specs;
        for (const auto& name : order)
        {
            auto it = by_name.find(name);
            if (it != by_name.end())
            {
                specs.push_back(parse_matchspec(it->second));
            }
        }
        return specs;
    }

    struct environment_request
    {
        std::vector<match_spec> specs;
        merged_index index;
        std::vector<virtual_package> virtuals;
        platform_profile profile;
        std::string timestamp;
    };

    struct transaction_result
    {
        environment_state state;
        transaction tx;
    };

    inline auto create_environment(
        const std::filesystem::path& prefix_in,
        const environment_request& req,
        archive_source& archives,
        bool dry_run = false,
        const apply_hooks* hooks = nullptr
    ) -> transaction_result
    {
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

        solve_request request;
        request.specs = req.specs;
        request.index = req.index;
        request.virtuals = req.virtuals;
        auto result = solve(request);
        if (!result.sat)
        {
            throw unsatisfiable(render_explanation(*result.unsat));
        }

        environment_state empty_state;
        empty_state.prefix = prefix;
        empty_state.profile = req.profile;
        empty_state.channels = req.index.channel_order;
        auto tx = plan_transaction(empty_state, *result.sat);

        std::vector<std::string> rendered;
        rendered.reserve(req.specs.size());
        for (const auto& spec : req.specs)
        {
            rendered.push_back(render(spec));
        }

        if (dry_run)
        {
            return { std::move(empty_state), std::move(tx) };
        }

        bool created_prefix = !std::filesystem::exists(prefix);
        init_environment(prefix, req.profile, req.index.channel_order);
        transaction_context ctx{ req.timestamp, "create", rendered, std::nullopt };
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

    inline auto install_into(
        const std::filesystem::path& prefix_in,
        const environment_request& req,
        archive_source& archives,
        bool dry_run = false,
        const apply_hooks* hooks = nullptr
    ) -> transaction_result
    {
        auto prefix = env_detail::normalize_prefix(prefix_in);
        auto state = load_environment(prefix);

        auto specs = fold_requested(state.history);
        for (const auto& spec : req.specs)
        {
            auto it = std::find_if(
                specs.begin(),
                specs.end(),
                [&](const match_spec& s) { return s.name == spec.name; }
            );
            if (it != specs.end())
            {
                *it = spec;
            }
            else
            {
                specs.push_back(spec);
            }
        }

        solve_request request;
        request.specs = specs;
        request.index = req.index;
        request.virtuals = req.virtuals;
        request.pins = state.pins;
        request.locked = state.installed;
        auto result = solve(request);
        if (!result.sat)
        {
            throw unsatisfiable(render_explanation(*result.unsat));
        }

        auto tx = plan_transaction(state, *result.sat);
        std::vector<std::string> rendered;
        rendered.reserve(req.specs.size());
        for (const auto& spec : req.specs)
        {
            rendered.push_back(render(spec));
        }
        if (dry_run)
        {
            return { std::move(state), std::move(tx) };
        }
        transaction_context ctx{ req.timestamp, "install", rendered, std::nullopt };
        if (!req.index.channel_order.empty() && req.index.channel_order != state.channels)
        {
            ctx.set_channels = req.index.channel_order;
        }
        auto next = apply_transaction(tx, prefix, archives, ctx, hooks);
        return { std::move(next), std::move(tx) };
    }

    inline auto remove_from(
        const std::filesystem::path& prefix_in,
        const std::vector<match_spec>& removal_specs,
        const std::string& timestamp,
        bool dry_run = false,
        const apply_hooks* hooks = nullptr
    ) -> transaction_result
    {
        auto prefix = env_detail::normalize_prefix(prefix_in);
        auto state = load_environment(prefix);

        // Removal set: records matched by the specs plus transitive dependents.
        std::set<std::string> removed_names;
        for (const auto& spec : removal_specs)
        {
            bool any = false;
            for (const auto& record : state.installed)
            {
                if (spec_matches(spec, record))
                {
                    removed_names.insert(record.name);
                    any = true;
                }
            }
            if (!any)
            {
                throw spec_has_no_candidates(
                    "'" + render(spec) + "' matches no installed package"
                );
            }
        }
        bool grew = true;
        while (grew)
        {
            grew = false;
            for (const auto& record : state.installed)
            {
                if (removed_names.count(record.name) != 0)
                {
                    continue;
                }
                for (const auto& dep : record.depends)
                {
                    auto spec = parse_matchspec(dep);
                    if (removed_names.count(spec.name) == 0)
                    {
                        continue;
                    }
                    auto it = std::find_if(
                        state.installed.begin(),
                        state.installed.end(),
                        [&](const package_record& r) { return r.name == spec.name; }
                    );
                    if (it != state.installed.end() && spec_matches(spec, *it))
                    {
                        removed_names.insert(record.name);
                        grew = true;
                        break;
                    }
                }
            }
        }

        for (const auto& pin : state.pins)
        {
            for (const auto& record : state.installed)
            {
                if (removed_names.count(record.name) != 0 && spec_matches(pin, record))
                {
                    throw pinned_package(
                        "cannot remove '" + record.filename + "' pinned by '" + render(pin)
                        + "'"
                    );
                }
            }
        }

        auto folded = fold_requested(state.history);
        std::vector<match_spec> remaining;
        for (const auto& spec : folded)
        {
            if (removed_names.count(spec.name) == 0)
            {
                remaining.push_back(spec);
            }
        }

        // Keep set: closure of the remaining request over the surviving records;
        // everything else is an orphaned dependency and is dropped.
        std::map<std::string, const package_record*> survivors;
        for (const auto& record : state.installed)
        {
            if (removed_names.count(record.name) == 0)
            {
                survivors[record.name] = &record;
            }
        }
        std::set<std::string> keep;
        std::vector<const package_record*> frontier;
        auto virtuals = detect_virtual_packages(state.profile);
        for (const auto& spec : remaining)
        {
            auto it = survivors.find(spec.name);
            if (it != survivors.end() && spec_matches(spec, *it->second)
                && keep.insert(spec.name).second)
            {
                frontier.push_back(it->second);
            }
        }
        while (!frontier.empty())
        {
            const auto* record = frontier.back();
            frontier.pop_back();
            for (const auto& dep : record->depends)
            {
                auto spec = parse_matchspec(dep);
                auto it = survivors.find(spec.name);
                if (it != survivors.end() && spec_matches(spec, *it->second)
                    && keep.insert(spec.name).second)
                {
                    frontier.push_back(it->second);
                }
            }
        }

        solve_request request;
        request.specs = remaining;
        request.index.plat = state.profile.plat;
        request.virtuals = virtuals;
        request.pins = state.pins;
        for (const auto& name : keep)
        {
            request.locked.push_back(*survivors[name]);
        }
        request.excluded_names.assign(removed_names.begin(), removed_names.end());
        auto result = solve(request);
        if (!result.sat)
        {
            throw unsatisfiable(render_explanation(*result.unsat));
        }

        auto tx = plan_transaction(state, *result.sat);

        // The history entry lists every requested name that leaves the
        // environment so later folds do not resurrect removed dependents.
        std::set<std::string> entry_specs;
        for (const auto& spec : removal_specs)
        {
            entry_specs.insert(render(spec));
        }
        for (const auto& spec : folded)
        {
            if (removed_names.count(spec.name) != 0)
            {
                bool named_directly = std::any_of(
                    removal_specs.begin(),
                    removal_specs.end(),
                    [&](const match_spec& s) { return s.name == spec.name; }
                );
                if (!named_directly)
                {
                    entry_specs.insert(spec.name);
                }
            }
        }

        if (dry_run)
        {
            return { std::move(state), std::move(tx) };
        }
        transaction_context ctx{
            timestamp,
            "remove",
            std::vector<std::string>(entry_specs.begin(), entry_specs.end()),
            std::nullopt
        };
        memory_archive_source no_archives;
        auto next = apply_transaction(tx, prefix, no_archives, ctx, hooks);
        return { std::move(next), std::move(tx) };
    }
}

#endif
