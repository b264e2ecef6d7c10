// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <minipkg/channel.hpp>
#include <minipkg/digest.hpp>
#include <minipkg/env_document.hpp>
#include <minipkg/environment.hpp>
#include <minipkg/errors.hpp>
#include <minipkg/lock.hpp>
#include <minipkg/match_spec.hpp>
#include <minipkg/vinca.hpp>

namespace
{
    namespace fs = std::filesystem;
    using namespace minipkg;

    // History and lock timestamps honor SOURCE_DATE_EPOCH for reproducible runs.
    auto utc_timestamp() -> std::string
    {
        std::time_t now = 0;
        const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
        if (epoch != nullptr && *epoch != '\0')
        {
            now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
        }
        else
        {
            now = std::time(nullptr);
        }
        std::tm parts{};
        gmtime_r(&now, &parts);
        char buffer[32];
        std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
        return buffer;
    }

    auto host_platform_name() -> std::string
    {
#if defined(_WIN32)
        return "win-64";
#elif defined(__APPLE__)
        return "osx-64";
#elif defined(__aarch64__)
        return "linux-aarch64";
#else
        return "linux-64";
#endif
    }

    auto root_dir() -> std::optional<fs::path>
    {
        const char* root = std::getenv("MINIPKG_ROOT");
        if (root == nullptr || *root == '\0')
        {
            return std::nullopt;
        }
        return fs::path(root);
    }

    struct channel_ref
    {
        std::string name;
        std::string locator;
    };

    // `-c name=locator` binds explicitly; a bare name resolves under
    // `$MINIPKG_ROOT/channels/<name>`.
    auto resolve_channel(const std::string& arg) -> channel_ref
    {
        auto eq = arg.find('=');
        if (eq != std::string::npos)
        {
            auto name = arg.substr(0, eq);
            auto locator = arg.substr(eq + 1);
            if (name.empty() || locator.empty())
            {
                throw error(
                    "channel argument '" + arg + "' must be <name> or <name>=<locator>",
                    error_class::user
                );
            }
            return { name, locator };
        }
        auto root = root_dir();
        if (!root)
        {
            throw error(
                "channel '" + arg + "' has no locator and MINIPKG_ROOT is not set",
                error_class::user
            );
        }
        return { arg, (*root / "channels" / arg).string() };
    }

    auto resolve_channels(const std::vector<std::string>& args) -> std::vector<channel_ref>
    {
        std::vector<channel_ref> out;
        out.reserve(args.size());
        for (const auto& arg : args)
        {
            out.push_back(resolve_channel(arg));
        }
        return out;
    }

    auto locator_map(const std::vector<channel_ref>& channels)
        -> std::map<std::string, std::string>
    {
        std::map<std::string, std::string> out;
        for (const auto& ref : channels)
        {
            out.emplace(ref.name, ref.locator);
        }
        return out;
    }

    auto merged_for(const std::vector<channel_ref>& channels, platform plat) -> merged_index
    {
        std::vector<channel_index> indexes;
        for (const auto& ref : channels)
        {
            auto loaded = load_channel(ref.locator, ref.name, plat);
            indexes.insert(
                indexes.end(),
                std::make_move_iterator(loaded.begin()),
                std::make_move_iterator(loaded.end())
            );
        }
        return merge_channels(indexes);
    }

    auto target_prefix(const std::string& name, const std::string& prefix) -> fs::path
    {
        if (!prefix.empty())
        {
            return fs::path(prefix);
        }
        if (!name.empty())
        {
            auto root = root_dir();
            if (!root)
            {
                throw error(
                    "-n requires MINIPKG_ROOT to locate the environments directory",
                    error_class::user
                );
            }
            return *root / "envs" / name;
        }
        throw error("an environment must be selected with -n or -p", error_class::user);
    }

    auto parse_specs(const std::vector<std::string>& args) -> std::vector<match_spec>
    {
        std::vector<match_spec> out;
        out.reserve(args.size());
        for (const auto& arg : args)
        {
            out.push_back(parse_matchspec(arg));
        }
        return out;
    }

    auto profile_for(const std::string& plat_name, const std::string& glibc, const std::string& osx)
        -> platform_profile
    {
        platform_profile profile;
        profile.plat = parse_platform(plat_name);
        if (!glibc.empty() && is_linux(profile.plat))
        {
            profile.glibc_version = glibc;
        }
        if (!osx.empty() && is_osx(profile.plat))
        {
            profile.osx_version = osx;
        }
        return profile;
    }

    auto read_text_file(const fs::path& path) -> std::string
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw source_unreachable(path.string());
        }
        return std::string(
            (std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>()
        );
    }

    auto pin_of(const package_record& record) -> std::string
    {
        return record.name + "=" + record.version + "=" + record.build;
    }

    auto sorted_by_name(std::vector<package_record> records) -> std::vector<package_record>
    {
        std::sort(
            records.begin(),
            records.end(),
            [](const package_record& a, const package_record& b) { return a.name < b.name; }
        );
        return records;
    }

    auto record_json(const package_record& record) -> nlohmann::ordered_json
    {
        auto doc = record_to_index_entry(record);
        doc["channel"] = record.channel;
        doc["subdir"] = std::string(platform_name(record.plat));
        return doc;
    }

    auto transaction_json(const transaction& tx) -> nlohmann::ordered_json
    {
        nlohmann::ordered_json doc;
        doc["unlink"] = nlohmann::ordered_json::array();
        doc["link"] = nlohmann::ordered_json::array();
        for (const auto& record : sorted_by_name(tx.unlink))
        {
            doc["unlink"].push_back(record_json(record));
        }
        for (const auto& record : sorted_by_name(tx.link))
        {
            doc["link"].push_back(record_json(record));
        }
        return doc;
    }

    auto emit_transaction(const transaction& tx, bool json_out) -> void
    {
        if (json_out)
        {
            std::cout << transaction_json(tx).dump(2) << "\n";
            return;
        }
        for (const auto& record : sorted_by_name(tx.unlink))
        {
            std::cout << "unlink " << pin_of(record) << "\n";
        }
        for (const auto& record : sorted_by_name(tx.link))
        {
            std::cout << "link " << pin_of(record) << "\n";
        }
    }

    auto lockfile_json(const lockfile_document& doc) -> nlohmann::ordered_json
    {
        nlohmann::ordered_json out;
        out["spec_digest"] = doc.spec_digest;
        out["created"] = doc.created;
        out["sections"] = nlohmann::ordered_json::object();
        for (const auto& [plat_name, section] : doc.sections)
        {
            nlohmann::ordered_json sec;
            sec["index_digest"] = section.index_digest;
            sec["entries"] = nlohmann::ordered_json::array();
            auto entries = section.entries;
            std::sort(
                entries.begin(),
                entries.end(),
                [](const lock_entry& a, const lock_entry& b) { return a.name < b.name; }
            );
            for (const auto& entry : entries)
            {
                nlohmann::ordered_json item;
                item["name"] = entry.name;
                item["version"] = entry.version;
                item["build"] = entry.build;
                item["channel"] = entry.channel;
                item["digest"] = entry.digest;
                sec["entries"].push_back(std::move(item));
            }
            out["sections"][plat_name] = std::move(sec);
        }
        return out;
    }

    auto snapshot_from_dir(const fs::path& dir) -> std::vector<ros_manifest>
    {
        if (!fs::is_directory(dir))
        {
            throw source_unreachable(dir.string());
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
        {
            if (entry.is_regular_file() && entry.path().extension() == ".xml")
            {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        std::vector<ros_manifest> snapshot;
        snapshot.reserve(files.size());
        for (const auto& file : files)
        {
            snapshot.push_back(parse_package_xml(read_text_file(file)));
        }
        return snapshot;
    }

    auto exit_code_for(error_class cls) -> int
    {
        switch (cls)
        {
            case error_class::user:
                return 1;
            case error_class::unsat:
                return 2;
            case error_class::io:
                return 3;
        }
        return 3;
    }
}

auto main(int argc, char** argv) -> int
{
    CLI::App app{ "minipkg: a miniature package manager for robotics stacks" };
    app.require_subcommand(1);

    std::string name;
    std::string prefix;
    std::vector<std::string> spec_args;
    std::vector<std::string> channel_args;
    std::string plat_name = host_platform_name();
    std::string glibc;
    std::string osx;
    bool dry_run = false;
    bool json_out = false;
    bool no_builds = false;
    std::string file_arg;
    std::vector<std::string> plat_overrides;
    std::string distro;
    std::string mapping_path;
    std::string snapshot_dir;

    auto add_env_ref = [&](CLI::App* cmd)
    {
        cmd->add_option("-n,--name", name, "environment name under $MINIPKG_ROOT/envs");
        cmd->add_option("-p,--prefix", prefix, "environment prefix path");
    };

    auto* cmd_create = app.add_subcommand("create", "solve specs and create an environment");
    add_env_ref(cmd_create);
    cmd_create->add_option("specs", spec_args, "match specs to install");
    cmd_create->add_option("-c,--channel", channel_args, "channel, highest priority first")
        ->allow_extra_args(false);
    cmd_create->add_option("--platform", plat_name, "target platform");
    cmd_create->add_option("--glibc", glibc, "glibc version provided by the host");
    cmd_create->add_option("--osx", osx, "macOS version provided by the host");
    cmd_create->add_flag("--dry-run", dry_run, "plan only, touch nothing");
    cmd_create->add_flag("--json", json_out, "machine-readable transaction");
    cmd_create->callback(
        [&]
        {
            auto target = target_prefix(name, prefix);
            auto channels = resolve_channels(channel_args);
            environment_request req;
            req.profile = profile_for(plat_name, glibc, osx);
            req.specs = parse_specs(spec_args);
            req.index = merged_for(channels, req.profile.plat);
            req.virtuals = detect_virtual_packages(req.profile);
            req.timestamp = utc_timestamp();
            channel_archive_source archives(locator_map(channels));
            auto result = create_environment(target, req, archives, dry_run);
            emit_transaction(result.tx, json_out);
        }
    );

    auto* cmd_install = app.add_subcommand("install", "solve and install specs into an environment");
    add_env_ref(cmd_install);
    cmd_install->add_option("specs", spec_args, "match specs to install");
    cmd_install->add_option("-c,--channel", channel_args, "override the stored channel list")
        ->allow_extra_args(false);
    cmd_install->add_flag("--dry-run", dry_run, "plan only, touch nothing");
    cmd_install->add_flag("--json", json_out, "machine-readable transaction");
    cmd_install->callback(
        [&]
        {
            auto target = target_prefix(name, prefix);
            auto state = load_environment(target);
            auto args = channel_args.empty() ? state.channels : channel_args;
            auto channels = resolve_channels(args);
            environment_request req;
            req.profile = state.profile;
            req.specs = parse_specs(spec_args);
            req.index = merged_for(channels, state.profile.plat);
            req.virtuals = detect_virtual_packages(state.profile);
            req.timestamp = utc_timestamp();
            channel_archive_source archives(locator_map(channels));
            auto result = install_into(target, req, archives, dry_run);
            emit_transaction(result.tx, json_out);
        }
    );

    auto* cmd_remove = app.add_subcommand("remove", "remove specs and orphaned dependencies");
    add_env_ref(cmd_remove);
    cmd_remove->add_option("specs", spec_args, "match specs to remove")->required();
    cmd_remove->add_flag("--dry-run", dry_run, "plan only, touch nothing");
    cmd_remove->add_flag("--json", json_out, "machine-readable transaction");
    cmd_remove->callback(
        [&]
        {
            auto target = target_prefix(name, prefix);
            auto result = remove_from(target, parse_specs(spec_args), utc_timestamp(), dry_run);
            emit_transaction(result.tx, json_out);
        }
    );

    auto* cmd_export = app.add_subcommand("export", "print the environment document");
    add_env_ref(cmd_export);
    cmd_export->add_flag("--no-builds", no_builds, "pin versions only");
    cmd_export->callback(
        [&]
        {
            auto state = load_environment(target_prefix(name, prefix));
            auto mode = no_builds ? export_mode::no_builds : export_mode::full;
            std::cout << render_env_document(export_environment(state, mode));
        }
    );

    auto* cmd_env_create
        = app.add_subcommand("env-create", "create an environment from a document");
    add_env_ref(cmd_env_create);
    cmd_env_create->add_option("file", file_arg, "environment document")->required();
    cmd_env_create->add_option("-c,--channel", channel_args, "override the document channels")
        ->allow_extra_args(false);
    cmd_env_create->add_option("--platform", plat_name, "target platform");
    cmd_env_create->add_option("--glibc", glibc, "glibc version provided by the host");
    cmd_env_create->add_option("--osx", osx, "macOS version provided by the host");
    cmd_env_create->add_flag("--dry-run", dry_run, "plan only, touch nothing");
    cmd_env_create->add_flag("--json", json_out, "machine-readable transaction");
    cmd_env_create->callback(
        [&]
        {
            auto doc = parse_env_document(read_text_file(file_arg));
            if (name.empty() && prefix.empty())
            {
                name = doc.name;
            }
            auto target = target_prefix(name, prefix);
            auto args = channel_args.empty() ? doc.channels : channel_args;
            auto channels = resolve_channels(args);
            environment_request req;
            req.profile = profile_for(plat_name, glibc, osx);
            req.specs = parse_specs(doc.dependencies);
            req.index = merged_for(channels, req.profile.plat);
            req.virtuals = detect_virtual_packages(req.profile);
            req.timestamp = utc_timestamp();
            channel_archive_source archives(locator_map(channels));
            auto result = create_environment(target, req, archives, dry_run);
            emit_transaction(result.tx, json_out);
        }
    );

    auto* cmd_lock = app.add_subcommand("lock", "pin a spec file for each platform");
    cmd_lock->add_option("file", file_arg, "spec file with a platforms section")->required();
    cmd_lock->add_option("-c,--channel", channel_args, "override the document channels")
        ->allow_extra_args(false);
    cmd_lock->add_option("--platform", plat_overrides, "override the platforms to lock")
        ->allow_extra_args(false);
    cmd_lock->add_option("--glibc", glibc, "glibc version provided by linux hosts");
    cmd_lock->add_option("--osx", osx, "macOS version provided by osx hosts");
    cmd_lock->add_flag("--json", json_out, "machine-readable lockfile");
    cmd_lock->callback(
        [&]
        {
            auto text = read_text_file(file_arg);
            auto doc = parse_env_document(text);
            if (!plat_overrides.empty())
            {
                doc.platforms = plat_overrides;
            }
            if (doc.platforms.empty())
            {
                throw malformed_document("spec file needs a non-empty 'platforms:' section");
            }
            auto args = channel_args.empty() ? doc.channels : channel_args;
            auto channels = resolve_channels(args);
            std::map<std::string, merged_index> indexes;
            std::map<std::string, std::vector<virtual_package>> virtuals;
            for (const auto& plat_text : doc.platforms)
            {
                auto plat = parse_platform(plat_text);
                indexes[plat_text] = merged_for(channels, plat);
                virtuals[plat_text]
                    = detect_virtual_packages(profile_for(plat_text, glibc, osx));
            }
            auto lock = generate_lock(doc, sha256_hex(text), indexes, virtuals, utc_timestamp());
            if (json_out)
            {
                std::cout << lockfile_json(lock).dump(2) << "\n";
            }
            else
            {
                std::cout << render_lockfile(lock);
            }
        }
    );

    auto* cmd_install_lock
        = app.add_subcommand("install-lock", "install a lockfile section verbatim");
    add_env_ref(cmd_install_lock);
    cmd_install_lock->add_option("file", file_arg, "lockfile")->required();
    cmd_install_lock->add_option("-c,--channel", channel_args, "channel locator bindings")
        ->allow_extra_args(false);
    cmd_install_lock->add_option("--platform", plat_name, "lockfile section to install");
    cmd_install_lock->add_flag("--json", json_out, "machine-readable transaction");
    cmd_install_lock->callback(
        [&]
        {
            auto lock = parse_lockfile(read_text_file(file_arg));
            auto target = target_prefix(name, prefix);
            auto plat = parse_platform(plat_name);
            auto locators = locator_map(resolve_channels(channel_args));
            if (auto section = lock.sections.find(plat_name); section != lock.sections.end())
            {
                for (const auto& entry : section->second.entries)
                {
                    if (locators.count(entry.channel) == 0)
                    {
                        locators.emplace(
                            entry.channel,
                            resolve_channel(entry.channel).locator
                        );
                    }
                }
            }
            auto result = install_from_lock(lock, plat, target, locators, utc_timestamp());
            emit_transaction(result.tx, json_out);
        }
    );

    auto* cmd_recipe
        = app.add_subcommand("generate-recipe", "turn a package manifest into a recipe");
    cmd_recipe->add_option("file", file_arg, "package.xml manifest")->required();
    cmd_recipe->add_option("--distro", distro, "ROS distro for name mangling")->required();
    cmd_recipe->add_option("--mapping", mapping_path, "rosdep key mapping file");
    cmd_recipe->add_option("--platform", plat_name, "mapping section to use");
    cmd_recipe->add_option("--snapshot", snapshot_dir, "directory of sibling manifests");
    cmd_recipe->callback(
        [&]
        {
            if (!is_known_distro(distro))
            {
                throw malformed_manifest("unknown distro '" + distro + "'");
            }
            auto manifest = parse_package_xml(read_text_file(file_arg));
            dependency_mapping mapping;
            if (!mapping_path.empty())
            {
                mapping = parse_mapping(read_text_file(mapping_path));
            }
            std::vector<ros_manifest> snapshot;
            if (!snapshot_dir.empty())
            {
                snapshot = snapshot_from_dir(snapshot_dir);
            }
            auto plat = parse_platform(plat_name);
            std::cout << render_recipe(generate_recipe(manifest, distro, mapping, plat, snapshot));
        }
    );

    auto* cmd_build_order
        = app.add_subcommand("build-order", "print a dependency-respecting build order");
    cmd_build_order->add_option("dir", snapshot_dir, "directory of package manifests")
        ->required();
    cmd_build_order->callback(
        [&]
        {
            for (const auto& pkg : build_order(snapshot_from_dir(snapshot_dir)))
            {
                std::cout << pkg << "\n";
            }
        }
    );

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        auto code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    catch (const error& e)
    {
        std::cerr << "minipkg: " << e.what() << "\n";
        return exit_code_for(e.cls());
    }
    catch (const std::exception& e)
    {
        std::cerr << "minipkg: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
