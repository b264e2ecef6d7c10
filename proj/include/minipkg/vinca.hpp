// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#ifndef MINIPKG_VINCA_HPP
#define MINIPKG_VINCA_HPP

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "minipkg/errors.hpp"
#include "minipkg/match_spec.hpp"
#include "minipkg/platform.hpp"

namespace minipkg
{
    struct ros_manifest
    {
        std::string name;
        std::string version;
        std::string description;
        std::string maintainer;
        std::vector<std::string> build_depend;
        std::vector<std::string> build_export_depend;
        std::vector<std::string> exec_depend;
        std::vector<std::string> test_depend;

        auto operator==(const ros_manifest&) const -> bool = default;
    };

    // rosdep key to channel specs, resolved per platform.
    struct dependency_mapping
    {
        std::map<platform, std::map<std::string, std::vector<std::string>>> by_platform;
    };

    struct recipe
    {
        std::string name;
        std::string version;
        std::string build_script = "build.sh";
        std::string source_locator;
        std::string source_digest;
        std::vector<std::string> build;
        std::vector<std::string> host;
        std::vector<std::string> run;

        auto operator==(const recipe&) const -> bool = default;
    };

    inline auto is_known_distro(const std::string& distro) -> bool
    {
        return distro == "melodic" || distro == "noetic" || distro == "foxy"
               || distro == "galactic";
    }

    inline auto mangle_name(const std::string& ros_name, const std::string& distro)
        -> std::string
    {
        std::string mangled = "ros-" + distro + "-";
        for (char c : ros_name)
        {
            if (c == '_')
            {
                mangled.push_back('-');
            }
            else if (c >= 'A' && c <= 'Z')
            {
                mangled.push_back(static_cast<char>(c - 'A' + 'a'));
            }
            else
            {
                mangled.push_back(c);
            }
        }
        return mangled;
    }

    namespace vinca_detail
    {
        inline auto strip(const std::string& text) -> std::string
        {
            auto begin = text.find_first_not_of(" \t\r\n");
            if (begin == std::string::npos)
            {
                return "";
            }
            auto end = text.find_last_not_of(" \t\r\n");
            return text.substr(begin, end - begin + 1);
        }
    }

    inline auto parse_package_xml(const std::string& text) -> ros_manifest
    {
        boost::property_tree::ptree tree;
        try
        {
            std::istringstream stream(text);
            boost::property_tree::read_xml(stream, tree);
        }
        catch (const boost::property_tree::xml_parser_error& e)
        {
            throw malformed_manifest("unparseable markup: " + std::string(e.what()));
        }
        auto package = tree.get_child_optional("package");
        if (!package)
        {
            throw malformed_manifest("missing root element 'package'");
        }

        ros_manifest manifest;
        for (const auto& [tag, node] : *package)
        {
            auto value = vinca_detail::strip(node.get_value<std::string>());
            if (tag == "name")
            {
                manifest.name = value;
            }
            else if (tag == "version")
            {
                manifest.version = value;
            }
            else if (tag == "description")
            {
                manifest.description = value;
            }
            else if (tag == "maintainer")
            {
                manifest.maintainer = value;
            }
            else if (tag == "depend")
            {
                // plain depend contributes to both build and exec
                manifest.build_depend.push_back(value);
                manifest.exec_depend.push_back(value);
            }
            else if (tag == "build_depend")
            {
                manifest.build_depend.push_back(value);
            }
            else if (tag == "build_export_depend")
            {
                manifest.build_export_depend.push_back(value);
            }
            else if (tag == "exec_depend")
            {
                manifest.exec_depend.push_back(value);
            }
            else if (tag == "test_depend")
            {
                manifest.test_depend.push_back(value);
            }
        }
        if (manifest.name.empty())
        {
            throw malformed_manifest("missing name");
        }
        if (manifest.version.empty())
        {
            throw malformed_manifest("missing version");
        }
        for (const auto* list : { &manifest.build_depend,
                                  &manifest.build_export_depend,
                                  &manifest.exec_depend,
                                  &manifest.test_depend })
        {
            for (const auto& key : *list)
            {
                if (key.empty())
                {
                    throw malformed_manifest("empty depend entry in '" + manifest.name + "'");
                }
            }
        }
        return manifest;
    }

    inline auto parse_mapping(const std::string& text) -> dependency_mapping
    {
        dependency_mapping mapping;
        std::map<std::string, std::vector<std::string>>* section = nullptr;
        std::istringstream stream(text);
        std::string raw;
        while (std::getline(stream, raw))
        {
            auto line = vinca_detail::strip(raw);
            if (line.empty() || line[0] == '#')
            {
                continue;
            }
            if (line.front() == '[' && line.back() == ']')
            {
                auto plat = parse_platform(line.substr(1, line.size() - 2));
                section = &mapping.by_platform[plat];
                continue;
            }
            auto colon = line.find(':');
            if (colon == std::string::npos || colon == 0)
            {
                throw malformed_document("bad mapping line: '" + line + "'");
            }
            if (section == nullptr)
            {
                throw malformed_document(
                    "mapping entry outside a platform section: '" + line + "'"
                );
            }
            auto key = vinca_detail::strip(line.substr(0, colon));
            auto value = vinca_detail::strip(line.substr(colon + 1));
            if (value.size() < 2 || value.front() != '[' || value.back() != ']')
            {
                throw malformed_document("bad mapping value for '" + key + "': '" + value + "'");
            }
            std::vector<std::string> specs;
            auto body = vinca_detail::strip(value.substr(1, value.size() - 2));
            if (!body.empty())
            {
                std::size_t start = 0;
                while (start <= body.size())
                {
                    auto sep = body.find(", ", start);
                    auto item = vinca_detail::strip(
                        sep == std::string::npos ? body.substr(start)
                                                 : body.substr(start, sep - start)
                    );
                    if (item.empty())
                    {
                        throw malformed_document("empty mapping item for '" + key + "'");
                    }
                    try
                    {
                        parse_matchspec(item);
                    }
                    catch (const malformed_spec& e)
                    {
                        throw malformed_document(
                            "mapping item for '" + key + "': " + e.what()
                        );
                    }
                    specs.push_back(item);
                    if (sep == std::string::npos)
                    {
                        break;
                    }
                    start = sep + 2;
                }
            }
            (*section)[key] = std::move(specs);
        }
        return mapping;
    }

    inline auto generate_recipe(
        const ros_manifest& manifest,
        const std::string& distro,
        const dependency_mapping& mapping,
        platform plat,
        const std::vector<ros_manifest>& snapshot
    ) -> recipe
    {
        std::set<std::string> snapshot_names;
        for (const auto& sibling : snapshot)
        {
            snapshot_names.insert(sibling.name);
        }
        const std::map<std::string, std::vector<std::string>>* section = nullptr;
        auto it = mapping.by_platform.find(plat);
        if (it != mapping.by_platform.end())
        {
            section = &it->second;
        }

        std::set<std::string> missing;
        auto resolve = [&](const std::vector<std::string>& keys, std::set<std::string>& out)
        {
            for (const auto& key : keys)
            {
                if (snapshot_names.count(key) != 0)
                {
                    out.insert(mangle_name(key, distro));
                    continue;
                }
                if (section != nullptr)
                {
                    auto found = section->find(key);
                    if (found != section->end())
                    {
                        out.insert(found->second.begin(), found->second.end());
                        continue;
                    }
                }
                missing.insert(key);
            }
        };

        std::set<std::string> build;
        std::set<std::string> host;
        std::set<std::string> run;
        resolve(manifest.build_depend, build);
        resolve(manifest.build_depend, host);
        resolve(manifest.build_export_depend, host);
        resolve(manifest.exec_depend, run);
        if (!missing.empty())
        {
            std::string joined;
            for (const auto& key : missing)
            {
                if (!joined.empty())
                {
                    joined += ", ";
                }
                joined += key;
            }
            joined += " (package '" + manifest.name + "')";
            throw unmapped_dependency(joined);
        }

        recipe out;
        out.name = mangle_name(manifest.name, distro);
        out.version = manifest.version;
        out.build.assign(build.begin(), build.end());
        out.host.assign(host.begin(), host.end());
        out.run.assign(run.begin(), run.end());
        return out;
    }

    inline auto render_recipe(const recipe& r) -> std::string
    {
        std::string out;
        out += "package:\n";
        out += "  name: " + r.name + "\n";
        out += "  version: " + r.version + "\n";
        if (!r.source_locator.empty() || !r.source_digest.empty())
        {
            out += "source:\n";
            if (!r.source_locator.empty())
            {
                out += "  locator: " + r.source_locator + "\n";
            }
            if (!r.source_digest.empty())
            {
                out += "  digest: " + r.source_digest + "\n";
            }
        }
        out += "build:\n";
        out += "  script: " + r.build_script + "\n";
        out += "requirements:\n";
        out += "  build:\n";
        for (const auto& item : r.build)
        {
            out += "    - " + item + "\n";
        }
        out += "  host:\n";
        for (const auto& item : r.host)
        {
            out += "    - " + item + "\n";
        }
        out += "  run:\n";
        for (const auto& item : r.run)
        {
            out += "    - " + item + "\n";
        }
        return out;
    }

    // Topological order over in-snapshot build+exec edges, alphabetical ties.
    inline auto build_order(const std::vector<ros_manifest>& snapshot)
        -> std::vector<std::string>
    {
        std::map<std::string, const ros_manifest*> by_name;
        for (const auto& manifest : snapshot)
        {
            if (!by_name.emplace(manifest.name, &manifest).second)
            {
                throw malformed_manifest("duplicate manifest name '" + manifest.name + "'");
            }
        }
        auto deps_of = [&](const std::string& name) -> std::set<std::string>
        {
            std::set<std::string> deps;
            const auto* manifest = by_name.at(name);
            for (const auto* list : { &manifest->build_depend, &manifest->exec_depend })
            {
                for (const auto& key : *list)
                {
                    if (key != name && by_name.count(key) != 0)
                    {
                        deps.insert(key);
                    }
                }
            }
            return deps;
        };

        std::map<std::string, std::size_t> indegree;
        std::map<std::string, std::vector<std::string>> dependents;
        for (const auto& [name, manifest] : by_name)
        {
            auto deps = deps_of(name);
            indegree[name] = deps.size();
            for (const auto& dep : deps)
            {
                dependents[dep].push_back(name);
            }
        }
        std::set<std::string> ready;
        for (const auto& [name, degree] : indegree)
        {
            if (degree == 0)
            {
                ready.insert(name);
            }
        }
        std::vector<std::string> order;
        while (!ready.empty())
        {
            auto name = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(name);
            for (const auto& next : dependents[name])
            {
                if (--indegree[next] == 0)
                {
                    ready.insert(next);
                }
            }
        }
        if (order.size() != by_name.size())
        {
            // walk the stuck subgraph along its smallest unresolved dependency
            // until a node repeats, then report that loop as the cycle path
            std::set<std::string> stuck;
            for (const auto& [name, degree] : indegree)
            {
                if (degree != 0)
                {
                    stuck.insert(name);
                }
            }
            std::vector<std::string> path;
            std::string current = *stuck.begin();
            while (std::find(path.begin(), path.end(), current) == path.end())
            {
                path.push_back(current);
                for (const auto& dep : deps_of(current))
                {
                    if (stuck.count(dep) != 0)
                    {
                        current = dep;
                        break;
                    }
                }
            }
            auto begin = std::find(path.begin(), path.end(), current);
            std::string joined = "[";
            for (auto it2 = begin; it2 != path.end(); ++it2)
            {
                joined += *it2 + ", ";
            }
            joined += current + "]";
            throw dependency_cycle(joined);
        }
        return order;
    }
}

#endif
