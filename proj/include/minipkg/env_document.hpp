// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#ifndef MINIPKG_ENV_DOCUMENT_HPP
#define MINIPKG_ENV_DOCUMENT_HPP

#include <string>
#include <vector>

#include "errors.hpp"
#include "match_spec.hpp"

namespace minipkg
{
    // Environment documents share one shape between exports and spec files.
    // Spec files additionally carry a platforms section.
    struct env_document
    {
        std::string name;
        std::vector<std::string> channels;
        std::vector<std::string> dependencies;
        std::vector<std::string> platforms;

        auto operator==(const env_document&) const -> bool = default;
    };

    namespace env_doc_detail
    {
        inline auto strip(const std::string& text) -> std::string
        {
            auto begin = text.find_first_not_of(" \t\r");
            if (begin == std::string::npos)
            {
                return "";
            }
            auto end = text.find_last_not_of(" \t\r");
            return text.substr(begin, end - begin + 1);
        }

        inline auto split_lines(const std::string& text) -> std::vector<std::string>
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
                else
                {
                    current.push_back(c);
                }
            }
            if (!current.empty())
            {
                lines.push_back(current);
            }
            return lines;
        }
    }

    inline auto render_env_document(const env_document& doc) -> std::string
    {
        std::string out;
        if (!doc.name.empty())
        {
            out += "name: " + doc.name + "\n";
        }
        out += "channels:\n";
        for (const auto& channel : doc.channels)
        {
            out += "  - " + channel + "\n";
        }
        out += "dependencies:\n";
        for (const auto& dep : doc.dependencies)
        {
            out += "  - " + dep + "\n";
        }
        if (!doc.platforms.empty())
        {
            out += "platforms:\n";
            for (const auto& plat : doc.platforms)
            {
                out += "  - " + plat + "\n";
            }
        }
        return out;
    }

    inline auto parse_env_document(const std::string& text) -> env_document
    {
        env_document doc;
        std::vector<std::string>* active = nullptr;
        bool saw_channels = false;
        bool saw_dependencies = false;
        for (const auto& raw : env_doc_detail::split_lines(text))
        {
            auto line = env_doc_detail::strip(raw);
            if (line.empty() || line[0] == '#')
            {
                continue;
            }
            if (line == "channels:")
            {
                active = &doc.channels;
                saw_channels = true;
            }
            else if (line == "dependencies:")
            {
                active = &doc.dependencies;
                saw_dependencies = true;
            }
            else if (line == "platforms:")
            {
                active = &doc.platforms;
            }
            else if (line.rfind("name:", 0) == 0)
            {
                doc.name = env_doc_detail::strip(line.substr(5));
                active = nullptr;
                if (doc.name.empty())
                {
                    throw malformed_document("empty value for 'name:'");
                }
            }
            else if (line.rfind("- ", 0) == 0)
            {
                if (active == nullptr)
                {
                    throw malformed_document("list item outside a section: '" + line + "'");
                }
                auto item = env_doc_detail::strip(line.substr(2));
                if (item.empty())
                {
                    throw malformed_document("empty list item");
                }
                active->push_back(item);
            }
            else
            {
                throw malformed_document("unrecognized line: '" + line + "'");
            }
        }
        if (!saw_channels || !saw_dependencies)
        {
            throw malformed_document("document must contain 'channels:' and 'dependencies:' sections");
        }
        for (const auto& dep : doc.dependencies)
        {
            try
            {
                parse_matchspec(dep);
            }
            catch (const malformed_spec& e)
            {
                throw malformed_document("dependency '" + dep + "': " + e.what());
            }
        }
        for (const auto& plat : doc.platforms)
        {
            parse_platform(plat);
        }
        return doc;
    }
}

#endif
