// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <array>
#include <cstring>
#include <map>
#include <string>
#include <string_view>

#include "minipkg/errors.hpp"

namespace minipkg
{
    // Minimal ustar container support. Writing is fully deterministic: fixed
    // zero mtime, zero ownership, entries emitted in sorted path order, two
    // trailing zero blocks. Only regular files are stored; directories are
    // implied by the paths.
    namespace tar
    {
        constexpr std::size_t block_size = 512;

        namespace detail
        {
            inline void put_octal(char* field, std::size_t width, std::uint64_t value)
            {
                // width includes the trailing NUL
                for (std::size_t i = width - 1; i-- > 0;)
                {
                    field[i] = static_cast<char>('0' + (value & 7));
                    value >>= 3;
                }
                field[width - 1] = '\0';
            }

            inline auto read_octal(const char* field, std::size_t width) -> std::uint64_t
            {
                std::uint64_t value = 0;
                for (std::size_t i = 0; i < width; ++i)
                {
                    char c = field[i];
                    if (c == '\0' || c == ' ')
                    {
                        break;
                    }
                    if (c < '0' || c > '7')
                    {
                        throw malformed_archive("non-octal header field");
                    }
                    value = (value << 3) | static_cast<std::uint64_t>(c - '0');
                }
                return value;
            }
        }

        inline auto write_entry(const std::string& path, std::string_view payload) -> std::string
        {
            std::array<char, block_size> header{};

            std::string name = path;
            std::string prefix;
            if (name.size() > 100)
            {
                auto cut = name.rfind('/', 155);
                if (cut == std::string::npos || name.size() - cut - 1 > 100)
                {
                    throw malformed_archive("path too long for ustar: " + path);
                }
                prefix = name.substr(0, cut);
                name = name.substr(cut + 1);
            }

            std::memcpy(header.data(), name.data(), name.size());
            detail::put_octal(header.data() + 100, 8, 0644);
            detail::put_octal(header.data() + 108, 8, 0);
            detail::put_octal(header.data() + 116, 8, 0);
            detail::put_octal(header.data() + 124, 12, payload.size());
            detail::put_octal(header.data() + 136, 12, 0);
            std::memset(header.data() + 148, ' ', 8);
            header[156] = '0';
            std::memcpy(header.data() + 257, "ustar", 6);
            header[263] = '0';
            header[264] = '0';
            std::memcpy(header.data() + 345, prefix.data(), prefix.size());

            unsigned int checksum = 0;
            for (unsigned char c : header)
            {
                checksum += c;
            }
            detail::put_octal(header.data() + 148, 7, checksum);
            header[155] = ' ';

            std::string out(header.data(), header.size());
            out.append(payload);
            if (payload.size() % block_size != 0)
            {
                out.append(block_size - payload.size() % block_size, '\0');
            }
            return out;
        }

        // payload by path, sorted for reproducible bytes
        inline auto compose(const std::map<std::string, std::string>& files) -> std::string
        {
            std::string out;
            for (const auto& [path, payload] : files)
            {
                out += write_entry(path, payload);
            }
            out.append(2 * block_size, '\0');
            return out;
        }

        inline auto is_zero_block(const char* block) -> bool
        {
            for (std::size_t i = 0; i < block_size; ++i)
            {
                if (block[i] != '\0')
                {
                    return false;
                }
            }
            return true;
        }

        inline auto extract(std::string_view data) -> std::map<std::string, std::string>
        {
            std::map<std::string, std::string> files;
            std::size_t offset = 0;
            bool terminated = false;
            while (offset + block_size <= data.size())
            {
                const char* header = data.data() + offset;
                if (is_zero_block(header))
                {
                    terminated = true;
                    break;
                }
                if (std::memcmp(header + 257, "ustar", 5) != 0)
                {
                    throw malformed_archive("missing ustar magic");
                }

                unsigned int stored = static_cast<unsigned int>(
                    detail::read_octal(header + 148, 8)
                );
                unsigned int computed = 0;
                for (std::size_t i = 0; i < block_size; ++i)
                {
                    computed += static_cast<unsigned char>(
                        i >= 148 && i < 156 ? ' ' : header[i]
                    );
                }
                if (stored != computed)
                {
                    throw malformed_archive("header checksum mismatch");
                }

                std::string name(header, strnlen(header, 100));
                std::string prefix(header + 345, strnlen(header + 345, 155));
                if (!prefix.empty())
                {
                    name = prefix + "/" + name;
                }
                auto size = detail::read_octal(header + 124, 12);
                char type = header[156];

                offset += block_size;
                if (offset + size > data.size())
                {
                    throw malformed_archive("truncated payload for " + name);
                }
                if (type == '0' || type == '\0')
                {
                    files.emplace(name, std::string(data.substr(offset, size)));
                }
                offset += (size + block_size - 1) / block_size * block_size;
            }
            if (!terminated)
            {
                throw malformed_archive("missing end-of-archive blocks");
            }
            return files;
        }
    }
}
