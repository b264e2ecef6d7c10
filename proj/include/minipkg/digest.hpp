// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "minipkg/errors.hpp"

namespace minipkg
{
    namespace detail
    {
        inline auto to_hex(const unsigned char* data, std::size_t len) -> std::string
        {
            static constexpr char digits[] = "0123456789abcdef";
            std::string out;
            out.reserve(len * 2);
            for (std::size_t i = 0; i < len; ++i)
            {
                out.push_back(digits[data[i] >> 4]);
                out.push_back(digits[data[i] & 0x0F]);
            }
            return out;
        }
    }

    class sha256_hasher
    {
    public:

        sha256_hasher()
            : m_ctx(EVP_MD_CTX_new())
        {
            EVP_DigestInit_ex(m_ctx, EVP_sha256(), nullptr);
        }

        ~sha256_hasher()
        {
            EVP_MD_CTX_free(m_ctx);
        }

        sha256_hasher(const sha256_hasher&) = delete;
        auto operator=(const sha256_hasher&) -> sha256_hasher& = delete;

        void update(const void* data, std::size_t len)
        {
            EVP_DigestUpdate(m_ctx, data, len);
        }

        void update(std::string_view data)
        {
            update(data.data(), data.size());
        }

        [[nodiscard]] auto hex_digest() -> std::string
        {
            std::array<unsigned char, EVP_MAX_MD_SIZE> buf{};
            unsigned int len = 0;
            EVP_DigestFinal_ex(m_ctx, buf.data(), &len);
            return detail::to_hex(buf.data(), len);
        }

    private:

        EVP_MD_CTX* m_ctx;
    };

    inline auto sha256_hex(std::string_view data) -> std::string
    {
        sha256_hasher h;
        h.update(data);
        return h.hex_digest();
    }

    inline auto sha256_file(const std::string& path) -> std::string
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw source_unreachable("cannot open '" + path + "' for hashing");
        }
        sha256_hasher h;
        std::array<char, 65536> buf{};
        while (in)
        {
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            auto got = in.gcount();
            if (got > 0)
            {
                h.update(buf.data(), static_cast<std::size_t>(got));
            }
        }
        return h.hex_digest();
    }
}
