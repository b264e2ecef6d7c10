// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <array>
#include <string>
#include <string_view>

#include "minipkg/errors.hpp"

namespace minipkg
{
    enum class platform
    {
        linux_64,
        linux_aarch64,
        osx_64,
        osx_arm64,
        win_64,
        noarch,
    };

    inline constexpr std::array<platform, 6> all_platforms = {
        platform::linux_64, platform::linux_aarch64, platform::osx_64,
        platform::osx_arm64, platform::win_64,       platform::noarch,
    };

    inline auto platform_name(platform p) -> std::string_view
    {
        switch (p)
        {
            case platform::linux_64:
                return "linux-64";
            case platform::linux_aarch64:
                return "linux-aarch64";
            case platform::osx_64:
                return "osx-64";
            case platform::osx_arm64:
                return "osx-arm64";
            case platform::win_64:
                return "win-64";
            case platform::noarch:
                return "noarch";
        }
        return "noarch";
    }

    inline auto parse_platform(std::string_view text) -> platform
    {
        for (platform p : all_platforms)
        {
            if (platform_name(p) == text)
            {
                return p;
            }
        }
        throw malformed_document("unknown platform '" + std::string(text) + "'");
    }

    inline auto is_linux(platform p) -> bool
    {
        return p == platform::linux_64 || p == platform::linux_aarch64;
    }

    inline auto is_osx(platform p) -> bool
    {
        return p == platform::osx_64 || p == platform::osx_arm64;
    }

    // Platform of the running process, used as the CLI default.
    inline auto host_platform() -> platform
    {
#if defined(_WIN32)
        return platform::win_64;
#elif defined(__APPLE__)
#if defined(__aarch64__) || defined(__arm64__)
        return platform::osx_arm64;
#else
        return platform::osx_64;
#endif
#else
#if defined(__aarch64__)
        return platform::linux_aarch64;
#else
        return platform::linux_64;
#endif
#endif
    }
}
