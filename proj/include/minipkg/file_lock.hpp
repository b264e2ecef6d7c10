// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <filesystem>
#include <string>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "minipkg/errors.hpp"

namespace minipkg
{
    // Advisory lock over a prefix. Exclusive for transactions, shared for
    // reads. Process-scoped; released on destruction or close.
    class file_lock
    {
    public:

        enum class mode
        {
            shared,
            exclusive,
        };

        file_lock(const std::filesystem::path& path, mode m)
            : m_path(path)
        {
            std::filesystem::create_directories(path.parent_path());
            m_fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
            if (m_fd < 0)
            {
                throw lock_held("cannot open lock file '" + path.string() + "'");
            }
            int op = (m == mode::exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB;
            if (::flock(m_fd, op) != 0)
            {
                ::close(m_fd);
                m_fd = -1;
                throw lock_held("prefix is locked by another process: " + path.string());
            }
        }

        ~file_lock()
        {
            release();
        }

        file_lock(const file_lock&) = delete;
        auto operator=(const file_lock&) -> file_lock& = delete;

        file_lock(file_lock&& other) noexcept
            : m_path(std::move(other.m_path))
            , m_fd(other.m_fd)
        {
            other.m_fd = -1;
        }

        void release()
        {
            if (m_fd >= 0)
            {
                ::flock(m_fd, LOCK_UN);
                ::close(m_fd);
                m_fd = -1;
            }
        }

    private:

        std::filesystem::path m_path;
        int m_fd = -1;
    };
}
