// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <stdexcept>
#include <string>

namespace minipkg
{
    // Broad failure classes. The CLI maps them onto its exit-code contract:
    // 1 user error, 2 unsatisfiable request, 3 I/O or integrity failure.
    enum class error_class
    {
        user = 1,
        unsat = 2,
        io = 3,
    };

    class error : public std::runtime_error
    {
    public:
        error(std::string message, error_class cls)
            : std::runtime_error(std::move(message))
            , m_class(cls)
        {
        }

        [[nodiscard]] auto cls() const -> error_class
        {
            return m_class;
        }

    private:
        error_class m_class;
    };

    struct malformed_version : error
    {
        explicit malformed_version(const std::string& msg)
            : error("malformed version: " + msg, error_class::user)
        {
        }
    };

    struct malformed_spec : error
    {
        explicit malformed_spec(const std::string& msg)
            : error("malformed match spec: " + msg, error_class::user)
        {
        }
    };

    struct malformed_index : error
    {
        explicit malformed_index(const std::string& msg)
            : error("malformed index: " + msg, error_class::io)
        {
        }
    };

    struct source_unreachable : error
    {
        explicit source_unreachable(const std::string& msg)
            : error("source unreachable: " + msg, error_class::io)
        {
        }
    };

    struct malformed_archive : error
    {
        explicit malformed_archive(const std::string& msg)
            : error("malformed archive: " + msg, error_class::io)
        {
        }
    };

    struct digest_mismatch : error
    {
        explicit digest_mismatch(const std::string& msg)
            : error("digest mismatch: " + msg, error_class::io)
        {
        }
    };

    struct prefix_too_long : error
    {
        explicit prefix_too_long(const std::string& msg)
            : error("prefix too long: " + msg, error_class::io)
        {
        }
    };

    struct lock_held : error
    {
        explicit lock_held(const std::string& msg)
            : error("environment lock held: " + msg, error_class::io)
        {
        }
    };

    struct corrupt_environment : error
    {
        explicit corrupt_environment(const std::string& msg)
            : error("corrupt environment: " + msg, error_class::io)
        {
        }
    };

    struct environment_exists : error
    {
        explicit environment_exists(const std::string& msg)
            : error("environment exists: " + msg, error_class::user)
        {
        }
    };

    struct unknown_environment : error
    {
        explicit unknown_environment(const std::string& msg)
            : error("unknown environment: " + msg, error_class::user)
        {
        }
    };

    struct spec_has_no_candidates : error
    {
        explicit spec_has_no_candidates(const std::string& msg)
            : error("no candidates: " + msg, error_class::unsat)
        {
        }
    };

    struct cycle_in_dependency_graph : error
    {
        explicit cycle_in_dependency_graph(const std::string& msg)
            : error("dependency cycle: " + msg, error_class::user)
        {
        }
    };

    struct instance_too_large : error
    {
        explicit instance_too_large(const std::string& msg)
            : error("instance too large: " + msg, error_class::user)
        {
        }
    };

    struct malformed_manifest : error
    {
        explicit malformed_manifest(const std::string& msg)
            : error("malformed manifest: " + msg, error_class::user)
        {
        }
    };

    struct unmapped_dependency : error
    {
        explicit unmapped_dependency(const std::string& msg)
            : error("unmapped dependency: " + msg, error_class::user)
        {
        }
    };

    struct dependency_cycle : error
    {
        explicit dependency_cycle(const std::string& msg)
            : error("dependency cycle: " + msg, error_class::user)
        {
        }
    };

    struct platform_missing : error
    {
        explicit platform_missing(const std::string& msg)
            : error("platform missing: " + msg, error_class::user)
        {
        }
    };

    struct malformed_document : error
    {
        explicit malformed_document(const std::string& msg)
            : error("malformed document: " + msg, error_class::user)
        {
        }
    };

    // Per-platform solve failures aggregated by lockfile generation.
    struct lock_unsatisfiable : error
    {
        explicit lock_unsatisfiable(const std::string& msg)
            : error("lock generation failed: " + msg, error_class::unsat)
        {
        }
    };

    struct pinned_package : error
    {
        explicit pinned_package(const std::string& msg)
            : error("pinned package: " + msg, error_class::unsat)
        {
        }
    };

    // Carries a rendered explanation tree; the message is printed verbatim.
    struct unsatisfiable : error
    {
        explicit unsatisfiable(const std::string& rendered_explanation)
            : error(rendered_explanation, error_class::unsat)
        {
        }
    };
}
