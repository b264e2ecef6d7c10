// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#include <filesystem>
#include <iostream>

#include "support/fixtures.hpp"

// Writes the bundled fixture channels and manifest snapshot under the given
// root, in the layout the CLI expects for MINIPKG_ROOT.
auto main(int argc, char** argv) -> int
{
    if (argc != 2)
    {
        std::cerr << "usage: mkfixtures <root>\n";
        return 1;
    }
    std::filesystem::path root(argv[1]);
    fixtures::write_fixture_tree(root / "channels");
    fixtures::write_manifest_tree(root / "manifests");
    return 0;
}
