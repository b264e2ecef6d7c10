// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#ifndef MINIPKG_TESTS_FIXTURES_HPP
#define MINIPKG_TESTS_FIXTURES_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <minipkg/archive.hpp>
#include <minipkg/channel.hpp>
#include <minipkg/digest.hpp>
#include <minipkg/record.hpp>

namespace fixtures
{
    // The text placeholder used by fixture payloads; binary payloads embed
    // minipkg::long_placeholder() instead.
    inline auto text_placeholder() -> const std::string&
    {
        static const std::string placeholder = "/opt/placeholder_prefix";
        return placeholder;
    }

    struct authored_record
    {
        minipkg::package_record record;
        std::string archive_bytes;
    };

    struct authored_channel
    {
        std::string name;
        std::map<minipkg::platform, std::vector<authored_record>> by_platform;
    };

    struct fixture_set
    {
        authored_channel robostack;
        authored_channel conda_forge;
    };

    // Nine payload files per package: text and binary relocations, plain
    // files, and enough entries that one full install offers 100+ hook steps.
    inline auto make_archive(
        const std::string& name,
        const std::string& version,
        const std::string& build,
        std::uint64_t build_number,
        const std::vector<std::string>& depends,
        minipkg::platform subdir
    ) -> minipkg::package_archive
    {
        const auto& text_ph = text_placeholder();
        const auto& bin_ph = minipkg::long_placeholder();
        auto tag = name + "-" + version + "-" + build;

        minipkg::package_archive archive;
        archive.name = name;
        archive.version = version;
        archive.build = build;
        archive.build_number = build_number;
        archive.depends = depends;
        archive.subdir = subdir;

        auto add = [&](const std::string& path,
                       const std::string& mode,
                       std::optional<std::string> placeholder,
                       std::string bytes)
        {
            archive.paths.push_back({ path, mode, std::move(placeholder) });
            archive.payload[path] = std::move(bytes);
        };

        add("bin/" + name,
            "text",
            text_ph,
            "#!" + text_ph + "/bin/sh\nexec " + text_ph + "/libexec/" + tag + " \"$@\"\n");
        add("bin/" + name + "-config",
            "text",
            text_ph,
            "prefix=" + text_ph + "\nlibdir=" + text_ph + "/lib\nname=" + tag + "\n");
        add("etc/" + name + ".conf",
            "text",
            text_ph,
            "[core]\nroot = " + text_ph + "\npackage = " + tag + "\n");
        add("lib/lib" + name + ".so",
            "binary",
            bin_ph,
            "\x7f" "ELF" + std::string(1, '\0') + tag + std::string(1, '\0') + bin_ph
                + std::string(1, '\0') + "payload-" + tag + std::string(3, '\0'));
        add("lib/" + name + "/data.bin",
            "binary",
            std::nullopt,
            std::string("\x00\x01\x02\x03", 4) + tag + std::string("\xff\xfe", 2));
        add("share/" + name + "/config.txt",
            "text",
            text_ph,
            "home=" + text_ph + "/share/" + name + "\ncache=" + text_ph + "/var/cache\n");
        add("share/" + name + "/readme.txt",
            "text",
            std::nullopt,
            "This directory belongs to " + tag + ".\n");
        add("share/" + name + "/version.txt", "text", std::nullopt, version + "\n");
        add("share/doc/" + name + "/index.html",
            "text",
            std::nullopt,
            "<html><body>" + tag + "</body></html>\n");
        return archive;
    }

    inline auto author(
        const std::string& channel,
        minipkg::platform plat,
        const std::string& name,
        const std::string& version,
        const std::string& build,
        std::uint64_t build_number,
        const std::vector<std::string>& depends
    ) -> authored_record
    {
        auto archive = make_archive(name, version, build, build_number, depends, plat);
        auto bytes = minipkg::compose_archive(archive);
        auto digest = minipkg::sha256_hex(bytes);

        authored_record out;
        out.record = minipkg::to_record(archive, channel, digest);
        out.archive_bytes = std::move(bytes);
        return out;
    }

    inline auto make_fixtures() -> const fixture_set&
    {
        static const fixture_set fixtures = []
        {
            using minipkg::platform;
            fixture_set set;
            set.robostack.name = "robostack";
            set.conda_forge.name = "conda-forge";

            auto& rs_linux = set.robostack.by_platform[platform::linux_64];
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-desktop", "1.5.0", "py38_0", 0,
                { "ros-noetic-ros-core =1.5", "ros-noetic-rviz", "ros-noetic-rqt-gui" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-desktop", "1.4.0", "py38_0", 0,
                { "ros-noetic-ros-core =1.4" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-ros-core", "1.5.0", "py38_1", 1,
                { "ros-noetic-roscpp >=1.15", "ros-noetic-rospy >=1.15" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-roscpp", "1.15.9", "h0_0", 0,
                { "boost-cpp >=1.74", "openssl >=1.1" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-roscpp", "1.15.8", "h0_0", 0,
                { "boost-cpp >=1.74", "openssl >=1.1" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-rospy", "1.15.9", "py38_0", 0,
                { "python =3.8", "ros-noetic-roscpp" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-rospy", "1.15.8", "py38_0", 0,
                { "python =3.8", "ros-noetic-roscpp" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-rviz", "1.14.5", "h1_1", 1,
                { "ogre =1.12", "qt-main >=5.12", "ros-noetic-roscpp", "boost-cpp >=1.74" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-rviz", "1.14.4", "h0_0", 0,
                { "ogre =1.12", "qt-main >=5.12", "ros-noetic-roscpp", "boost-cpp >=1.74" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-rqt-gui", "0.5.2", "py38_0", 0,
                { "python =3.8", "qt-main >=5.12", "ros-noetic-rospy" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-noetic-ros-base", "1.5.0", "py38_0", 0,
                { "ros-noetic-roscpp", "__glibc >=2.17" }
            ));
            rs_linux.push_back(author(
                "robostack", platform::linux_64, "ros-melodic-desktop", "1.4.1", "py27_0", 0,
                {}
            ));

            auto& rs_win = set.robostack.by_platform[platform::win_64];
            rs_win.push_back(author(
                "robostack", platform::win_64, "ros-noetic-roscpp", "1.15.9", "hwin_0", 0,
                { "boost-cpp >=1.74", "openssl >=1.1" }
            ));

            auto& cf_linux = set.conda_forge.by_platform[platform::linux_64];
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "boost-cpp", "1.74.0", "h0_0", 0, {}
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "python", "3.8.8", "hffdb5ce_0_cpython", 0,
                { "openssl >=1.1" }
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "python", "3.9.1", "h18258f7_1_cpython", 1,
                { "openssl >=1.1" }
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "openssl", "1.1.1k", "h0_0", 0, {}
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "ogre", "1.12.9", "h2_2", 2,
                { "boost-cpp >=1.74" }
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "qt-main", "5.12.9", "h0_0", 0,
                { "openssl >=1.1" }
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "ros-noetic-roscpp", "1.15.10", "h0_0", 0,
                { "boost-cpp >=1.74", "openssl >=1.1" }
            ));
            cf_linux.push_back(author(
                "conda-forge", platform::linux_64, "tqdm", "4.62.0", "py38h_0", 0,
                { "python >=3.8" }
            ));

            auto& cf_noarch = set.conda_forge.by_platform[platform::noarch];
            cf_noarch.push_back(author(
                "conda-forge", platform::noarch, "tqdm", "4.62.0", "pyhd3_0", 0,
                { "python >=3.8" }
            ));
            cf_noarch.push_back(author(
                "conda-forge", platform::noarch, "catkin-tools", "0.7.1", "pyhd3_0", 0,
                { "python >=3.8" }
            ));

            auto& cf_win = set.conda_forge.by_platform[platform::win_64];
            cf_win.push_back(author(
                "conda-forge", platform::win_64, "python", "3.8.8", "hwin_0", 0,
                { "openssl >=1.1" }
            ));
            cf_win.push_back(author(
                "conda-forge", platform::win_64, "openssl", "1.1.1k", "hwin_0", 0, {}
            ));
            cf_win.push_back(author(
                "conda-forge", platform::win_64, "boost-cpp", "1.74.0", "hwin_0", 0, {}
            ));
            return set;
        }();
        return fixtures;
    }

    inline auto render_repodata(const authored_channel& channel, minipkg::platform plat)
        -> std::string
    {
        nlohmann::ordered_json doc;
        doc["info"]["subdir"] = std::string(minipkg::platform_name(plat));
        doc["packages"] = nlohmann::ordered_json::object();
        auto it = channel.by_platform.find(plat);
        if (it != channel.by_platform.end())
        {
            for (const auto& authored : it->second)
            {
                doc["packages"][authored.record.filename]
                    = minipkg::record_to_index_entry(authored.record);
            }
        }
        return doc.dump(2) + "\n";
    }

    // Writes `<root>/<channel>/<platform>/{repodata.json, *.tar}` for both
    // fixture channels, covering every authored platform plus noarch.
    inline auto write_fixture_tree(const std::filesystem::path& root) -> void
    {
        const auto& set = make_fixtures();
        for (const auto* channel : { &set.robostack, &set.conda_forge })
        {
            std::vector<minipkg::platform> plats;
            for (const auto& [plat, records] : channel->by_platform)
            {
                plats.push_back(plat);
            }
            if (std::find(plats.begin(), plats.end(), minipkg::platform::noarch) == plats.end())
            {
                plats.push_back(minipkg::platform::noarch);
            }
            for (auto plat : plats)
            {
                auto dir = root / channel->name / std::string(minipkg::platform_name(plat));
                std::filesystem::create_directories(dir);
                std::ofstream index(dir / "repodata.json", std::ios::binary);
                index << render_repodata(*channel, plat);
                auto it = channel->by_platform.find(plat);
                if (it == channel->by_platform.end())
                {
                    continue;
                }
                for (const auto& authored : it->second)
                {
                    std::ofstream archive(dir / authored.record.filename, std::ios::binary);
                    archive.write(
                        authored.archive_bytes.data(),
                        static_cast<std::streamsize>(authored.archive_bytes.size())
                    );
                }
            }
        }
    }

    // In-memory channel indexes, bypassing disk for solver-level tests.
    inline auto to_channel_index(const authored_channel& channel, minipkg::platform plat)
        -> minipkg::channel_index
    {
        minipkg::channel_index index;
        index.channel = channel.name;
        index.plat = plat;
        auto it = channel.by_platform.find(plat);
        if (it != channel.by_platform.end())
        {
            for (const auto& authored : it->second)
            {
                index.records[authored.record.filename] = authored.record;
            }
        }
        return index;
    }

    // The standard two-channel merge used by the flagship scenario tests.
    inline auto merged_linux_index() -> minipkg::merged_index
    {
        const auto& set = make_fixtures();
        std::vector<minipkg::channel_index> indexes;
        indexes.push_back(to_channel_index(set.robostack, minipkg::platform::linux_64));
        indexes.push_back(to_channel_index(set.robostack, minipkg::platform::noarch));
        indexes.push_back(to_channel_index(set.conda_forge, minipkg::platform::linux_64));
        indexes.push_back(to_channel_index(set.conda_forge, minipkg::platform::noarch));
        return minipkg::merge_channels(indexes);
    }

    inline auto merged_win_index() -> minipkg::merged_index
    {
        const auto& set = make_fixtures();
        std::vector<minipkg::channel_index> indexes;
        indexes.push_back(to_channel_index(set.robostack, minipkg::platform::win_64));
        indexes.push_back(to_channel_index(set.robostack, minipkg::platform::noarch));
        indexes.push_back(to_channel_index(set.conda_forge, minipkg::platform::win_64));
        indexes.push_back(to_channel_index(set.conda_forge, minipkg::platform::noarch));
        return minipkg::merge_channels(indexes);
    }

    inline auto linux_profile() -> minipkg::platform_profile
    {
        minipkg::platform_profile profile;
        profile.plat = minipkg::platform::linux_64;
        profile.glibc_version = "2.17";
        return profile;
    }

    inline auto win_profile() -> minipkg::platform_profile
    {
        minipkg::platform_profile profile;
        profile.plat = minipkg::platform::win_64;
        return profile;
    }

    // Expected full closure for `ros-noetic-desktop`, as (name, version,
    // build, channel) tuples sorted by name.
    inline auto desktop_closure() -> std::vector<std::array<std::string, 4>>
    {
        return {
            { "boost-cpp", "1.74.0", "h0_0", "conda-forge" },
            { "ogre", "1.12.9", "h2_2", "conda-forge" },
            { "openssl", "1.1.1k", "h0_0", "conda-forge" },
            { "python", "3.8.8", "hffdb5ce_0_cpython", "conda-forge" },
            { "qt-main", "5.12.9", "h0_0", "conda-forge" },
            { "ros-noetic-desktop", "1.5.0", "py38_0", "robostack" },
            { "ros-noetic-ros-core", "1.5.0", "py38_1", "robostack" },
            { "ros-noetic-roscpp", "1.15.9", "h0_0", "robostack" },
            { "ros-noetic-rospy", "1.15.9", "py38_0", "robostack" },
            { "ros-noetic-rqt-gui", "0.5.2", "py38_0", "robostack" },
            { "ros-noetic-rviz", "1.14.5", "h1_1", "robostack" },
        };
    }

    inline auto archive_bytes_for(const std::string& channel, const std::string& filename)
        -> const std::string&
    {
        const auto& set = make_fixtures();
        const auto& chan = channel == "robostack" ? set.robostack : set.conda_forge;
        for (const auto& [plat, records] : chan.by_platform)
        {
            for (const auto& authored : records)
            {
                if (authored.record.filename == filename)
                {
                    return authored.archive_bytes;
                }
            }
        }
        throw std::runtime_error("no fixture archive " + channel + "/" + filename);
    }

    // ROS manifest snapshot used by the recipe and build-order tests. One
    // manifest (nav_stack) carries deliberately unmapped keys.
    inline auto manifest_documents() -> std::map<std::string, std::string>
    {
        std::map<std::string, std::string> docs;
        docs["desktop"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>desktop</name>
  <version>1.5.0</version>
  <description>Metapackage for a full desktop install.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <exec_depend>ros_core</exec_depend>
  <exec_depend>rviz</exec_depend>
  <exec_depend>rqt_gui</exec_depend>
  <exec_depend>cv_bridge</exec_depend>
</package>
)";
        docs["ros_core"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>ros_core</name>
  <version>1.5.0</version>
  <description>Core communication stack.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <depend>roscpp</depend>
  <exec_depend>rospy</exec_depend>
</package>
)";
        docs["roscpp"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>roscpp</name>
  <version>1.15.9</version>
  <description>C++ client library.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <build_depend>boost</build_depend>
  <build_depend>catkin</build_depend>
  <build_export_depend>boost</build_export_depend>
  <exec_depend>boost</exec_depend>
  <test_depend>gtest</test_depend>
</package>
)";
        docs["rospy"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>rospy</name>
  <version>1.15.9</version>
  <description>Python client library.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <depend>roscpp</depend>
  <build_depend>catkin</build_depend>
  <exec_depend>python</exec_depend>
</package>
)";
        docs["rviz"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>rviz</name>
  <version>1.14.5</version>
  <description>3D visualization tool.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <build_depend>qt</build_depend>
  <build_depend>ogre</build_depend>
  <build_depend>boost</build_depend>
  <build_depend>catkin</build_depend>
  <exec_depend>qt</exec_depend>
  <exec_depend>ogre</exec_depend>
</package>
)";
        docs["rqt_gui"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>rqt_gui</name>
  <version>0.5.2</version>
  <description>Qt GUI framework.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <depend>rospy</depend>
  <exec_depend>qt</exec_depend>
</package>
)";
        docs["cv_bridge"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>cv_bridge</name>
  <version>1.13.0</version>
  <description>Bridge between ROS images and OpenCV.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <build_depend>opencv</build_depend>
  <build_depend>boost</build_depend>
  <build_depend>catkin</build_depend>
  <exec_depend>opencv</exec_depend>
  <exec_depend>python</exec_depend>
</package>
)";
        docs["nav_stack"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>nav_stack</name>
  <version>0.3.0</version>
  <description>Navigation stack with deliberately unmapped dependencies.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <build_depend>bullet</build_depend>
  <build_depend>sdl2</build_depend>
  <exec_depend>bullet</exec_depend>
</package>
)";
        return docs;
    }

    inline auto cycle_manifest_documents() -> std::map<std::string, std::string>
    {
        std::map<std::string, std::string> docs;
        docs["pkg_a"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>pkg_a</name>
  <version>0.1.0</version>
  <description>Half of a dependency cycle.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <depend>pkg_b</depend>
</package>
)";
        docs["pkg_b"] = R"(<?xml version="1.0"?>
<package format="2">
  <name>pkg_b</name>
  <version>0.1.0</version>
  <description>Other half of a dependency cycle.</description>
  <maintainer email="dev@example.org">Fixture Maintainers</maintainer>
  <depend>pkg_a</depend>
</package>
)";
        return docs;
    }

    inline auto mapping_document() -> std::string
    {
        return R"([linux-64]
boost: [boost-cpp >=1.74]
catkin: [cmake, ninja]
ogre: [ogre]
opencv: [libopencv]
python: [python >=3.8]
qt: [qt-main]

[win-64]
boost: [boost-cpp >=1.74]
catkin: [cmake, ninja]
python: [python >=3.8]
qt: [qt-main]
)";
    }

    inline auto spec_file_document() -> std::string
    {
        return R"(name: locked-tools
channels:
  - conda-forge
dependencies:
  - python=3.8
  - tqdm
platforms:
  - linux-64
  - win-64
)";
    }

    inline auto write_manifest_tree(const std::filesystem::path& root) -> void
    {
        auto snapshot = root / "snapshot";
        std::filesystem::create_directories(snapshot);
        for (const auto& [name, text] : manifest_documents())
        {
            std::ofstream out(snapshot / (name + ".xml"), std::ios::binary);
            out << text;
        }
        auto cycle = root / "cycle";
        std::filesystem::create_directories(cycle);
        for (const auto& [name, text] : cycle_manifest_documents())
        {
            std::ofstream out(cycle / (name + ".xml"), std::ios::binary);
            out << text;
        }
        std::ofstream mapping(root / "mapping.txt", std::ios::binary);
        mapping << mapping_document();
        std::ofstream spec(root / "spec.txt", std::ios::binary);
        spec << spec_file_document();
    }
}

#endif
