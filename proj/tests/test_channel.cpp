// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#include <chrono>
#include <filesystem>
#include <thread>

#include <catch2/catch_amalgamated.hpp>

#include <minipkg/channel.hpp>
#include <minipkg/errors.hpp>

#include "support/fixtures.hpp"

using namespace minipkg;

namespace
{
    auto temp_dir(const std::string& tag) -> std::filesystem::path
    {
        auto dir = std::filesystem::temp_directory_path() / ("minipkg-channel-" + tag);
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }
}

TEST_CASE("repodata parsing round-trips the authored robostack index")
{
    const auto& set = fixtures::make_fixtures();
    auto text = fixtures::render_repodata(set.robostack, platform::linux_64);
    auto index = parse_repodata(text, "robostack", platform::linux_64);

    REQUIRE(index.channel == "robostack");
    REQUIRE(index.plat == platform::linux_64);
    REQUIRE(index.records.size() == 12);

    const auto& desktop = index.records.at("ros-noetic-desktop-1.5.0-py38_0.tar");
    REQUIRE(desktop.name == "ros-noetic-desktop");
    REQUIRE(desktop.version == "1.5.0");
    REQUIRE(desktop.build == "py38_0");
    REQUIRE(desktop.build_number == 0);
    REQUIRE(desktop.depends
            == std::vector<std::string>{ "ros-noetic-ros-core =1.5", "ros-noetic-rviz",
                                         "ros-noetic-rqt-gui" });
    REQUIRE(desktop.channel == "robostack");
    REQUIRE(desktop.digest.size() == 64);

    SECTION("every record filename equals name-version-build.tar")
    {
        for (const auto& [filename, record] : index.records)
        {
            REQUIRE(filename == expected_filename(record.name, record.version, record.build));
        }
    }
}

TEST_CASE("repodata parsing rejects malformed documents")
{
    SECTION("empty package map is a valid index")
    {
        auto index = parse_repodata(
            R"({"info":{"subdir":"linux-64"},"packages":{}})",
            "c",
            platform::linux_64
        );
        REQUIRE(index.records.empty());
    }
    SECTION("unparseable payload")
    {
        REQUIRE_THROWS_AS(parse_repodata("{", "c", platform::linux_64), malformed_index);
    }
    SECTION("missing info or packages")
    {
        REQUIRE_THROWS_AS(
            parse_repodata(R"({"packages":{}})", "c", platform::linux_64),
            malformed_index
        );
        REQUIRE_THROWS_AS(
            parse_repodata(R"({"info":{"subdir":"linux-64"}})", "c", platform::linux_64),
            malformed_index
        );
    }
    SECTION("subdir must match the requested platform")
    {
        REQUIRE_THROWS_AS(
            parse_repodata(
                R"({"info":{"subdir":"win-64"},"packages":{}})",
                "c",
                platform::linux_64
            ),
            malformed_index
        );
    }
    SECTION("bad depends entry names the offending record")
    {
        auto text = R"({"info":{"subdir":"linux-64"},"packages":{
            "a-1.0-0.tar": {"name":"a","version":"1.0","build":"0","build_number":0,
                            "depends":["pyth on=="],"sha256":"00"}}})";
        try
        {
            parse_repodata(text, "c", platform::linux_64);
            FAIL("expected malformed_index");
        }
        catch (const malformed_index& e)
        {
            REQUIRE(std::string(e.what()).find("a-1.0-0.tar") != std::string::npos);
            REQUIRE(std::string(e.what()).find("pyth on==") != std::string::npos);
        }
    }
    SECTION("filename must match name-version-build")
    {
        auto text = R"({"info":{"subdir":"linux-64"},"packages":{
            "a-1.0-0.tar": {"name":"a","version":"2.0","build":"0","build_number":0,
                            "depends":[],"sha256":"00"}}})";
        REQUIRE_THROWS_AS(parse_repodata(text, "c", platform::linux_64), malformed_index);
    }
}

TEST_CASE("channel loading reads platform and noarch indexes from a tree")
{
    auto root = temp_dir("tree");
    fixtures::write_fixture_tree(root);

    SECTION("platform plus empty noarch")
    {
        auto indexes
            = load_channel((root / "robostack").string(), "robostack", platform::linux_64);
        REQUIRE(indexes.size() == 2);
        REQUIRE(indexes[0].plat == platform::linux_64);
        REQUIRE(indexes[0].records.size() == 12);
        REQUIRE(indexes[1].plat == platform::noarch);
        REQUIRE(indexes[1].records.empty());
    }
    SECTION("noarch carries the channel's portable records")
    {
        auto indexes
            = load_channel((root / "conda-forge").string(), "conda-forge", platform::linux_64);
        REQUIRE(indexes.size() == 2);
        REQUIRE(indexes[1].records.count("tqdm-4.62.0-pyhd3_0.tar") == 1);
        REQUIRE(indexes[1].records.count("catkin-tools-0.7.1-pyhd3_0.tar") == 1);
    }
    SECTION("missing channel directory is unreachable")
    {
        REQUIRE_THROWS_AS(
            load_channel((root / "no-such-channel").string(), "x", platform::linux_64),
            source_unreachable
        );
    }
    std::filesystem::remove_all(root);
}

TEST_CASE("strict channel priority shadows lower-ranked channels entirely")
{
    auto merged = fixtures::merged_linux_index();

    REQUIRE(merged.plat == platform::linux_64);
    REQUIRE(merged.channel_order == std::vector<std::string>{ "robostack", "conda-forge" });

    SECTION("a name present in a higher channel hides all lower candidates")
    {
        const auto& roscpp = merged.candidates_for("ros-noetic-roscpp");
        REQUIRE(roscpp.size() == 2);
        for (const auto& c : roscpp)
        {
            REQUIRE(c.record.channel == "robostack");
            REQUIRE(c.rank == 0);
        }
        REQUIRE(roscpp[0].record.version == "1.15.9");
        REQUIRE(roscpp[1].record.version == "1.15.8");
    }
    SECTION("names only in the lower channel keep their candidates")
    {
        const auto& python = merged.candidates_for("python");
        REQUIRE(python.size() == 2);
        REQUIRE(python[0].record.version == "3.9.1");
        REQUIRE(python[1].record.version == "3.8.8");
        for (const auto& c : python)
        {
            REQUIRE(c.rank == 1);
        }
    }
    SECTION("unknown names have no candidates")
    {
        REQUIRE(merged.candidates_for("no-such-package").empty());
    }
    SECTION("higher versions come first within one name")
    {
        const auto& desktop = merged.candidates_for("ros-noetic-desktop");
        REQUIRE(desktop.size() == 2);
        REQUIRE(desktop[0].record.version == "1.5.0");
        REQUIRE(desktop[1].record.version == "1.4.0");
    }
}

TEST_CASE("noarch candidates participate and lose ties to platform builds")
{
    auto merged = fixtures::merged_linux_index();
    const auto& tqdm = merged.candidates_for("tqdm");
    REQUIRE(tqdm.size() == 2);
    REQUIRE(tqdm[0].record.plat == platform::linux_64);
    REQUIRE(tqdm[0].record.build == "py38h_0");
    REQUIRE(tqdm[1].record.plat == platform::noarch);
    REQUIRE(tqdm[1].record.build == "pyhd3_0");

    SECTION("noarch-only names are available on every platform")
    {
        REQUIRE(merged.candidates_for("catkin-tools").size() == 1);
        auto win = fixtures::merged_win_index();
        REQUIRE(win.candidates_for("catkin-tools").size() == 1);
        REQUIRE(win.candidates_for("tqdm").size() == 1);
        REQUIRE(win.candidates_for("tqdm")[0].record.plat == platform::noarch);
    }
}

TEST_CASE("virtual packages derive from the platform profile")
{
    SECTION("declared glibc yields __glibc")
    {
        auto virtuals = detect_virtual_packages(fixtures::linux_profile());
        REQUIRE(virtuals.size() == 1);
        REQUIRE(virtuals[0].name == "__glibc");
        REQUIRE(virtuals[0].version_text == "2.17");
        REQUIRE(virtuals[0].build == "0");
    }
    SECTION("linux without a declared glibc has no virtual packages")
    {
        platform_profile profile;
        profile.plat = platform::linux_64;
        REQUIRE(detect_virtual_packages(profile).empty());
    }
    SECTION("windows always provides __win")
    {
        auto virtuals = detect_virtual_packages(fixtures::win_profile());
        REQUIRE(virtuals.size() == 1);
        REQUIRE(virtuals[0].name == "__win");
        REQUIRE(virtuals[0].version_text == "0");
    }
    SECTION("declared macos version yields __osx")
    {
        platform_profile profile;
        profile.plat = platform::osx_arm64;
        profile.osx_version = "11.0";
        auto virtuals = detect_virtual_packages(profile);
        REQUIRE(virtuals.size() == 1);
        REQUIRE(virtuals[0].name == "__osx");
        REQUIRE(virtuals[0].version_text == "11.0");
    }
}

TEST_CASE("merged index content digest is deterministic and content-sensitive")
{
    auto a = fixtures::merged_linux_index();
    auto b = fixtures::merged_linux_index();
    REQUIRE(a.content_digest() == b.content_digest());
    REQUIRE(a.content_digest().size() == 64);

    auto tampered = a;
    tampered.by_name["python"].front().record.digest.front()
        = tampered.by_name["python"].front().record.digest.front() == '0' ? '1' : '0';
    REQUIRE(tampered.content_digest() != a.content_digest());

    SECTION("digest differs from the win-64 merge")
    {
        REQUIRE(fixtures::merged_win_index().content_digest() != a.content_digest());
    }
}

TEST_CASE("channels load over http")
{
    auto root = temp_dir("http");
    fixtures::write_fixture_tree(root);

    httplib::Server server;
    REQUIRE(server.set_mount_point("/", root.string()));
    auto port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto base = "http://127.0.0.1:" + std::to_string(port);
    SECTION("served indexes equal the on-disk ones")
    {
        auto indexes = load_channel(base + "/robostack", "robostack", platform::linux_64);
        REQUIRE(indexes.size() == 2);
        REQUIRE(indexes[0].records.size() == 12);
    }
    SECTION("missing remote channel is unreachable")
    {
        REQUIRE_THROWS_AS(
            load_channel(base + "/absent", "absent", platform::linux_64),
            source_unreachable
        );
    }

    server.stop();
    worker.join();
    std::filesystem::remove_all(root);
}

TEST_CASE("connection failures surface as source errors")
{
    // nothing listens on the discard port of localhost
    REQUIRE_THROWS_AS(
        load_channel("http://127.0.0.1:9", "c", platform::linux_64),
        source_unreachable
    );
}
