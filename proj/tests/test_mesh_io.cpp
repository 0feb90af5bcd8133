/* Copyright (c) 2026 The facefill Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "facefill/mesh_io.hpp"
#include "facefill/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace facefill;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "facefill_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("OBJ round-trip preserves vertices and faces exactly") {
    Rng rng(42);
    TriangleMesh mesh = make_icosphere(1);
    for (auto& v : mesh.vertices) {
        v += 0.01 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    }
    const auto path = temp_file("roundtrip.obj");
    export_obj(mesh, path.string());
    const TriangleMesh back = import_obj(path.string());
    REQUIRE(back.vertex_count() == mesh.vertex_count());
    CHECK(back.faces == mesh.faces);
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        // %.17g prints doubles with round-trip precision.
        CHECK(back.vertices[static_cast<size_t>(i)] ==
              mesh.vertices[static_cast<size_t>(i)]);
    }
}

TEST_CASE("tetrahedron STL is exactly 284 bytes with the fixed layout") {
    const auto path = temp_file("tetra.stl");
    export_stl(make_tetrahedron(), path.string());
    const std::string bytes = slurp(path);
    REQUIRE(bytes.size() == 84 + 4 * 50); // 284

    // Triangle count at offset 80, little endian.
    const auto u8 = [&](size_t i) { return static_cast<std::uint32_t>(
        static_cast<unsigned char>(bytes[i])); };
    const std::uint32_t count = u8(80) | (u8(81) << 8) | (u8(82) << 16) | (u8(83) << 24);
    CHECK(count == 4);
    // Attribute byte count of every triangle is zero.
    for (size_t t = 0; t < 4; ++t) {
        const size_t attr = 84 + t * 50 + 48;
        CHECK(u8(attr) == 0);
        CHECK(u8(attr + 1) == 0);
    }
}

TEST_CASE("STL export refuses non-watertight meshes unless forced") {
    TriangleMesh open = make_tetrahedron();
    open.faces.pop_back();
    const auto path = temp_file("open.stl");
    CHECK_THROWS_AS(export_stl(open, path.string()), std::runtime_error);
    export_stl(open, path.string(), /*force=*/true);
    CHECK(slurp(path).size() == 84 + 3 * 50);
}

TEST_CASE("OBJ import rejects 0-based face indices") {
    const auto path = temp_file("zero_index.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
    }
    CHECK_THROWS_WITH_AS(import_obj(path.string()),
                         doctest::Contains("1-based"), std::runtime_error);
}

TEST_CASE("OBJ import reports the offending line number") {
    const auto path = temp_file("malformed.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 nope\n";
    }
    CHECK_THROWS_WITH_AS(import_obj(path.string()), doctest::Contains(":4:"),
                         std::runtime_error);

    const auto path2 = temp_file("badvertex.obj");
    {
        std::ofstream out(path2);
        out << "v 0 0\n";
    }
    CHECK_THROWS_WITH_AS(import_obj(path2.string()), doctest::Contains(":1:"),
                         std::runtime_error);
}

TEST_CASE("OBJ import accepts slash-form face tokens and negative indices") {
    const auto path = temp_file("slashes.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\nf -3 -2 -1\n";
    }
    const TriangleMesh mesh = import_obj(path.string());
    CHECK(mesh.face_count() == 2);
    CHECK(mesh.faces[0] == mesh.faces[1]);
}

TEST_CASE("deviation CSV has the documented header and row format") {
    const auto path = temp_file("deviation.csv");
    export_deviation_csv({0.0, 0.125, 2.5}, path.string());
    const std::string text = slurp(path);
    CHECK(text ==
          "vertex_index,deviation\n0,0.000000\n1,0.125000\n2,2.500000\n");
}

TEST_CASE("colored OBJ exports keep geometry importable") {
    const TriangleMesh mesh = make_tetrahedron();
    const auto dev_path = temp_file("colored.obj");
    export_deviation_obj(mesh, {0.0, 0.5, 1.0, 0.25}, dev_path.string());
    const TriangleMesh back = import_obj(dev_path.string());
    CHECK(back.vertex_count() == mesh.vertex_count());
    CHECK(back.faces == mesh.faces);

    const auto label_path = temp_file("labeled.obj");
    export_labeled_obj(mesh, {0, 1, 1, 0}, label_path.string());
    const std::string text = slurp(label_path);
    CHECK(text.find("0.9") != std::string::npos); // wound color present
    const TriangleMesh back2 = import_obj(label_path.string());
    CHECK(back2.faces == mesh.faces);
}
