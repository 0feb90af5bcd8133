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

#include "facefill/mesh.hpp"
#include "facefill/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace facefill;

namespace {

// Independent oracle: count faces per undirected edge with a plain loop.
std::map<std::pair<int, int>, int> brute_force_edge_counts(const TriangleMesh& m) {
    std::map<std::pair<int, int>, int> counts;
    for (const auto& f : m.faces) {
        const int pairs[3][2] = {{f[0], f[1]}, {f[1], f[2]}, {f[2], f[0]}};
        for (const auto& p : pairs) {
            counts[{std::min(p[0], p[1]), std::max(p[0], p[1])}] += 1;
        }
    }
    return counts;
}

double signed_volume(const TriangleMesh& m) {
    double vol = 0.0;
    for (const auto& f : m.faces) {
        const auto& a = m.vertices[static_cast<size_t>(f[0])];
        const auto& b = m.vertices[static_cast<size_t>(f[1])];
        const auto& c = m.vertices[static_cast<size_t>(f[2])];
        vol += a.dot(b.cross(c)) / 6.0;
    }
    return vol;
}

TriangleMesh translated(TriangleMesh m, const Eigen::Vector3d& d) {
    for (auto& v : m.vertices) v += d;
    return m;
}

// Concatenates two meshes into one (disjoint components).
TriangleMesh merged(const TriangleMesh& a, const TriangleMesh& b) {
    TriangleMesh out = a;
    const int off = a.vertex_count();
    out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (const auto& f : b.faces) {
        out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    }
    return out;
}

// Picks up to `count` faces sharing no vertices, so punched holes stay simple.
std::vector<int> independent_faces(const TriangleMesh& m, int count, Rng& rng) {
    std::vector<int> chosen;
    std::set<int> used_vertices;
    int attempts = 0;
    while (static_cast<int>(chosen.size()) < count && attempts < 1000) {
        ++attempts;
        const int f = static_cast<int>(rng.uniform_index(
            static_cast<std::uint64_t>(m.face_count())));
        const auto& face = m.faces[static_cast<size_t>(f)];
        if (used_vertices.count(face[0]) || used_vertices.count(face[1]) ||
            used_vertices.count(face[2])) {
            continue;
        }
        chosen.push_back(f);
        for (int v : face) used_vertices.insert(v);
    }
    return chosen;
}

TriangleMesh drop_faces(const TriangleMesh& m, const std::vector<int>& faces) {
    TriangleMesh out = m;
    std::set<int> dropped(faces.begin(), faces.end());
    out.faces.clear();
    for (int i = 0; i < m.face_count(); ++i) {
        if (!dropped.count(i)) out.faces.push_back(m.faces[static_cast<size_t>(i)]);
    }
    return out;
}

} // namespace

TEST_CASE("closed tetrahedron is watertight") {
    const TriangleMesh tetra = make_tetrahedron();
    CHECK(is_watertight(tetra));
    CHECK(euler_characteristic(tetra) == 2);
    CHECK(signed_volume(tetra) > 0.0);
}

TEST_CASE("tetrahedron minus one face reports 3 boundary edges") {
    TriangleMesh open = make_tetrahedron();
    open.faces.pop_back();
    const WatertightReport report = check_watertight(open);
    CHECK_FALSE(report.watertight);
    CHECK(report.boundary_edges.size() == 3);
    CHECK(report.nonmanifold_edges.empty());
    CHECK(report.misoriented_edges.empty());
}

TEST_CASE("two disjoint closed tetrahedra are watertight (cross-checked)") {
    const TriangleMesh pair = merged(
        make_tetrahedron(), translated(make_tetrahedron(), {5.0, 0.0, 0.0}));
    CHECK(is_watertight(pair));
    for (const auto& [edge, count] : brute_force_edge_counts(pair)) {
        (void)edge;
        CHECK(count == 2);
    }
}

TEST_CASE("generated spheres are watertight, outward, genus 0") {
    for (const TriangleMesh& m :
         {make_icosphere(0), make_icosphere(2), make_uv_sphere(1, 3),
          make_uv_sphere(4, 9), make_uv_sphere(20, 32)}) {
        CHECK(is_watertight(m));
        CHECK(euler_characteristic(m) == 2);
        CHECK(signed_volume(m) > 0.0);
    }
    CHECK(make_icosphere(3).vertex_count() == 642);
}

TEST_CASE("remove_detached_components keeps the big shell") {
    // Head shell plus two small "eyeball" spheres.
    const TriangleMesh shell = make_icosphere(2);
    const TriangleMesh eye = make_icosphere(0);
    TriangleMesh scene = merged(shell, translated(eye, {0.3, 0.2, 0.8}));
    scene = merged(scene, translated(eye, {-0.3, 0.2, 0.8}));
    const TriangleMesh cleaned = remove_detached_components(scene);
    CHECK(cleaned.vertex_count() == shell.vertex_count());
    CHECK(cleaned.face_count() == shell.face_count());
    CHECK(is_watertight(cleaned));
    // Components counted: the survivor must be connected.
    const TriangleMesh again = remove_detached_components(cleaned);
    CHECK(again.face_count() == cleaned.face_count());
}

TEST_CASE("remove_detached_components leaves a single component unchanged") {
    const TriangleMesh sphere = make_icosphere(1);
    const TriangleMesh out = remove_detached_components(sphere);
    CHECK(out.vertex_count() == sphere.vertex_count());
    CHECK(out.faces == sphere.faces);
    for (int i = 0; i < out.vertex_count(); ++i) {
        CHECK(out.vertices[static_cast<size_t>(i)] ==
              sphere.vertices[static_cast<size_t>(i)]);
    }
}

TEST_CASE("remove_detached_components breaks ties toward vertex 0") {
    const TriangleMesh a = make_tetrahedron();
    const TriangleMesh b = translated(make_tetrahedron(), {10.0, 0.0, 0.0});
    const TriangleMesh both = merged(a, b);
    const TriangleMesh kept = remove_detached_components(both);
    CHECK(kept.vertex_count() == 4);
    CHECK(kept.vertices[0] == a.vertices[0]);
}

TEST_CASE("remove_detached_components rejects an empty mesh") {
    CHECK_THROWS_AS(remove_detached_components(TriangleMesh{}), std::invalid_argument);
}

TEST_CASE("fill_holes closes a tetrahedron missing one face with a 3-fan") {
    TriangleMesh open = make_tetrahedron();
    open.faces.pop_back();
    const TriangleMesh filled = fill_holes(open);
    CHECK(filled.vertex_count() == 5);
    CHECK(filled.face_count() == 6);
    CHECK(is_watertight(filled));
    CHECK(euler_characteristic(filled) == 2);
}

TEST_CASE("fill_holes restores watertightness on a doubly punched sphere") {
    const TriangleMesh sphere = make_icosphere(2);
    Rng rng(7);
    const auto victims = independent_faces(sphere, 2, rng);
    REQUIRE(victims.size() == 2);
    const TriangleMesh punched = drop_faces(sphere, victims);
    CHECK_FALSE(is_watertight(punched));
    const TriangleMesh filled = fill_holes(punched);
    CHECK(is_watertight(filled));
    CHECK(euler_characteristic(filled) == 2);
    // V - E + F bookkeeping: each hole gains 1 vertex, 3 edges, 3 faces.
    CHECK(filled.vertex_count() == sphere.vertex_count() + 2);
    CHECK(filled.face_count() == punched.face_count() + 6);
}

TEST_CASE("fill_holes is a no-op on watertight input") {
    const TriangleMesh sphere = make_uv_sphere(3, 8);
    const TriangleMesh out = fill_holes(sphere);
    CHECK(out.vertex_count() == sphere.vertex_count());
    CHECK(out.faces == sphere.faces);
}

TEST_CASE("fill_holes never removes faces (random punchings)") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const TriangleMesh sphere = make_icosphere(1);
        const int holes = 1 + static_cast<int>(rng.uniform_index(3));
        const auto victims = independent_faces(sphere, holes, rng);
        const TriangleMesh punched = drop_faces(sphere, victims);
        const TriangleMesh filled = fill_holes(punched);
        CHECK(filled.face_count() >= punched.face_count());
        CHECK(is_watertight(filled));
        // Original faces survive verbatim.
        for (const auto& f : punched.faces) {
            CHECK(std::find(filled.faces.begin(), filled.faces.end(), f) !=
                  filled.faces.end());
        }
    }
}

TEST_CASE("fill_holes rejects an edge used by more than two faces") {
    TriangleMesh bad = make_tetrahedron();
    bad.vertices.emplace_back(0.0, 0.0, 2.0);
    bad.faces.push_back({0, 1, 4}); // edge (0,1) now borders 3 faces
    CHECK_THROWS_AS(fill_holes(bad), std::invalid_argument);
}

TEST_CASE("validate_mesh rejects malformed meshes") {
    TriangleMesh out_of_range = make_tetrahedron();
    out_of_range.faces.push_back({0, 1, 9});
    CHECK_THROWS_AS(validate_mesh(out_of_range), std::invalid_argument);

    TriangleMesh repeated = make_tetrahedron();
    repeated.faces.push_back({0, 0, 1});
    CHECK_THROWS_AS(validate_mesh(repeated), std::invalid_argument);

    TriangleMesh duplicate = make_tetrahedron();
    duplicate.faces.push_back({1, 2, 0}); // rotation of face 0
    CHECK_THROWS_AS(validate_mesh(duplicate), std::invalid_argument);
}

TEST_CASE("mean_geometric_distance basics") {
    const TriangleMesh a = make_icosphere(1);
    CHECK(mean_geometric_distance(a, a) == 0.0);
    const TriangleMesh b = translated(a, {1.0, 0.0, 0.0});
    CHECK(mean_geometric_distance(a, b) == doctest::Approx(1.0).epsilon(1e-12));

    TriangleMesh other_topology = a;
    std::swap(other_topology.faces[0], other_topology.faces[1]);
    CHECK_THROWS_AS(mean_geometric_distance(a, other_topology), std::invalid_argument);
}

TEST_CASE("mean_geometric_distance behaves like a metric on random meshes") {
    Rng rng(1234);
    const TriangleMesh base = make_icosphere(1);
    auto jitter = [&]() {
        TriangleMesh m = base;
        for (auto& v : m.vertices) {
            v += 0.2 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        }
        return m;
    };
    for (int trial = 0; trial < 25; ++trial) {
        const TriangleMesh x = jitter(), y = jitter(), z = jitter();
        const double xy = mean_geometric_distance(x, y);
        const double yx = mean_geometric_distance(y, x);
        const double xz = mean_geometric_distance(x, z);
        const double zy = mean_geometric_distance(z, y);
        CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
        CHECK(xy >= 0.0);
        CHECK(xy <= xz + zy + 1e-12);
        CHECK(mean_geometric_distance(x, x) == 0.0);
    }
}

TEST_CASE("per_vertex_deviation matches the metric and localizes edits") {
    const TriangleMesh a = make_icosphere(1);
    CHECK(per_vertex_deviation(a, a) == std::vector<double>(
        static_cast<size_t>(a.vertex_count()), 0.0));

    TriangleMesh moved = a;
    moved.vertices[7] += Eigen::Vector3d(0.0, 0.0, 0.5);
    const auto dev = per_vertex_deviation(a, moved);
    int nonzero = 0;
    for (double d : dev) nonzero += d > 0.0 ? 1 : 0;
    CHECK(nonzero == 1);
    CHECK(dev[7] == doctest::Approx(0.5).epsilon(1e-12));

    Rng rng(5);
    TriangleMesh b = a;
    for (auto& v : b.vertices) {
        v += 0.1 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    }
    const auto map = per_vertex_deviation(a, b);
    double mean = 0.0;
    for (double d : map) mean += d;
    mean /= static_cast<double>(map.size());
    CHECK(mean == doctest::Approx(mean_geometric_distance(a, b)).epsilon(1e-12));
}

TEST_CASE("dilate_vertex_set grows by rings") {
    const TriangleMesh tetra = make_tetrahedron();
    const auto grown = dilate_vertex_set(tetra, {0}, 1);
    CHECK(grown == std::vector<int>{0, 1, 2, 3});
    const auto same = dilate_vertex_set(tetra, {0}, 0);
    CHECK(same == std::vector<int>{0});
}

TEST_CASE("extract_filling returns empty for identical meshes") {
    const TriangleMesh sphere = make_icosphere(1);
    const FillingResult result = extract_filling(sphere, sphere, 0.01);
    CHECK(result.empty_wound);
    CHECK(result.filling.vertex_count() == 0);
    CHECK(std::count(result.labels.begin(), result.labels.end(), 1) == 0);
}

TEST_CASE("extract_filling rejects non-positive thresholds") {
    const TriangleMesh sphere = make_icosphere(1);
    CHECK_THROWS_AS(extract_filling(sphere, sphere, 0.0), std::invalid_argument);
}

TEST_CASE("extract_filling isolates a crater and caps it watertight") {
    const TriangleMesh sphere = make_icosphere(2);
    // Push a 2-ring disk around vertex 17 inward.
    const std::vector<int> wound = dilate_vertex_set(sphere, {17}, 2);
    TriangleMesh damaged = sphere;
    for (int v : wound) {
        damaged.vertices[static_cast<size_t>(v)] *= 0.8;
    }
    const FillingResult result = extract_filling(damaged, sphere, 1e-6);
    CHECK_FALSE(result.empty_wound);
    CHECK(is_watertight(result.filling));

    // Extracted region covers the wound and stays within 2 extra rings.
    std::set<int> extracted(result.wound_vertices.begin(), result.wound_vertices.end());
    for (int v : wound) CHECK(extracted.count(v) == 1);
    const std::vector<int> outer = dilate_vertex_set(sphere, wound, 2);
    const std::set<int> allowed(outer.begin(), outer.end());
    for (int v : extracted) CHECK(allowed.count(v) == 1);

    // Labels mark exactly the extracted vertices on the reconstruction.
    for (size_t i = 0; i < result.labels.size(); ++i) {
        CHECK(result.labels[i] == (extracted.count(static_cast<int>(i)) ? 1 : 0));
    }
}
