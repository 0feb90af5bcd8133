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

#include "facefill/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace facefill {

namespace {

std::uint64_t edge_key(int a, int b) {
    const std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
    const std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
    return (hi << 32) | lo;
}

std::pair<int, int> key_to_pair(std::uint64_t key) {
    return {static_cast<int>(key & 0xffffffffULL), static_cast<int>(key >> 32)};
}

struct EdgeUse {
    int forward = 0;  // traversed as (min, max)
    int backward = 0; // traversed as (max, min)
    int first_from = -1, first_to = -1; // direction of the first occurrence
};

std::unordered_map<std::uint64_t, EdgeUse> collect_edge_uses(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, EdgeUse> uses;
    uses.reserve(mesh.faces.size() * 3);
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<size_t>(e)];
            const int b = f[static_cast<size_t>((e + 1) % 3)];
            EdgeUse& u = uses[edge_key(a, b)];
            if (a < b) {
                ++u.forward;
            } else {
                ++u.backward;
            }
            if (u.first_from < 0) {
                u.first_from = a;
                u.first_to = b;
            }
        }
    }
    return uses;
}

// Union-find over vertex indices.
class DisjointSet {
public:
    explicit DisjointSet(int n) : parent_(static_cast<size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<size_t>(x)] != x) {
            parent_[static_cast<size_t>(x)] = parent_[static_cast<size_t>(parent_[static_cast<size_t>(x)])];
            x = parent_[static_cast<size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

TriangleMesh submesh_by_faces(const TriangleMesh& mesh,
                              const std::vector<int>& face_indices) {
    TriangleMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (int fi : face_indices) {
        for (int v : mesh.faces[static_cast<size_t>(fi)]) {
            if (remap[static_cast<size_t>(v)] < 0) remap[static_cast<size_t>(v)] = 0;
        }
    }
    int next = 0;
    for (size_t v = 0; v < remap.size(); ++v) {
        if (remap[v] == 0) {
            remap[v] = next++;
            out.vertices.push_back(mesh.vertices[v]);
            if (!mesh.labels.empty()) out.labels.push_back(mesh.labels[v]);
        } else {
            remap[v] = -1;
        }
    }
    out.faces.reserve(face_indices.size());
    for (int fi : face_indices) {
        const auto& f = mesh.faces[static_cast<size_t>(fi)];
        out.faces.push_back({remap[static_cast<size_t>(f[0])],
                             remap[static_cast<size_t>(f[1])],
                             remap[static_cast<size_t>(f[2])]});
    }
    return out;
}

} // namespace

void validate_mesh(const TriangleMesh& mesh) {
    const int n = mesh.vertex_count();
    for (const auto& v : mesh.vertices) {
        if (!v.allFinite()) throw std::invalid_argument("mesh has non-finite vertex");
    }
    if (!mesh.labels.empty() && static_cast<int>(mesh.labels.size()) != n) {
        throw std::invalid_argument("label count does not match vertex count");
    }
    std::set<std::array<int, 3>> canonical;
    for (const auto& f : mesh.faces) {
        for (int v : f) {
            if (v < 0 || v >= n) {
                throw std::invalid_argument("face index out of range: " + std::to_string(v));
            }
        }
        if (f[0] == f[1] || f[1] == f[2] || f[2] == f[0]) {
            throw std::invalid_argument("face repeats a vertex");
        }
        // Canonical rotation: smallest index first, winding preserved.
        std::array<int, 3> c = f;
        while (c[0] != *std::min_element(c.begin(), c.end())) {
            std::rotate(c.begin(), c.begin() + 1, c.end());
        }
        if (!canonical.insert(c).second) {
            throw std::invalid_argument("duplicate face (up to rotation)");
        }
    }
}

WatertightReport check_watertight(const TriangleMesh& mesh) {
    WatertightReport report;
    const auto uses = collect_edge_uses(mesh);
    for (const auto& [key, u] : uses) {
        const int total = u.forward + u.backward;
        if (total == 1) {
            report.boundary_edges.push_back(key_to_pair(key));
        } else if (total > 2) {
            report.nonmanifold_edges.push_back(key_to_pair(key));
        } else if (u.forward != 1) { // total == 2 but both faces wind the same way
            report.misoriented_edges.push_back(key_to_pair(key));
        }
    }
    std::sort(report.boundary_edges.begin(), report.boundary_edges.end());
    std::sort(report.nonmanifold_edges.begin(), report.nonmanifold_edges.end());
    std::sort(report.misoriented_edges.begin(), report.misoriented_edges.end());
    report.watertight = !mesh.faces.empty() && report.boundary_edges.empty() &&
                        report.nonmanifold_edges.empty() &&
                        report.misoriented_edges.empty();
    return report;
}

bool is_watertight(const TriangleMesh& mesh) {
    return check_watertight(mesh).watertight;
}

TriangleMesh remove_detached_components(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    if (mesh.faces.empty()) {
        throw std::invalid_argument("remove_detached_components: mesh has no faces");
    }
    DisjointSet ds(mesh.vertex_count());
    for (const auto& f : mesh.faces) {
        ds.unite(f[0], f[1]);
        ds.unite(f[1], f[2]);
    }
    // Component id = union-find root = lowest vertex index in the component,
    // which makes the tie-break "lowest original minimum vertex index" free.
    std::map<int, std::vector<int>> faces_by_root;
    for (size_t i = 0; i < mesh.faces.size(); ++i) {
        faces_by_root[ds.find(mesh.faces[i][0])].push_back(static_cast<int>(i));
    }
    const auto* best = &*faces_by_root.begin();
    for (const auto& entry : faces_by_root) {
        if (entry.second.size() > best->second.size()) best = &entry;
    }
    return submesh_by_faces(mesh, best->second);
}

TriangleMesh fill_holes(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    const auto uses = collect_edge_uses(mesh);

    // Boundary directed edges, keyed by source vertex.
    std::unordered_map<int, int> next_on_boundary;
    size_t boundary_count = 0;
    for (const auto& [key, u] : uses) {
        const int total = u.forward + u.backward;
        if (total > 2) {
            const auto [a, b] = key_to_pair(key);
            throw std::invalid_argument("fill_holes: edge (" + std::to_string(a) +
                                        ", " + std::to_string(b) +
                                        ") is used by more than two faces");
        }
        if (total == 1) {
            if (next_on_boundary.count(u.first_from) != 0) {
                throw std::invalid_argument(
                    "fill_holes: boundary is not a set of simple loops at vertex " +
                    std::to_string(u.first_from));
            }
            next_on_boundary[u.first_from] = u.first_to;
            ++boundary_count;
        }
    }
    if (boundary_count == 0) return mesh;

    TriangleMesh out = mesh;
    // Deterministic loop order: start each walk at its smallest source vertex.
    std::map<int, int> pending(next_on_boundary.begin(), next_on_boundary.end());
    while (!pending.empty()) {
        const int start = pending.begin()->first;
        std::vector<int> loop;
        int cur = start;
        do {
            const auto it = pending.find(cur);
            if (it == pending.end()) {
                throw std::invalid_argument(
                    "fill_holes: boundary loop does not close at vertex " +
                    std::to_string(cur));
            }
            loop.push_back(cur);
            const int nxt = it->second;
            pending.erase(it);
            cur = nxt;
        } while (cur != start);

        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int v : loop) centroid += out.vertices[static_cast<size_t>(v)];
        centroid /= static_cast<double>(loop.size());
        const int c = out.vertex_count();
        out.vertices.push_back(centroid);
        if (!out.labels.empty()) out.labels.push_back(out.labels[static_cast<size_t>(loop[0])]);
        // Existing faces traverse (a, b); the cap must traverse (b, a).
        for (size_t i = 0; i < loop.size(); ++i) {
            const int a = loop[i];
            const int b = loop[(i + 1) % loop.size()];
            out.faces.push_back({b, a, c});
        }
    }
    return out;
}

long euler_characteristic(const TriangleMesh& mesh) {
    const auto uses = collect_edge_uses(mesh);
    return static_cast<long>(mesh.vertices.size()) -
           static_cast<long>(uses.size()) + static_cast<long>(mesh.faces.size());
}

std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh) {
    std::vector<std::set<int>> adj(mesh.vertices.size());
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<size_t>(e)];
            const int b = f[static_cast<size_t>((e + 1) % 3)];
            adj[static_cast<size_t>(a)].insert(b);
            adj[static_cast<size_t>(b)].insert(a);
        }
    }
    std::vector<std::vector<int>> out(adj.size());
    for (size_t i = 0; i < adj.size(); ++i) {
        out[i].assign(adj[i].begin(), adj[i].end());
    }
    return out;
}

std::vector<int> dilate_vertex_set(const TriangleMesh& mesh,
                                   const std::vector<int>& seed_set, int rings) {
    const auto adj = vertex_adjacency(mesh);
    std::vector<char> in_set(mesh.vertices.size(), 0);
    std::vector<int> frontier;
    for (int v : seed_set) {
        if (v < 0 || v >= mesh.vertex_count()) {
            throw std::invalid_argument("dilate_vertex_set: index out of range");
        }
        if (!in_set[static_cast<size_t>(v)]) {
            in_set[static_cast<size_t>(v)] = 1;
            frontier.push_back(v);
        }
    }
    for (int r = 0; r < rings; ++r) {
        std::vector<int> next;
        for (int v : frontier) {
            for (int nb : adj[static_cast<size_t>(v)]) {
                if (!in_set[static_cast<size_t>(nb)]) {
                    in_set[static_cast<size_t>(nb)] = 1;
                    next.push_back(nb);
                }
            }
        }
        frontier = std::move(next);
    }
    std::vector<int> out;
    for (size_t v = 0; v < in_set.size(); ++v) {
        if (in_set[v]) out.push_back(static_cast<int>(v));
    }
    return out;
}

Eigen::Vector3d face_normal(const TriangleMesh& mesh, int face) {
    const auto& f = mesh.faces[static_cast<size_t>(face)];
    const Eigen::Vector3d a = mesh.vertices[static_cast<size_t>(f[1])] -
                              mesh.vertices[static_cast<size_t>(f[0])];
    const Eigen::Vector3d b = mesh.vertices[static_cast<size_t>(f[2])] -
                              mesh.vertices[static_cast<size_t>(f[0])];
    const Eigen::Vector3d n = a.cross(b);
    const double len = n.norm();
    return len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

namespace {

void require_same_topology(const TriangleMesh& a, const TriangleMesh& b,
                           const char* op) {
    if (a.vertex_count() != b.vertex_count() || a.faces != b.faces) {
        throw std::invalid_argument(std::string(op) +
                                    ": meshes do not share topology");
    }
}

} // namespace

double mean_geometric_distance(const TriangleMesh& a, const TriangleMesh& b) {
    require_same_topology(a, b, "mean_geometric_distance");
    if (a.vertices.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < a.vertices.size(); ++i) {
        sum += (a.vertices[i] - b.vertices[i]).norm();
    }
    return sum / static_cast<double>(a.vertices.size());
}

std::vector<double> per_vertex_deviation(const TriangleMesh& a,
                                         const TriangleMesh& b) {
    require_same_topology(a, b, "per_vertex_deviation");
    std::vector<double> dev(a.vertices.size());
    for (size_t i = 0; i < a.vertices.size(); ++i) {
        dev[i] = (a.vertices[i] - b.vertices[i]).norm();
    }
    return dev;
}

FillingResult extract_filling(const TriangleMesh& damaged,
                              const TriangleMesh& reconstructed,
                              double threshold) {
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("extract_filling: threshold must be positive");
    }
    const auto dev = per_vertex_deviation(damaged, reconstructed);

    FillingResult result;
    result.labels.assign(reconstructed.vertices.size(), 0);

    std::vector<int> wound;
    for (size_t i = 0; i < dev.size(); ++i) {
        if (dev[i] > threshold) wound.push_back(static_cast<int>(i));
    }
    if (wound.empty()) {
        result.empty_wound = true;
        return result;
    }
    result.wound_vertices = dilate_vertex_set(reconstructed, wound, 1);
    for (int v : result.wound_vertices) result.labels[static_cast<size_t>(v)] = 1;

    std::vector<char> in_region(reconstructed.vertices.size(), 0);
    for (int v : result.wound_vertices) in_region[static_cast<size_t>(v)] = 1;
    std::vector<int> region_faces;
    for (size_t i = 0; i < reconstructed.faces.size(); ++i) {
        const auto& f = reconstructed.faces[i];
        if (in_region[static_cast<size_t>(f[0])] && in_region[static_cast<size_t>(f[1])] &&
            in_region[static_cast<size_t>(f[2])]) {
            region_faces.push_back(static_cast<int>(i));
        }
    }
    if (region_faces.empty()) {
        result.empty_wound = true;
        return result;
    }
    TriangleMesh piece = submesh_by_faces(reconstructed, region_faces);
    piece.labels.assign(piece.vertices.size(), 1);
    result.filling = fill_holes(piece);
    return result;
}

TriangleMesh make_tetrahedron() {
    TriangleMesh mesh;
    const double s = 1.0 / std::sqrt(3.0);
    mesh.vertices = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
    mesh.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    return mesh;
}

TriangleMesh make_icosphere(int subdivisions) {
    if (subdivisions < 0) throw std::invalid_argument("subdivisions must be >= 0");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                     {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                     {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : mesh.vertices) v.normalize();
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::uint64_t, int> midpoints;
        auto midpoint = [&](int a, int b) {
            const auto key = edge_key(a, b);
            const auto it = midpoints.find(key);
            if (it != midpoints.end()) return it->second;
            Eigen::Vector3d m = (mesh.vertices[static_cast<size_t>(a)] +
                                 mesh.vertices[static_cast<size_t>(b)]) /
                                2.0;
            m.normalize();
            const int idx = mesh.vertex_count();
            mesh.vertices.push_back(m);
            midpoints[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> faces;
        faces.reserve(mesh.faces.size() * 4);
        for (const auto& f : mesh.faces) {
            const int ab = midpoint(f[0], f[1]);
            const int bc = midpoint(f[1], f[2]);
            const int ca = midpoint(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
    }
    return mesh;
}

TriangleMesh make_uv_sphere(int rings, int segments) {
    if (rings < 1 || segments < 3) {
        throw std::invalid_argument("uv sphere needs rings >= 1, segments >= 3");
    }
    TriangleMesh mesh;
    const double pi = 3.14159265358979323846;
    mesh.vertices.emplace_back(0.0, 1.0, 0.0); // top pole
    for (int i = 1; i <= rings; ++i) {
        const double theta = pi * static_cast<double>(i) / (rings + 1);
        for (int j = 0; j < segments; ++j) {
            const double phi = 2.0 * pi * static_cast<double>(j) / segments;
            mesh.vertices.emplace_back(std::sin(theta) * std::cos(phi),
                                       std::cos(theta),
                                       std::sin(theta) * std::sin(phi));
        }
    }
    mesh.vertices.emplace_back(0.0, -1.0, 0.0); // bottom pole
    const int bottom = mesh.vertex_count() - 1;
    auto ring_vertex = [&](int i, int j) { return 1 + i * segments + (j % segments); };

    for (int j = 0; j < segments; ++j) {
        mesh.faces.push_back({0, ring_vertex(0, j + 1), ring_vertex(0, j)});
    }
    for (int i = 0; i + 1 < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            const int a = ring_vertex(i, j);
            const int b = ring_vertex(i, j + 1);
            const int c = ring_vertex(i + 1, j);
            const int d = ring_vertex(i + 1, j + 1);
            mesh.faces.push_back({a, d, c});
            mesh.faces.push_back({a, b, d});
        }
    }
    for (int j = 0; j < segments; ++j) {
        mesh.faces.push_back({bottom, ring_vertex(rings - 1, j), ring_vertex(rings - 1, j + 1)});
    }
    return mesh;
}

} // namespace facefill
