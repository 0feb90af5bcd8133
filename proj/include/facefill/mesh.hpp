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

#pragma once

#include <Eigen/Core>
#include <array>
#include <utility>
#include <vector>

namespace facefill {

using VertexBuffer = std::vector<Eigen::Vector3d>;

/// Indexed triangle mesh. Meshes are treated as immutable values: every
/// operation returns a new mesh. `labels` is an optional per-vertex region
/// tag (empty when unused).
struct TriangleMesh {
    VertexBuffer vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> labels;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }
};

/// Structural validation: indices in range, no degenerate face, no duplicate
/// face up to rotation. Throws std::invalid_argument.
void validate_mesh(const TriangleMesh& mesh);

struct WatertightReport {
    bool watertight = false;
    // Offending edges, each reported once as an (a, b) vertex pair with a < b.
    std::vector<std::pair<int, int>> boundary_edges;    // used by exactly 1 face
    std::vector<std::pair<int, int>> nonmanifold_edges; // used by 3+ faces
    std::vector<std::pair<int, int>> misoriented_edges; // 2 faces, same winding
};

/// A mesh is watertight when every undirected edge is shared by exactly two
/// faces whose windings traverse the edge in opposite directions. Closedness
/// is per-edge, so a union of disjoint closed shells is watertight.
WatertightReport check_watertight(const TriangleMesh& mesh);
bool is_watertight(const TriangleMesh& mesh);

/// Keeps only the connected component with the most faces (ties broken by the
/// component containing the lowest original vertex index) and reindexes the
/// surviving vertices densely. Throws on an empty mesh.
TriangleMesh remove_detached_components(const TriangleMesh& mesh);

/// Closes every boundary loop with a centroid vertex and a triangle fan.
/// Requires the boundary to consist of simple closed loops; an edge used by
/// more than two faces or a vertex with two outgoing boundary edges is
/// rejected. A watertight input is returned unchanged.
TriangleMesh fill_holes(const TriangleMesh& mesh);

/// V - E + F over distinct undirected edges.
long euler_characteristic(const TriangleMesh& mesh);

/// Vertex adjacency lists induced by face edges, each sorted ascending.
std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh);

/// Grows a vertex set by `rings` breadth-first layers of neighbors.
/// Returns the union as a sorted index list.
std::vector<int> dilate_vertex_set(const TriangleMesh& mesh,
                                   const std::vector<int>& seed_set, int rings);

Eigen::Vector3d face_normal(const TriangleMesh& mesh, int face);

/// Mean Euclidean distance between corresponding vertices. Requires
/// identical vertex counts and identical face lists.
double mean_geometric_distance(const TriangleMesh& a, const TriangleMesh& b);

/// Per-vertex distance field between two same-topology meshes. The mean of
/// the map equals mean_geometric_distance.
std::vector<double> per_vertex_deviation(const TriangleMesh& a,
                                         const TriangleMesh& b);

struct FillingResult {
    TriangleMesh filling;            // watertight wound sub-mesh (may be empty)
    std::vector<int> labels;         // per-vertex on `reconstructed`: 1 = wound
    std::vector<int> wound_vertices; // extracted region, sorted
    bool empty_wound = false;
};

/// Isolates the reconstructed wound region as a printable sub-mesh. The wound
/// set is every vertex whose deviation exceeds `threshold`, dilated by one
/// ring; the filling is the induced sub-mesh of `reconstructed` with its
/// boundary loops fanned closed.
FillingResult extract_filling(const TriangleMesh& damaged,
                              const TriangleMesh& reconstructed,
                              double threshold);

// Procedural primitives (outward-oriented, watertight).
TriangleMesh make_tetrahedron();
TriangleMesh make_icosphere(int subdivisions);
TriangleMesh make_uv_sphere(int rings, int segments);

} // namespace facefill
