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

#include "facefill/mesh.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace facefill {

/// Linear geometry model: vertices = basis * code + mean_shape.
/// mean_shape is vertex-major (x0, y0, z0, x1, ...), basis is 3N x d.
struct MorphableBasis {
    Eigen::VectorXd mean_shape;
    Eigen::MatrixXd basis;

    int n_vertices() const { return static_cast<int>(mean_shape.size()) / 3; }
    int latent_dim() const { return static_cast<int>(basis.cols()); }
};

/// Throws std::invalid_argument unless shapes are consistent, entries are
/// finite, N >= 4 and d >= 1.
void validate_basis(const MorphableBasis& basis);

/// Identity code consumed by the decoder.
struct LatentCode {
    Eigen::VectorXd values;
};

/// Evaluates the linear decoder: basis * code + mean_shape, reshaped to
/// N points. The zero code reproduces the mean shape bitwise.
VertexBuffer decode(const MorphableBasis& basis, const LatentCode& code);

/// Deterministic closed base head: a deformed sphere with exactly
/// `n_vertices` vertices. Uses an icosphere when the count is in the
/// icosphere family, otherwise the best-factored UV sphere.
TriangleMesh base_head_mesh(int n_vertices);

/// Synthetic morphable basis over the base head: the mean shape is the base
/// head, and each column is a smooth low-frequency radial displacement field
/// with column norm equal to `amplitude`. Deterministic given seed.
MorphableBasis synth_basis(std::uint64_t seed, int n_vertices, int latent_dim,
                           double amplitude);

/// Basis plus the face topology its decoded vertex buffers are paired with.
struct HeadModel {
    MorphableBasis basis;
    std::vector<std::array<int, 3>> faces;
};

HeadModel synth_head_model(std::uint64_t seed, int n_vertices, int latent_dim,
                           double amplitude);

TriangleMesh decode_mesh(const MorphableBasis& basis,
                         const std::vector<std::array<int, 3>>& faces,
                         const LatentCode& code);

// Single-file binary serialization: "MBAS", version, N, d as little-endian
// u32, then mean_shape and basis as little-endian f64, basis in row-major
// order.
void save_basis(const MorphableBasis& basis, const std::string& path);
MorphableBasis load_basis(const std::string& path);

} // namespace facefill
