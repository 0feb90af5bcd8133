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

#include "facefill/morphable.hpp"

#include "facefill/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace facefill {

namespace {

constexpr std::uint32_t kBasisVersion = 1;

// Unit sphere with exactly n vertices: tetrahedron for 4, icosphere when the
// count is in the 10 * 4^k + 2 family, otherwise the best-factored UV sphere
// (a bipyramid covers prime n - 2).
TriangleMesh unit_sphere_mesh(int n_vertices) {
    if (n_vertices < 4) throw std::invalid_argument("sphere needs >= 4 vertices");
    if (n_vertices == 4) return make_tetrahedron();
    for (int level = 0, v = 12; v <= n_vertices; ++level, v = 10 * (1 << (2 * level)) + 2) {
        if (v == n_vertices) return make_icosphere(level);
    }
    const int m = n_vertices - 2;
    int best_r = 1, best_s = m;
    long best_score = std::labs(static_cast<long>(m) - 2L);
    for (int r = 2; r * 3 <= m; ++r) {
        if (m % r != 0) continue;
        const int s = m / r;
        if (s < 3) break;
        const long score = std::labs(static_cast<long>(s) - 2L * r);
        if (score < best_score) {
            best_score = score;
            best_r = r;
            best_s = s;
        }
    }
    return make_uv_sphere(best_r, best_s);
}

// Head-like deformation of a unit-sphere direction: ellipsoidal proportions
// plus a gentle radial bump where the nose sits (+z is "forward", +y "up").
Eigen::Vector3d head_deform(const Eigen::Vector3d& u) {
    const Eigen::Vector3d scaled(0.78 * u.x(), 1.05 * u.y(), 0.85 * u.z());
    const Eigen::Vector3d nose = Eigen::Vector3d(0.0, -0.1, 1.0).normalized();
    const double bump = 0.12 * std::exp(-(u - nose).squaredNorm() / 0.06);
    return scaled + bump * u;
}

} // namespace

void validate_basis(const MorphableBasis& basis) {
    const int n3 = static_cast<int>(basis.mean_shape.size());
    if (n3 % 3 != 0 || n3 / 3 < 4) {
        throw std::invalid_argument("basis mean shape must cover at least 4 vertices");
    }
    if (basis.basis.rows() != n3 || basis.basis.cols() < 1) {
        throw std::invalid_argument("basis matrix must be 3N x d with d >= 1");
    }
    if (!basis.mean_shape.allFinite() || !basis.basis.allFinite()) {
        throw std::invalid_argument("basis entries must be finite");
    }
}

VertexBuffer decode(const MorphableBasis& basis, const LatentCode& code) {
    if (code.values.size() != basis.basis.cols()) {
        throw std::invalid_argument(
            "decode: code length " + std::to_string(code.values.size()) +
            " does not match latent dimension " + std::to_string(basis.basis.cols()));
    }
    if (!code.values.allFinite()) {
        throw std::invalid_argument("decode: code entries must be finite");
    }
    const Eigen::VectorXd flat = basis.basis * code.values + basis.mean_shape;
    VertexBuffer out(static_cast<size_t>(basis.n_vertices()));
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = flat.segment<3>(static_cast<Eigen::Index>(3 * i));
    }
    return out;
}

TriangleMesh base_head_mesh(int n_vertices) {
    TriangleMesh mesh = unit_sphere_mesh(n_vertices);
    for (auto& v : mesh.vertices) v = head_deform(v);
    return mesh;
}

MorphableBasis synth_basis(std::uint64_t seed, int n_vertices, int latent_dim,
                           double amplitude) {
    if (n_vertices < 4) throw std::invalid_argument("synth_basis: n_vertices must be >= 4");
    if (latent_dim < 1) throw std::invalid_argument("synth_basis: latent_dim must be >= 1");
    if (!(amplitude > 0.0)) throw std::invalid_argument("synth_basis: amplitude must be > 0");

    // The displacement fields are defined on the generating sphere, not on
    // the deformed head, so keep both.
    const TriangleMesh unit = unit_sphere_mesh(n_vertices);

    MorphableBasis out;
    out.mean_shape.resize(3 * n_vertices);
    for (int i = 0; i < n_vertices; ++i) {
        out.mean_shape.segment<3>(3 * i) = head_deform(unit.vertices[static_cast<size_t>(i)]);
    }
    out.basis.resize(3 * n_vertices, latent_dim);

    // Each column: a band-limited random field f(u) = sum_k a_k cos(w_k.u +
    // phi_k) with |w_k| <= 3.5, displacing radially, scaled to the requested
    // column norm.
    Rng rng(mix_seed(seed, 0x6261736973ULL)); // "basis"
    constexpr int kWaves = 6;
    for (int j = 0; j < latent_dim; ++j) {
        Eigen::Matrix<double, 3, kWaves> w;
        Eigen::Matrix<double, kWaves, 1> a, phi;
        for (int k = 0; k < kWaves; ++k) {
            Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
            if (dir.norm() < 1e-12) dir = Eigen::Vector3d(1, 0, 0);
            dir.normalize();
            const double freq = 0.5 + 3.0 * rng.uniform();
            w.col(k) = freq * dir;
            a(k) = rng.normal() / (1.0 + freq);
            phi(k) = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        }
        Eigen::VectorXd column(3 * n_vertices);
        for (int i = 0; i < n_vertices; ++i) {
            const Eigen::Vector3d& u = unit.vertices[static_cast<size_t>(i)];
            double f = 0.0;
            for (int k = 0; k < kWaves; ++k) {
                f += a(k) * std::cos(w.col(k).dot(u) + phi(k));
            }
            column.segment<3>(3 * i) = f * u;
        }
        const double norm = column.norm();
        out.basis.col(j) = norm > 0.0 ? (amplitude / norm) * column : column;
    }
    validate_basis(out);
    return out;
}

HeadModel synth_head_model(std::uint64_t seed, int n_vertices, int latent_dim,
                           double amplitude) {
    HeadModel model;
    model.basis = synth_basis(seed, n_vertices, latent_dim, amplitude);
    model.faces = unit_sphere_mesh(n_vertices).faces;
    return model;
}

TriangleMesh decode_mesh(const MorphableBasis& basis,
                         const std::vector<std::array<int, 3>>& faces,
                         const LatentCode& code) {
    TriangleMesh mesh;
    mesh.vertices = decode(basis, code);
    mesh.faces = faces;
    return mesh;
}

namespace {

void write_u32le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated basis file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& out, const double* data, size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void read_f64(std::istream& in, double* data, size_t count) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated basis file");
}

} // namespace

void save_basis(const MorphableBasis& basis, const std::string& path) {
    validate_basis(basis);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("MBAS", 4);
    write_u32le(out, kBasisVersion);
    write_u32le(out, static_cast<std::uint32_t>(basis.n_vertices()));
    write_u32le(out, static_cast<std::uint32_t>(basis.latent_dim()));
    write_f64(out, basis.mean_shape.data(), static_cast<size_t>(basis.mean_shape.size()));
    // Row-major on disk.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        rm = basis.basis;
    write_f64(out, rm.data(), static_cast<size_t>(rm.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

MorphableBasis load_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MBAS", 4) != 0) {
        throw std::runtime_error("not a basis file: " + path);
    }
    const std::uint32_t version = read_u32le(in);
    if (version != kBasisVersion) {
        throw std::runtime_error("unsupported basis version in " + path);
    }
    const std::uint32_t n = read_u32le(in);
    const std::uint32_t d = read_u32le(in);
    MorphableBasis basis;
    basis.mean_shape.resize(3 * static_cast<Eigen::Index>(n));
    read_f64(in, basis.mean_shape.data(), static_cast<size_t>(3 * n));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        3 * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    read_f64(in, rm.data(), static_cast<size_t>(rm.size()));
    basis.basis = rm;
    validate_basis(basis);
    return basis;
}

} // namespace facefill
