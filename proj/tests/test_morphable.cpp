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

#include "facefill/morphable.hpp"
#include "facefill/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

using namespace facefill;

namespace {

LatentCode random_code(int d, Rng& rng) {
    LatentCode code;
    code.values.resize(d);
    for (int i = 0; i < d; ++i) code.values(i) = rng.uniform(-1.0, 1.0);
    return code;
}

} // namespace

TEST_CASE("decode of the zero code reproduces the mean shape bitwise") {
    const MorphableBasis basis = synth_basis(3, 42, 8, 0.5);
    const LatentCode zero{Eigen::VectorXd::Zero(8)};
    const VertexBuffer out = decode(basis, zero);
    REQUIRE(static_cast<int>(out.size()) == basis.n_vertices());
    for (int i = 0; i < basis.n_vertices(); ++i) {
        for (int c = 0; c < 3; ++c) {
            // Bitwise equality, not approximate.
            CHECK(out[static_cast<size_t>(i)](c) == basis.mean_shape(3 * i + c));
        }
    }
}

TEST_CASE("decode computes basis * code + mean on a hand-built 2-vertex model") {
    MorphableBasis tiny;
    tiny.mean_shape.resize(6);
    tiny.mean_shape << 0, 0, 0, 1, 0, 0;
    tiny.basis = Eigen::MatrixXd::Ones(6, 1);
    // n_vertices() = 2 < 4 is fine for decode; validation is for synth paths.
    const LatentCode z{Eigen::VectorXd::Constant(1, 2.0)};
    const VertexBuffer out = decode(tiny, z);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Eigen::Vector3d(2, 2, 2));
    CHECK(out[1] == Eigen::Vector3d(3, 2, 2));
}

TEST_CASE("decode is affine: superposition holds to 1e-10") {
    const MorphableBasis basis = synth_basis(11, 162, 6, 0.5);
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const LatentCode z1 = random_code(6, rng);
        const LatentCode z2 = random_code(6, rng);
        const double a = rng.uniform(-2.0, 2.0);
        const double b = 1.0 - a;
        LatentCode mix{a * z1.values + b * z2.values};
        const VertexBuffer lhs = decode(basis, mix);
        const VertexBuffer d1 = decode(basis, z1);
        const VertexBuffer d2 = decode(basis, z2);
        for (size_t i = 0; i < lhs.size(); ++i) {
            const Eigen::Vector3d rhs = a * d1[i] + b * d2[i];
            CHECK((lhs[i] - rhs).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("decode rejects dimension mismatches") {
    const MorphableBasis basis = synth_basis(1, 42, 4, 0.5);
    CHECK_THROWS_AS(decode(basis, LatentCode{Eigen::VectorXd::Zero(5)}),
                    std::invalid_argument);
}

TEST_CASE("synth_basis is deterministic and validates its arguments") {
    const MorphableBasis a = synth_basis(7, 42, 5, 0.3);
    const MorphableBasis b = synth_basis(7, 42, 5, 0.3);
    CHECK(a.mean_shape == b.mean_shape);
    CHECK(a.basis == b.basis);

    const MorphableBasis c = synth_basis(8, 42, 5, 0.3);
    CHECK(a.basis != c.basis);

    CHECK_THROWS_AS(synth_basis(1, 42, 5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(synth_basis(1, 3, 5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(synth_basis(1, 42, 0, 0.5), std::invalid_argument);
}

TEST_CASE("synth_basis columns have the requested norm") {
    const double amplitude = 0.4;
    const MorphableBasis basis = synth_basis(5, 162, 10, amplitude);
    for (int j = 0; j < basis.latent_dim(); ++j) {
        CHECK(basis.basis.col(j).norm() == doctest::Approx(amplitude).epsilon(1e-9));
    }
}

TEST_CASE("base head mesh hits the exact vertex count and stays closed") {
    for (int n : {4, 5, 12, 42, 61, 101, 642}) {
        const TriangleMesh head = base_head_mesh(n);
        CHECK(head.vertex_count() == n);
        CHECK(is_watertight(head));
        CHECK(euler_characteristic(head) == 2);
    }
}

TEST_CASE("decode(synth_basis, 0) equals the base head mesh vertices") {
    const int n = 162;
    const MorphableBasis basis = synth_basis(21, n, 4, 0.5);
    const TriangleMesh head = base_head_mesh(n);
    const VertexBuffer decoded = decode(basis, LatentCode{Eigen::VectorXd::Zero(4)});
    for (int i = 0; i < n; ++i) {
        CHECK((decoded[static_cast<size_t>(i)] -
               head.vertices[static_cast<size_t>(i)]).norm() == 0.0);
    }
}

TEST_CASE("basis serialization round-trips bit-exactly") {
    const MorphableBasis basis = synth_basis(1337, 42, 7, 0.25);
    const auto path = (std::filesystem::temp_directory_path() /
                       "facefill_basis_roundtrip.mbas").string();
    save_basis(basis, path);
    const MorphableBasis back = load_basis(path);
    CHECK(back.mean_shape == basis.mean_shape);
    CHECK(back.basis == basis.basis);
}

TEST_CASE("basis file layout starts with MBAS magic and u32 sizes") {
    const MorphableBasis basis = synth_basis(2, 12, 3, 0.5);
    const auto path = (std::filesystem::temp_directory_path() /
                       "facefill_basis_layout.mbas").string();
    save_basis(basis, path);
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "MBAS");
    unsigned char rest[12];
    in.read(reinterpret_cast<char*>(rest), 12);
    const auto u32 = [&](int off) {
        return static_cast<std::uint32_t>(rest[off]) |
               (static_cast<std::uint32_t>(rest[off + 1]) << 8) |
               (static_cast<std::uint32_t>(rest[off + 2]) << 16) |
               (static_cast<std::uint32_t>(rest[off + 3]) << 24);
    };
    CHECK(u32(0) == 1);  // version
    CHECK(u32(4) == 12); // N
    CHECK(u32(8) == 3);  // d
}
