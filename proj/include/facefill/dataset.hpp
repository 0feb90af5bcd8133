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

#include "facefill/image.hpp"
#include "facefill/morphable.hpp"
#include "facefill/render.hpp"
#include "facefill/split.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace facefill {

/// One synthetic identity: the hidden ground-truth code (never shown to the
/// model), its decoded pre-injury mesh, the wounded mesh, and the renders
/// used as model input.
struct SyntheticSample {
    int identity_id = 0;
    LatentCode hidden_code;
    TriangleMesh gt_mesh;
    TriangleMesh damaged_mesh;
    std::vector<int> wound_vertices; // sorted
    std::vector<Image> renders;
};

struct CorpusConfig {
    int n_identities = 200;
    int lights_per_sample = 3;
    int resolution = 64;
    double wound_depth = 0.25;
    int wound_min_rings = 2;
    int wound_max_rings = 5;
    bool render_damaged = true; // false renders the pre-injury mesh instead
    double frame_half = 1.6;
};

struct Corpus {
    MorphableBasis basis;
    std::vector<std::array<int, 3>> faces; // shared topology
    std::vector<SyntheticSample> samples;  // ordered by identity_id
    SplitAssignment split;
    CorpusConfig config;
    std::uint64_t seed = 0;
};

/// Hidden code with entries in [-1, 1] plus the decoded ground-truth mesh.
std::pair<LatentCode, TriangleMesh> synth_identity(const MorphableBasis& basis,
                                                   const std::vector<std::array<int, 3>>& faces,
                                                   std::uint64_t seed);

/// Pushes a breadth-first disk of vertices inward with a smooth crater
/// profile. Topology is unchanged; the maximum displacement equals `depth`.
/// Returns the wounded mesh and the displaced vertex set (sorted).
std::pair<TriangleMesh, std::vector<int>> apply_wound(const TriangleMesh& gt_mesh,
                                                      std::uint64_t seed,
                                                      double depth,
                                                      int min_rings, int max_rings);

/// Builds the full corpus: per identity a ground-truth mesh, a wounded mesh,
/// and renders under per-identity random frontal lights, plus the
/// identity-disjoint 6:2:2 split. `jobs` > 1 generates identities in
/// parallel; per-identity seeding keeps the result byte-identical.
Corpus build_corpus(const HeadModel& model, const CorpusConfig& cfg,
                    std::uint64_t seed, int jobs = 1);

/// On-disk layout: manifest.json at the root, basis.mbas, one directory per
/// identity with gt.obj, damaged.obj, wound.csv and render_<k>.pgm files.
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

} // namespace facefill
