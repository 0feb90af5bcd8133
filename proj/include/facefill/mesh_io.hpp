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

#include <string>
#include <vector>

namespace facefill {

/// ASCII OBJ with `v x y z` and 1-based `f i j k` lines. Vertices are
/// printed with round-trip precision. Malformed lines are rejected with
/// their line number.
TriangleMesh import_obj(const std::string& path);
void export_obj(const TriangleMesh& mesh, const std::string& path);

/// Binary STL: 80-byte header, little-endian u32 triangle count, then per
/// triangle a f32 normal, three f32 vertices and a zero u16 attribute
/// (50 bytes each). STL export requires a watertight mesh unless `force`.
void export_stl(const TriangleMesh& mesh, const std::string& path,
                bool force = false);

/// Deviation map as CSV rows "vertex_index,deviation".
void export_deviation_csv(const std::vector<double>& deviation,
                          const std::string& path);

/// OBJ vertex-color extension (`v x y z r g b`); deviations are mapped to a
/// grayscale ramp where brighter means larger error.
void export_deviation_obj(const TriangleMesh& mesh,
                          const std::vector<double>& deviation,
                          const std::string& path);

/// OBJ with label-driven vertex colors (label 1 rendered in a distinct
/// color against a neutral base).
void export_labeled_obj(const TriangleMesh& mesh, const std::vector<int>& labels,
                        const std::string& path);

} // namespace facefill
