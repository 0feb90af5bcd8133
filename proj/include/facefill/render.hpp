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
#include "facefill/mesh.hpp"

#include <Eigen/Core>

namespace facefill {

/// Orthographic frontal capture window. The camera sits on +z looking at
/// the origin with +y up; pixels span [-frame_half, frame_half]^2 in x/y.
struct RenderConfig {
    int resolution = 64;
    double frame_half = 1.6;
};

/// Flat-shaded Lambertian render: intensity = max(0, n . light) per face,
/// resolved with a depth buffer. `light_dir` must be unit length and points
/// from the surface toward the light. Rejects meshes whose projection has
/// zero area.
Image render(const TriangleMesh& mesh, const Eigen::Vector3d& light_dir,
             const RenderConfig& cfg);

} // namespace facefill
