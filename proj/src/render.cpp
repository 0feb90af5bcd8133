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

#include "facefill/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace facefill {

Image render(const TriangleMesh& mesh, const Eigen::Vector3d& light_dir,
             const RenderConfig& cfg) {
    if (std::abs(light_dir.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("render: light direction must be unit length");
    }
    if (cfg.resolution < 8 || !(cfg.frame_half > 0.0)) {
        throw std::invalid_argument("render: bad render configuration");
    }
    if (mesh.vertices.empty() || mesh.faces.empty()) {
        throw std::invalid_argument("render: empty mesh");
    }
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const auto& v : mesh.vertices) {
        min_x = std::min(min_x, v.x());
        max_x = std::max(max_x, v.x());
        min_y = std::min(min_y, v.y());
        max_y = std::max(max_y, v.y());
    }
    if (!(max_x > min_x) || !(max_y > min_y)) {
        throw std::invalid_argument("render: mesh projects to zero area");
    }

    const int res = cfg.resolution;
    Image img(res, res);
    std::vector<double> depth(static_cast<size_t>(res) * res,
                              -std::numeric_limits<double>::infinity());
    const double span = 2.0 * cfg.frame_half;
    // Pixel centers: x = -frame_half + (c + 0.5) * span / res, y mirrored so
    // row 0 is the top.
    auto to_col = [&](double x) { return (x + cfg.frame_half) * res / span - 0.5; };
    auto to_row = [&](double y) { return (cfg.frame_half - y) * res / span - 0.5; };

    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const Eigen::Vector3d& a = mesh.vertices[static_cast<size_t>(face[0])];
        const Eigen::Vector3d& b = mesh.vertices[static_cast<size_t>(face[1])];
        const Eigen::Vector3d& c = mesh.vertices[static_cast<size_t>(face[2])];
        const Eigen::Vector3d n = face_normal(mesh, static_cast<int>(f));
        const double shade = std::max(0.0, n.dot(light_dir));

        const double ax = to_col(a.x()), ay = to_row(a.y());
        const double bx = to_col(b.x()), by = to_row(b.y());
        const double cx = to_col(c.x()), cy = to_row(c.y());
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
        const int r1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}))));
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
        const int c1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
        const double area = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
        if (area == 0.0) continue;

        for (int r = r0; r <= r1; ++r) {
            for (int col = c0; col <= c1; ++col) {
                const double px = col, py = r;
                const double w0 = ((bx - px) * (cy - py) - (cx - px) * (by - py)) / area;
                const double w1 = ((cx - px) * (ay - py) - (ax - px) * (cy - py)) / area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double z = w0 * a.z() + w1 * b.z() + w2 * c.z();
                const size_t idx = static_cast<size_t>(r) * res + col;
                if (z > depth[idx]) {
                    depth[idx] = z;
                    img.pix(r, col) = shade;
                }
            }
        }
    }
    return img;
}

} // namespace facefill
