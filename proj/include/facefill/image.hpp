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
#include <string>

namespace facefill {

/// Grayscale image with intensities in [0, 1]. pix(r, c) addresses row r,
/// column c; row 0 is the top of the image.
struct Image {
    int height = 0;
    int width = 0;
    Eigen::MatrixXd pix; // height x width

    Image() = default;
    Image(int h, int w) : height(h), width(w), pix(Eigen::MatrixXd::Zero(h, w)) {}
};

/// Throws std::invalid_argument unless dimensions are >= 8 and all
/// intensities lie in [0, 1].
void validate_image(const Image& img);

double image_mean(const Image& img);

/// Binary PGM (P5, maxval 255). Intensities are quantized on save.
void save_pgm(const Image& img, const std::string& path);
Image load_pgm(const std::string& path);

} // namespace facefill
