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

#include "facefill/image.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace facefill {

void validate_image(const Image& img) {
    if (img.height < 8 || img.width < 8) {
        throw std::invalid_argument("image dimensions must be at least 8x8");
    }
    if (img.pix.rows() != img.height || img.pix.cols() != img.width) {
        throw std::invalid_argument("image buffer does not match declared size");
    }
    if ((img.pix.array() < 0.0).any() || (img.pix.array() > 1.0).any() ||
        !img.pix.allFinite()) {
        throw std::invalid_argument("image intensities must lie in [0, 1]");
    }
}

double image_mean(const Image& img) { return img.pix.mean(); }

void save_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.width));
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double v = std::min(1.0, std::max(0.0, img.pix(r, c)));
            row[static_cast<size_t>(c)] =
                static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int ch = 0;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
        } else if (!std::isspace(ch)) {
            tok.push_back(static_cast<char>(ch));
            break;
        }
    }
    while ((ch = in.get()) != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

} // namespace

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    if (next_pgm_token(in) != "P5") {
        throw std::runtime_error("not a binary PGM (P5): " + path);
    }
    const int w = std::stoi(next_pgm_token(in));
    const int h = std::stoi(next_pgm_token(in));
    const int maxval = std::stoi(next_pgm_token(in));
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw std::runtime_error("unsupported PGM header in " + path);
    }
    Image img(h, w);
    std::vector<unsigned char> row(static_cast<size_t>(w));
    for (int r = 0; r < h; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size()));
        if (!in) throw std::runtime_error("truncated PGM data in " + path);
        for (int c = 0; c < w; ++c) {
            img.pix(r, c) = static_cast<double>(row[static_cast<size_t>(c)]) / 255.0;
        }
    }
    return img;
}

} // namespace facefill
