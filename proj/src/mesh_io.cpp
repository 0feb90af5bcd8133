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

#include "facefill/mesh_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace facefill {

namespace {

[[noreturn]] void obj_error(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

// First '/'-separated field of an OBJ face token ("5/1/2" -> 5).
int parse_face_index(const std::string& token, const std::string& path, int line) {
    const auto slash = token.find('/');
    const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
    size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(head, &pos);
    } catch (const std::exception&) {
        obj_error(path, line, "bad face index '" + token + "'");
    }
    if (pos != head.size()) obj_error(path, line, "bad face index '" + token + "'");
    if (value == 0) obj_error(path, line, "face indices are 1-based");
    return value;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_f32(std::ostream& out, float v) {
    static_assert(sizeof(float) == 4);
    char bytes[4];
    std::memcpy(bytes, &v, 4);
    out.write(bytes, 4);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void write_colored_obj(const TriangleMesh& mesh, const std::vector<double>& rgb,
                       const std::string& path) {
    // rgb holds 3 channels per vertex.
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
            << format_double(v.z()) << ' ' << rgb[3 * i] << ' ' << rgb[3 * i + 1]
            << ' ' << rgb[3 * i + 2] << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

TriangleMesh import_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    TriangleMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x = 0, y = 0, z = 0;
            if (!(ls >> x >> y >> z)) obj_error(path, line_no, "malformed vertex line");
            mesh.vertices.emplace_back(x, y, z); // trailing colors, if any, ignored
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ls >> token) idx.push_back(parse_face_index(token, path, line_no));
            if (idx.size() != 3) obj_error(path, line_no, "faces must be triangles");
            std::array<int, 3> f{};
            for (int k = 0; k < 3; ++k) {
                int v = idx[static_cast<size_t>(k)];
                if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
                if (v < 1 || v > static_cast<int>(mesh.vertices.size())) {
                    obj_error(path, line_no, "face index out of range");
                }
                f[static_cast<size_t>(k)] = v - 1;
            }
            mesh.faces.push_back(f);
        }
        // vn/vt/o/g/usemtl and friends are not part of this toolchain; skip.
    }
    validate_mesh(mesh);
    return mesh;
}

void export_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& v : mesh.vertices) {
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
            << format_double(v.z()) << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void export_stl(const TriangleMesh& mesh, const std::string& path, bool force) {
    if (!force && !is_watertight(mesh)) {
        throw std::runtime_error(
            "export_stl: mesh is not watertight (pass force to override)");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char header[80] = {};
    std::strncpy(header, "facefill binary STL", sizeof(header) - 1);
    out.write(header, sizeof(header));
    write_u32(out, static_cast<std::uint32_t>(mesh.faces.size()));
    for (size_t i = 0; i < mesh.faces.size(); ++i) {
        const Eigen::Vector3d n = face_normal(mesh, static_cast<int>(i));
        write_f32(out, static_cast<float>(n.x()));
        write_f32(out, static_cast<float>(n.y()));
        write_f32(out, static_cast<float>(n.z()));
        for (int v : mesh.faces[i]) {
            const auto& p = mesh.vertices[static_cast<size_t>(v)];
            write_f32(out, static_cast<float>(p.x()));
            write_f32(out, static_cast<float>(p.y()));
            write_f32(out, static_cast<float>(p.z()));
        }
        const char attr[2] = {0, 0};
        out.write(attr, 2);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void export_deviation_csv(const std::vector<double>& deviation,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "vertex_index,deviation\n";
    char buf[48];
    for (size_t i = 0; i < deviation.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i, deviation[i]);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void export_deviation_obj(const TriangleMesh& mesh,
                          const std::vector<double>& deviation,
                          const std::string& path) {
    if (deviation.size() != mesh.vertices.size()) {
        throw std::invalid_argument("deviation length does not match vertex count");
    }
    const double peak = deviation.empty()
                            ? 0.0
                            : *std::max_element(deviation.begin(), deviation.end());
    std::vector<double> rgb(mesh.vertices.size() * 3);
    for (size_t i = 0; i < deviation.size(); ++i) {
        const double g = peak > 0.0 ? deviation[i] / peak : 0.0;
        rgb[3 * i] = g;
        rgb[3 * i + 1] = g;
        rgb[3 * i + 2] = g;
    }
    write_colored_obj(mesh, rgb, path);
}

void export_labeled_obj(const TriangleMesh& mesh, const std::vector<int>& labels,
                        const std::string& path) {
    if (labels.size() != mesh.vertices.size()) {
        throw std::invalid_argument("label length does not match vertex count");
    }
    std::vector<double> rgb(mesh.vertices.size() * 3);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0) {
            rgb[3 * i] = 0.9; // wound region in red
            rgb[3 * i + 1] = 0.1;
            rgb[3 * i + 2] = 0.1;
        } else {
            rgb[3 * i] = 0.7;
            rgb[3 * i + 1] = 0.7;
            rgb[3 * i + 2] = 0.7;
        }
    }
    write_colored_obj(mesh, rgb, path);
}

} // namespace facefill
