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

#include "facefill/dataset.hpp"

#include "facefill/mesh_io.hpp"
#include "facefill/rng.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace facefill {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Area-weighted vertex normals.
std::vector<Eigen::Vector3d> vertex_normals(const TriangleMesh& mesh) {
    std::vector<Eigen::Vector3d> normals(mesh.vertices.size(),
                                         Eigen::Vector3d::Zero());
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d& a = mesh.vertices[static_cast<size_t>(f[0])];
        const Eigen::Vector3d& b = mesh.vertices[static_cast<size_t>(f[1])];
        const Eigen::Vector3d& c = mesh.vertices[static_cast<size_t>(f[2])];
        const Eigen::Vector3d n = (b - a).cross(c - a); // length = 2 * area
        for (int v : f) normals[static_cast<size_t>(v)] += n;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        if (len > 0.0) n /= len;
    }
    return normals;
}

Eigen::Vector3d frontal_light(Rng& rng) {
    // Random direction biased toward the +z (camera) side.
    Eigen::Vector3d l(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                      rng.uniform(0.3, 1.5));
    l.normalize();
    return l;
}

SyntheticSample make_sample(const HeadModel& model, const CorpusConfig& cfg,
                            std::uint64_t corpus_seed, int identity_id) {
    SyntheticSample sample;
    sample.identity_id = identity_id;
    const std::uint64_t id_seed =
        mix_seed(corpus_seed, 0x6964ULL, static_cast<std::uint64_t>(identity_id));
    auto [code, gt] = synth_identity(model.basis, model.faces, id_seed);
    sample.hidden_code = std::move(code);
    sample.gt_mesh = std::move(gt);
    auto [damaged, wound] =
        apply_wound(sample.gt_mesh, mix_seed(id_seed, 0x776e64ULL), cfg.wound_depth,
                    cfg.wound_min_rings, cfg.wound_max_rings);
    sample.damaged_mesh = std::move(damaged);
    sample.wound_vertices = std::move(wound);

    const TriangleMesh& subject = cfg.render_damaged ? sample.damaged_mesh
                                                     : sample.gt_mesh;
    RenderConfig rc;
    rc.resolution = cfg.resolution;
    rc.frame_half = cfg.frame_half;
    Rng light_rng(mix_seed(id_seed, 0x6c6974ULL));
    sample.renders.reserve(static_cast<size_t>(cfg.lights_per_sample));
    for (int k = 0; k < cfg.lights_per_sample; ++k) {
        sample.renders.push_back(render(subject, frontal_light(light_rng), rc));
    }
    return sample;
}

} // namespace

std::pair<LatentCode, TriangleMesh> synth_identity(
    const MorphableBasis& basis, const std::vector<std::array<int, 3>>& faces,
    std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x636f6465ULL)); // "code"
    LatentCode code;
    code.values.resize(basis.latent_dim());
    for (Eigen::Index i = 0; i < code.values.size(); ++i) {
        code.values(i) = rng.uniform(-1.0, 1.0);
    }
    TriangleMesh mesh = decode_mesh(basis, faces, code);
    return {std::move(code), std::move(mesh)};
}

std::pair<TriangleMesh, std::vector<int>> apply_wound(const TriangleMesh& gt_mesh,
                                                      std::uint64_t seed,
                                                      double depth,
                                                      int min_rings, int max_rings) {
    if (!(depth > 0.0) || min_rings < 1 || max_rings < min_rings) {
        throw std::invalid_argument("apply_wound: bad wound parameters");
    }
    Rng rng(mix_seed(seed, 0x776f756eULL)); // "woun"
    const int center = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(gt_mesh.vertex_count())));
    const int radius = min_rings + static_cast<int>(rng.uniform_index(
                           static_cast<std::uint64_t>(max_rings - min_rings + 1)));

    // Breadth-first ring distance from the seed vertex.
    const auto adj = vertex_adjacency(gt_mesh);
    std::vector<int> ring(gt_mesh.vertices.size(), -1);
    std::queue<int> frontier;
    ring[static_cast<size_t>(center)] = 0;
    frontier.push(center);
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        if (ring[static_cast<size_t>(v)] >= radius) continue;
        for (int nb : adj[static_cast<size_t>(v)]) {
            if (ring[static_cast<size_t>(nb)] < 0) {
                ring[static_cast<size_t>(nb)] = ring[static_cast<size_t>(v)] + 1;
                frontier.push(nb);
            }
        }
    }

    const auto normals = vertex_normals(gt_mesh);
    TriangleMesh damaged = gt_mesh;
    std::vector<int> wound;
    for (size_t v = 0; v < damaged.vertices.size(); ++v) {
        const int r = ring[v];
        if (r < 0 || r > radius) continue;
        // Smooth crater: full depth at the center, strictly positive out to
        // the last ring, zero beyond.
        const double t = static_cast<double>(r) / (radius + 1);
        const double profile = std::cos(0.5 * kPi * t);
        damaged.vertices[v] -= depth * profile * profile * normals[v];
        wound.push_back(static_cast<int>(v));
    }
    return {std::move(damaged), std::move(wound)};
}

Corpus build_corpus(const HeadModel& model, const CorpusConfig& cfg,
                    std::uint64_t seed, int jobs) {
    if (cfg.n_identities < 5) {
        throw std::invalid_argument("build_corpus: need at least 5 identities");
    }
    if (cfg.lights_per_sample < 1) {
        throw std::invalid_argument("build_corpus: need at least 1 light");
    }
    validate_basis(model.basis);

    Corpus corpus;
    corpus.basis = model.basis;
    corpus.faces = model.faces;
    corpus.config = cfg;
    corpus.seed = seed;
    corpus.samples.resize(static_cast<size_t>(cfg.n_identities));

    // Identities are seeded individually, so parallel generation fills
    // fixed slots with bit-identical content.
    const int workers = std::max(1, std::min(jobs, cfg.n_identities));
    if (workers == 1) {
        for (int id = 0; id < cfg.n_identities; ++id) {
            corpus.samples[static_cast<size_t>(id)] = make_sample(model, cfg, seed, id);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int id = next.fetch_add(1); id < cfg.n_identities;
                     id = next.fetch_add(1)) {
                    corpus.samples[static_cast<size_t>(id)] =
                        make_sample(model, cfg, seed, id);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<int> ids(static_cast<size_t>(cfg.n_identities));
    std::iota(ids.begin(), ids.end(), 0);
    corpus.split = split_dataset(ids, seed);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    save_basis(corpus.basis, (fs::path(dir) / "basis.mbas").string());

    json manifest;
    manifest["seed"] = corpus.seed;
    manifest["config"] = {{"n_identities", corpus.config.n_identities},
                          {"lights_per_sample", corpus.config.lights_per_sample},
                          {"resolution", corpus.config.resolution},
                          {"wound_depth", corpus.config.wound_depth},
                          {"wound_min_rings", corpus.config.wound_min_rings},
                          {"wound_max_rings", corpus.config.wound_max_rings},
                          {"render_damaged", corpus.config.render_damaged},
                          {"frame_half", corpus.config.frame_half}};
    json split_obj = json::object();
    for (const auto& [id, s] : corpus.split.by_identity) {
        split_obj[std::to_string(id)] = split_name(s);
    }
    manifest["split"] = split_obj;

    json identities = json::array();
    for (const auto& sample : corpus.samples) {
        char name[32];
        std::snprintf(name, sizeof(name), "identity_%04d", sample.identity_id);
        const fs::path id_dir = fs::path(dir) / name;
        fs::create_directories(id_dir);
        export_obj(sample.gt_mesh, (id_dir / "gt.obj").string());
        export_obj(sample.damaged_mesh, (id_dir / "damaged.obj").string());
        {
            std::ofstream wound(id_dir / "wound.csv");
            for (int v : sample.wound_vertices) wound << v << '\n';
        }
        for (size_t k = 0; k < sample.renders.size(); ++k) {
            save_pgm(sample.renders[k],
                     (id_dir / ("render_" + std::to_string(k) + ".pgm")).string());
        }
        json entry;
        entry["id"] = sample.identity_id;
        entry["dir"] = name;
        entry["hidden_code"] = std::vector<double>(
            sample.hidden_code.values.data(),
            sample.hidden_code.values.data() + sample.hidden_code.values.size());
        identities.push_back(entry);
    }
    manifest["identities"] = identities;

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write corpus manifest in " + dir);
    out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in " + dir);
    json manifest;
    in >> manifest;

    Corpus corpus;
    corpus.seed = manifest.at("seed").get<std::uint64_t>();
    const json& c = manifest.at("config");
    corpus.config.n_identities = c.at("n_identities").get<int>();
    corpus.config.lights_per_sample = c.at("lights_per_sample").get<int>();
    corpus.config.resolution = c.at("resolution").get<int>();
    corpus.config.wound_depth = c.at("wound_depth").get<double>();
    corpus.config.wound_min_rings = c.at("wound_min_rings").get<int>();
    corpus.config.wound_max_rings = c.at("wound_max_rings").get<int>();
    corpus.config.render_damaged = c.at("render_damaged").get<bool>();
    corpus.config.frame_half = c.at("frame_half").get<double>();

    corpus.basis = load_basis((fs::path(dir) / "basis.mbas").string());
    for (const auto& [key, value] : manifest.at("split").items()) {
        corpus.split.by_identity[std::stoi(key)] =
            split_from_name(value.get<std::string>());
    }
    for (const auto& entry : manifest.at("identities")) {
        SyntheticSample sample;
        sample.identity_id = entry.at("id").get<int>();
        const auto code = entry.at("hidden_code").get<std::vector<double>>();
        sample.hidden_code.values =
            Eigen::Map<const Eigen::VectorXd>(code.data(),
                                              static_cast<Eigen::Index>(code.size()));
        const fs::path id_dir = fs::path(dir) / entry.at("dir").get<std::string>();
        sample.gt_mesh = import_obj((id_dir / "gt.obj").string());
        sample.damaged_mesh = import_obj((id_dir / "damaged.obj").string());
        {
            std::ifstream wound(id_dir / "wound.csv");
            int v = 0;
            while (wound >> v) sample.wound_vertices.push_back(v);
        }
        for (int k = 0;; ++k) {
            const fs::path p = id_dir / ("render_" + std::to_string(k) + ".pgm");
            if (!fs::exists(p)) break;
            sample.renders.push_back(load_pgm(p.string()));
        }
        if (corpus.faces.empty()) corpus.faces = sample.gt_mesh.faces;

        // The decoded hidden code must reproduce the stored mesh.
        const TriangleMesh expected =
            decode_mesh(corpus.basis, corpus.faces, sample.hidden_code);
        if (mean_geometric_distance(expected, sample.gt_mesh) > 1e-9) {
            throw std::runtime_error("corpus ground truth does not match its code: " +
                                     id_dir.string());
        }
        corpus.samples.push_back(std::move(sample));
    }
    return corpus;
}

} // namespace facefill
