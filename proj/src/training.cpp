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

#include "facefill/training.hpp"

#include "facefill/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace facefill {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.learning_rate < 0.0 || !std::isfinite(cfg.learning_rate)) {
        throw std::invalid_argument("train config: learning rate must be >= 0");
    }
    if (cfg.batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (!(cfg.data_fraction > 0.0) || cfg.data_fraction > 1.0) {
        throw std::invalid_argument("train config: data_fraction must be in (0, 1]");
    }
}

RegionWeights RegionWeights::uniform(int n_vertices) {
    return RegionWeights{Eigen::VectorXd::Ones(n_vertices)};
}

void validate_region_weights(const RegionWeights& weights, int n_vertices) {
    if (weights.w.size() != n_vertices) {
        throw std::invalid_argument("region weights length mismatch");
    }
    if ((weights.w.array() < 0.0).any() || !(weights.w.maxCoeff() > 0.0)) {
        throw std::invalid_argument("region weights must be >= 0 with at least one > 0");
    }
}

double masked_l1(const VertexBuffer& pred, const VertexBuffer& truth,
                 const RegionWeights& weights) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("masked_l1: vertex count mismatch");
    }
    validate_region_weights(weights, static_cast<int>(pred.size()));
    double sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        sum += weights.w(static_cast<Eigen::Index>(i)) *
               (pred[i] - truth[i]).cwiseAbs().sum();
    }
    return sum / static_cast<double>(pred.size());
}

double finetune_sample_loss_grad(const EncoderParams& params,
                                 const MorphableBasis& basis,
                                 const RegionWeights& weights, const Image& image,
                                 const VertexBuffer& truth, EncoderParams* grads) {
    const int n = basis.n_vertices();
    if (static_cast<int>(truth.size()) != n) {
        throw std::invalid_argument("finetune_sample_loss_grad: truth size mismatch");
    }
    validate_region_weights(weights, n);

    BackboneTrace btrace;
    MapTrace mtrace;
    const Eigen::VectorXd feat = backbone_forward(params, image, grads ? &btrace : nullptr);
    const Eigen::VectorXd latent =
        map_forward(params, feat, grads ? &mtrace : nullptr);
    const Eigen::VectorXd flat = basis.basis * latent + basis.mean_shape;

    double loss = 0.0;
    Eigen::VectorXd dflat = Eigen::VectorXd::Zero(flat.size());
    for (int i = 0; i < n; ++i) {
        const double wi = weights.w(i) / static_cast<double>(n);
        for (int c = 0; c < 3; ++c) {
            const double diff =
                flat(3 * i + c) - truth[static_cast<size_t>(i)](c);
            loss += wi * std::abs(diff);
            if (grads) dflat(3 * i + c) = diff > 0.0 ? wi : (diff < 0.0 ? -wi : 0.0);
        }
    }
    if (grads) {
        const Eigen::VectorXd dlatent = basis.basis.transpose() * dflat;
        Eigen::VectorXd dfeat;
        map_backward(params, mtrace, dlatent, *grads, dfeat);
        backbone_backward(params, btrace, dfeat, *grads);
    }
    return loss;
}

double ssl_batch_loss_grad(const EncoderParams& params, const Prototypes& protos,
                           const std::vector<std::array<Image, 2>>& view_batch,
                           const SwavConfig& swav_cfg, EncoderParams* grads,
                           Eigen::MatrixXd* proto_grads) {
    if (view_batch.empty()) throw std::invalid_argument("ssl batch is empty");
    const Eigen::Index b = static_cast<Eigen::Index>(view_batch.size());
    const Eigen::Index p_dim = params.proj.W.rows();

    std::vector<std::array<BackboneTrace, 2>> btraces(view_batch.size());
    std::vector<std::array<Eigen::VectorXd, 2>> feats(view_batch.size());
    std::vector<std::array<Eigen::VectorXd, 2>> projected(view_batch.size());
    std::vector<Eigen::MatrixXd> z(2, Eigen::MatrixXd(p_dim, b));
    for (size_t i = 0; i < view_batch.size(); ++i) {
        for (int v = 0; v < 2; ++v) {
            const Image& img = view_batch[i][static_cast<size_t>(v)];
            feats[i][static_cast<size_t>(v)] = backbone_forward(
                params, img, grads ? &btraces[i][static_cast<size_t>(v)] : nullptr);
            Eigen::VectorXd proj =
                params.proj.W * feats[i][static_cast<size_t>(v)] + params.proj.b;
            const double norm = proj.norm();
            if (!(norm > 0.0)) {
                throw std::runtime_error("ssl_batch_loss_grad: zero projection norm");
            }
            z[static_cast<size_t>(v)].col(static_cast<Eigen::Index>(i)) = proj / norm;
            projected[i][static_cast<size_t>(v)] = std::move(proj);
        }
    }

    const SwavBatchResult swav = batch_swav_loss(z, protos, swav_cfg);
    if (proto_grads) *proto_grads = swav.prototype_grads;
    if (grads) {
        for (size_t i = 0; i < view_batch.size(); ++i) {
            for (int v = 0; v < 2; ++v) {
                const Eigen::VectorXd dz =
                    swav.feature_grads[static_cast<size_t>(v)].col(
                        static_cast<Eigen::Index>(i));
                const Eigen::VectorXd dproj =
                    unit_norm_backward(projected[i][static_cast<size_t>(v)], dz);
                grads->proj.W += dproj * feats[i][static_cast<size_t>(v)].transpose();
                grads->proj.b += dproj;
                const Eigen::VectorXd dfeat = params.proj.W.transpose() * dproj;
                backbone_backward(params, btraces[i][static_cast<size_t>(v)], dfeat,
                                  *grads);
            }
        }
    }
    return swav.loss;
}

namespace {

struct TrainItem {
    int sample = 0;
    int render = 0;
};

std::vector<TrainItem> split_items(const Corpus& corpus, Split which) {
    std::vector<TrainItem> items;
    for (size_t i = 0; i < corpus.samples.size(); ++i) {
        const auto& sample = corpus.samples[i];
        if (corpus.split.at(sample.identity_id) != which) continue;
        for (size_t k = 0; k < sample.renders.size(); ++k) {
            items.push_back({static_cast<int>(i), static_cast<int>(k)});
        }
    }
    return items;
}

void shuffle_items(std::vector<TrainItem>& items, std::uint64_t seed) {
    Rng rng(seed);
    for (size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng.uniform_index(i)]);
    }
}

std::vector<TrainItem> take_fraction(std::vector<TrainItem> items, double fraction,
                                     std::uint64_t seed) {
    if (fraction >= 1.0) return items;
    shuffle_items(items, mix_seed(seed, 0x66726163ULL)); // "frac"
    const size_t keep = std::max<size_t>(
        1, static_cast<size_t>(std::llround(fraction * static_cast<double>(items.size()))));
    items.resize(std::min(keep, items.size()));
    return items;
}

} // namespace

PretrainResult pretrain_ssl(const Corpus& corpus, const EncoderParams& encoder,
                            const Prototypes& protos, const TrainConfig& cfg,
                            const SwavConfig& swav_cfg,
                            const AugmentConfig& aug_cfg) {
    validate_train_config(cfg);
    validate_swav_config(swav_cfg);
    if (cfg.mode != TrainMode::pretrain) {
        throw std::invalid_argument("pretrain_ssl: config mode must be pretrain");
    }
    if (corpus.samples.empty()) throw std::invalid_argument("pretrain_ssl: empty corpus");

    PretrainResult result{encoder, protos, {}};
    const std::vector<TrainItem> base_items =
        take_fraction(split_items(corpus, Split::train), cfg.data_fraction, cfg.seed);
    if (base_items.empty()) throw std::invalid_argument("pretrain_ssl: no training images");

    AdamState param_state(param_count(result.params));
    AdamState proto_state(static_cast<Eigen::Index>(result.protos.C.size()));
    Eigen::VectorXd flat = to_flat(result.params);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<TrainItem> items = base_items;
        shuffle_items(items, mix_seed(cfg.seed, 0x65700000ULL, static_cast<std::uint64_t>(epoch)));
        double epoch_loss = 0.0;
        long counted = 0;
        for (size_t start = 0; start < items.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(items.size(), start + static_cast<size_t>(cfg.batch_size));
            std::vector<std::array<Image, 2>> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                const auto& sample = corpus.samples[static_cast<size_t>(items[i].sample)];
                const Image& img = sample.renders[static_cast<size_t>(items[i].render)];
                const std::uint64_t item_salt =
                    mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(items[i].sample) * 1000 +
                                 static_cast<std::uint64_t>(items[i].render));
                batch.push_back({augment(img, aug_cfg, mix_seed(item_salt, 0)),
                                 augment(img, aug_cfg, mix_seed(item_salt, 1))});
            }
            EncoderParams grads = zeros_like(result.params);
            Eigen::MatrixXd proto_grads;
            const double loss = ssl_batch_loss_grad(result.params, result.protos, batch,
                                                    swav_cfg, &grads, &proto_grads);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("pretrain_ssl: loss diverged at epoch " +
                                         std::to_string(epoch + 1));
            }
            epoch_loss += loss * static_cast<double>(batch.size());
            counted += static_cast<long>(batch.size());
            if (cfg.learning_rate > 0.0) {
                adam_step(flat, to_flat(grads), param_state, cfg.learning_rate);
                from_flat(result.params, flat);
                Eigen::Map<Eigen::VectorXd> proto_flat(result.protos.C.data(),
                                                       result.protos.C.size());
                Eigen::VectorXd proto_vec = proto_flat;
                const Eigen::Map<const Eigen::VectorXd> pg(proto_grads.data(),
                                                           proto_grads.size());
                adam_step(proto_vec, pg, proto_state, cfg.learning_rate);
                proto_flat = proto_vec;
                renormalize_prototypes(result.protos);
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(counted));
    }
    return result;
}

FinetuneResult finetune(const Corpus& corpus, const EncoderParams& encoder,
                        const MorphableBasis& basis, const RegionWeights& weights,
                        const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (cfg.mode != TrainMode::finetune) {
        throw std::invalid_argument("finetune: config mode must be finetune");
    }
    if (basis.n_vertices() != corpus.basis.n_vertices()) {
        throw std::invalid_argument("finetune: basis does not match corpus meshes");
    }

    FinetuneResult result{encoder, {}, {}};
    const std::vector<TrainItem> base_items =
        take_fraction(split_items(corpus, Split::train), cfg.data_fraction, cfg.seed);
    const std::vector<TrainItem> val_items = split_items(corpus, Split::validation);
    if (base_items.empty()) throw std::invalid_argument("finetune: no training images");

    AdamState state(param_count(result.params));
    Eigen::VectorXd flat = to_flat(result.params);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<TrainItem> items = base_items;
        shuffle_items(items, mix_seed(cfg.seed, 0x65700001ULL, static_cast<std::uint64_t>(epoch)));
        double epoch_loss = 0.0;
        for (size_t start = 0; start < items.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(items.size(), start + static_cast<size_t>(cfg.batch_size));
            EncoderParams grads = zeros_like(result.params);
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i) {
                const auto& sample = corpus.samples[static_cast<size_t>(items[i].sample)];
                batch_loss += finetune_sample_loss_grad(
                    result.params, basis, weights,
                    sample.renders[static_cast<size_t>(items[i].render)],
                    sample.gt_mesh.vertices, &grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("finetune: loss diverged at epoch " +
                                         std::to_string(epoch + 1));
            }
            epoch_loss += batch_loss * static_cast<double>(end - start);
            if (cfg.learning_rate > 0.0) {
                Eigen::VectorXd grad_flat = to_flat(grads) * inv;
                adam_step(flat, grad_flat, state, cfg.learning_rate);
                from_flat(result.params, flat);
            }
        }
        result.train_curve.push_back(epoch_loss / static_cast<double>(items.size()));

        double val_loss = 0.0;
        for (const auto& item : val_items) {
            const auto& sample = corpus.samples[static_cast<size_t>(item.sample)];
            val_loss += finetune_sample_loss_grad(
                result.params, basis, weights,
                sample.renders[static_cast<size_t>(item.render)],
                sample.gt_mesh.vertices, nullptr);
        }
        result.val_curve.push_back(
            val_items.empty() ? 0.0 : val_loss / static_cast<double>(val_items.size()));
    }
    return result;
}

double evaluate_mean_distance(const Corpus& corpus, const EncoderParams& params,
                              const MorphableBasis& basis, Split which, int jobs) {
    const std::vector<TrainItem> items = split_items(corpus, which);
    if (items.empty()) throw std::invalid_argument("evaluate: split has no items");
    std::vector<double> distances(items.size(), 0.0);
    auto eval_one = [&](size_t i) {
        const auto& sample = corpus.samples[static_cast<size_t>(items[i].sample)];
        const Image& img = sample.renders[static_cast<size_t>(items[i].render)];
        const Feature feat = forward_backbone(params, img);
        const LatentCode code = map_identity(params, feat);
        const TriangleMesh pred = decode_mesh(basis, corpus.faces, code);
        distances[i] = mean_geometric_distance(pred, sample.gt_mesh);
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    if (workers == 1) {
        for (size_t i = 0; i < items.size(); ++i) eval_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < items.size();
                     i = next.fetch_add(1)) {
                    eval_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    double sum = 0.0;
    for (double d : distances) sum += d; // fixed order
    return sum / static_cast<double>(distances.size());
}

void write_loss_csv(const std::string& path, const std::vector<double>& train,
                    const std::vector<double>* val) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << (val ? "epoch,train_loss,val_loss\n" : "epoch,train_loss\n");
    char buf[96];
    for (size_t i = 0; i < train.size(); ++i) {
        if (val) {
            std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", i + 1, train[i],
                          (*val)[i]);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i + 1, train[i]);
        }
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

PipelineSettings default_pipeline_settings(const Corpus& corpus) {
    PipelineSettings s;
    s.encoder.input_h = corpus.config.resolution;
    s.encoder.input_w = corpus.config.resolution;
    s.encoder.latent_dim = corpus.basis.latent_dim();
    s.pretrain.mode = TrainMode::pretrain;
    s.finetune.mode = TrainMode::finetune;
    return s;
}

PipelineResult run_untrained(const Corpus& target, const PipelineSettings& s,
                             std::uint64_t seed) {
    PipelineResult r;
    r.params = init_encoder(s.encoder, mix_seed(seed, 0x696e6974ULL)); // "init"
    r.test_mean_distance =
        evaluate_mean_distance(target, r.params, target.basis, Split::test);
    return r;
}

PipelineResult run_transfer(const Corpus& target, const PipelineSettings& s,
                            std::uint64_t seed, int jobs) {
    // Disjoint identity pool rendered pre-injury: the stand-in for a model
    // pretrained on intact faces that has never seen a wound.
    CorpusConfig pool_cfg = target.config;
    pool_cfg.render_damaged = false;
    HeadModel model{target.basis, target.faces};
    const Corpus pool =
        build_corpus(model, pool_cfg, mix_seed(seed, 0x706f6f6cULL), jobs); // "pool"

    TrainConfig pool_train = s.finetune;
    pool_train.mode = TrainMode::finetune;
    pool_train.seed = mix_seed(seed, 0x70726574ULL);
    const RegionWeights weights = RegionWeights::uniform(target.basis.n_vertices());
    EncoderParams params = init_encoder(s.encoder, mix_seed(seed, 0x696e6974ULL));
    const FinetuneResult pool_result =
        finetune(pool, params, target.basis, weights, pool_train);

    TrainConfig fine = s.finetune;
    fine.seed = mix_seed(seed, 0x66696e65ULL); // "fine"
    PipelineResult r;
    const FinetuneResult ft =
        finetune(target, pool_result.params, target.basis, weights, fine);
    r.params = ft.params;
    r.train_curve = ft.train_curve;
    r.val_curve = ft.val_curve;
    r.test_mean_distance =
        evaluate_mean_distance(target, r.params, target.basis, Split::test, jobs);
    return r;
}

PipelineResult run_ssl(const Corpus& target, const PipelineSettings& s,
                       std::uint64_t seed, double data_fraction, int jobs) {
    EncoderParams params = init_encoder(s.encoder, mix_seed(seed, 0x696e6974ULL));
    Prototypes protos = init_prototypes(s.encoder.proj_dim, s.swav.n_prototypes,
                                        mix_seed(seed, 0x70726f74ULL));
    TrainConfig pre = s.pretrain;
    pre.mode = TrainMode::pretrain;
    pre.seed = mix_seed(seed, 0x73736cULL); // "ssl"
    pre.data_fraction = data_fraction;
    const PretrainResult ssl =
        pretrain_ssl(target, params, protos, pre, s.swav, s.augment);

    TrainConfig fine = s.finetune;
    fine.seed = mix_seed(seed, 0x66696e65ULL);
    const RegionWeights weights = RegionWeights::uniform(target.basis.n_vertices());
    PipelineResult r;
    const FinetuneResult ft =
        finetune(target, ssl.params, target.basis, weights, fine);
    r.params = ft.params;
    r.pretrain_curve = ssl.loss_curve;
    r.train_curve = ft.train_curve;
    r.val_curve = ft.val_curve;
    r.test_mean_distance =
        evaluate_mean_distance(target, r.params, target.basis, Split::test, jobs);
    return r;
}

} // namespace facefill
