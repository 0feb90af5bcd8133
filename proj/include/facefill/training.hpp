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

#include "facefill/adam.hpp"
#include "facefill/dataset.hpp"
#include "facefill/encoder.hpp"
#include "facefill/swav.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace facefill {

enum class TrainMode { pretrain, finetune };

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 50;
    int epochs = 50;
    std::uint64_t seed = 1;
    TrainMode mode = TrainMode::finetune;
    double data_fraction = 1.0; // fraction of training images used

    // learning_rate == 0 runs the loop with the optimizer disabled
    // (frozen-parameter control runs).
};

void validate_train_config(const TrainConfig& cfg);

/// Per-vertex nonnegative loss weights.
struct RegionWeights {
    Eigen::VectorXd w;

    static RegionWeights uniform(int n_vertices);
};

void validate_region_weights(const RegionWeights& weights, int n_vertices);

/// Region-weighted reconstruction loss: sum_i w_i * (|dx| + |dy| + |dz|) / N.
double masked_l1(const VertexBuffer& pred, const VertexBuffer& truth,
                 const RegionWeights& weights);

/// Loss and parameter gradient of masked_l1(decode(map(backbone(image))),
/// truth) for one sample; the decoder basis is a constant. Gradients are
/// accumulated into `grads` when non-null.
double finetune_sample_loss_grad(const EncoderParams& params,
                                 const MorphableBasis& basis,
                                 const RegionWeights& weights, const Image& image,
                                 const VertexBuffer& truth, EncoderParams* grads);

/// Loss and gradients of the batch swapped-prediction objective through the
/// projection head and backbone for a batch of two-view images.
double ssl_batch_loss_grad(const EncoderParams& params, const Prototypes& protos,
                           const std::vector<std::array<Image, 2>>& view_batch,
                           const SwavConfig& swav_cfg, EncoderParams* grads,
                           Eigen::MatrixXd* proto_grads);

struct PretrainResult {
    EncoderParams params;
    Prototypes protos;
    std::vector<double> loss_curve; // per-epoch mean batch loss
};

/// SwAV pretraining of the backbone and projection head on the training
/// split's renders (mapping network untouched by the gradients). Prototype
/// columns are renormalized after every step. Aborts with the epoch index
/// if the loss diverges.
PretrainResult pretrain_ssl(const Corpus& corpus, const EncoderParams& encoder,
                            const Prototypes& protos, const TrainConfig& cfg,
                            const SwavConfig& swav_cfg,
                            const AugmentConfig& aug_cfg);

struct FinetuneResult {
    EncoderParams params;
    std::vector<double> train_curve;
    std::vector<double> val_curve;
};

/// Supervised fine-tuning of the full encoder against ground-truth meshes
/// with the region-weighted loss; the decoder basis stays frozen. Records
/// train and validation losses per epoch.
FinetuneResult finetune(const Corpus& corpus, const EncoderParams& encoder,
                        const MorphableBasis& basis, const RegionWeights& weights,
                        const TrainConfig& cfg);

/// Mean geometric distance between reconstructions and ground truth over all
/// renders of the given split. `jobs` > 1 evaluates items concurrently; the
/// reduction order is fixed, so results match the serial run.
double evaluate_mean_distance(const Corpus& corpus, const EncoderParams& params,
                              const MorphableBasis& basis, Split which,
                              int jobs = 1);

/// CSV writer: "epoch,train_loss,val_loss" (or two columns without `val`).
void write_loss_csv(const std::string& path, const std::vector<double>& train,
                    const std::vector<double>* val);

// ---------------------------------------------------------------------------
// End-to-end pipelines used by `report` and the acceptance suite.

struct PipelineSettings {
    EncoderConfig encoder;
    SwavConfig swav;
    AugmentConfig augment;
    TrainConfig pretrain; // mode forced to pretrain
    TrainConfig finetune; // mode forced to finetune
};

/// Encoder sized for the corpus (input resolution, latent dim) with the
/// stock training schedule (50 epochs, batch 50, lr 1e-3).
PipelineSettings default_pipeline_settings(const Corpus& corpus);

struct PipelineResult {
    double test_mean_distance = 0.0;
    EncoderParams params;
    std::vector<double> pretrain_curve;
    std::vector<double> train_curve;
    std::vector<double> val_curve;
};

/// Freshly initialized encoder, no training at all.
PipelineResult run_untrained(const Corpus& target, const PipelineSettings& s,
                             std::uint64_t seed);

/// Transfer baseline: supervised training on a disjoint identity pool of
/// pre-injury renders, then fine-tuning on the target corpus.
PipelineResult run_transfer(const Corpus& target, const PipelineSettings& s,
                            std::uint64_t seed, int jobs = 1);

/// SwAV pretraining on the target corpus' training images (at the given
/// data fraction), then fine-tuning.
PipelineResult run_ssl(const Corpus& target, const PipelineSettings& s,
                       std::uint64_t seed, double data_fraction, int jobs = 1);

} // namespace facefill
