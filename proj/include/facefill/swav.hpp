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

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace facefill {

/// K trainable cluster centers, one per column, kept unit-norm after every
/// optimizer step.
struct Prototypes {
    Eigen::MatrixXd C; // feature_dim x K

    int feature_dim() const { return static_cast<int>(C.rows()); }
    int count() const { return static_cast<int>(C.cols()); }
};

Prototypes init_prototypes(int feature_dim, int k, std::uint64_t seed);
void renormalize_prototypes(Prototypes& protos);

/// Soft assignment of a batch of features to prototypes, constrained to the
/// minibatch transportation polytope: rows sum to 1/K, columns to 1/B.
struct CodeAssignment {
    Eigen::MatrixXd Q; // K x B

    double row_sum_error() const;
    double col_sum_error() const;
};

struct SwavConfig {
    double temperature = 0.1;
    double epsilon = 0.05;
    int sinkhorn_iters = 3; // training default; tests use 50+
    int n_prototypes = 30;
};

void validate_swav_config(const SwavConfig& cfg);

/// Cosine score matrix C^T Z (K x B). Features and prototypes must be
/// unit-norm columns; entries are clamped to [-1, 1].
Eigen::MatrixXd prototype_scores(const Eigen::MatrixXd& features,
                                 const Prototypes& protos);

/// Sinkhorn-Knopp scaling of exp(scores / epsilon) onto the transportation
/// polytope: `iters` alternating row/column renormalizations, columns last.
/// Returns soft (continuous) codes.
CodeAssignment sinkhorn_codes(const Eigen::MatrixXd& scores, double epsilon,
                              int iters);

/// -sum Q log Q over all entries (0 log 0 = 0).
double code_entropy(const CodeAssignment& codes);

/// Swapped prediction loss for one pair of views: the cross-entropy of each
/// view's temperature-softmax prototype scores against the other view's
/// code. `q_t`/`q_s` are probability vectors over the K prototypes.
double swapped_pair_loss(const Eigen::VectorXd& z_t, const Eigen::VectorXd& z_s,
                         const Eigen::VectorXd& q_t, const Eigen::VectorXd& q_s,
                         const Prototypes& protos, double temperature);

struct SwavBatchResult {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> feature_grads; // per view, feature_dim x B
    Eigen::MatrixXd prototype_grads;            // feature_dim x K
    std::vector<CodeAssignment> codes;          // per view
};

/// Batch swapped-prediction objective over >= 2 views (feature_dim x B unit
/// columns each). Codes are computed per view by sinkhorn_codes and treated
/// as constants by the gradients (stop-gradient). The loss averages the
/// two swapped cross-entropy terms of every view pair over the batch.
SwavBatchResult batch_swav_loss(const std::vector<Eigen::MatrixXd>& view_features,
                                const Prototypes& protos, const SwavConfig& cfg);

/// Loss only, with externally fixed codes; the finite-difference oracle for
/// batch_swav_loss differentiates this.
double batch_swav_loss_value(const std::vector<Eigen::MatrixXd>& view_features,
                             const std::vector<CodeAssignment>& frozen_codes,
                             const Prototypes& protos, double temperature);

/// View-generation transform set: random crop-and-resize, horizontal flip,
/// brightness jitter, Gaussian pixel noise. The all-off configuration is the
/// identity.
struct AugmentConfig {
    double min_scale = 0.6;
    double max_scale = 1.0;
    double flip_prob = 0.5;
    double brightness_jitter = 0.2;
    double noise_sigma = 0.02;

    static AugmentConfig identity() { return {1.0, 1.0, 0.0, 0.0, 0.0}; }
};

/// Deterministic given (image, config, seed); output matches the input size.
Image augment(const Image& image, const AugmentConfig& cfg, std::uint64_t seed);

} // namespace facefill
