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
#include "facefill/morphable.hpp"

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace facefill {

struct Prototypes; // swav.hpp

/// Feature vector produced by the encoder stack.
struct Feature {
    Eigen::VectorXd values;
};

/// Architecture knobs. The backbone is three stride-2 3x3 convolutions and a
/// dense layer; a linear projection head feeds the self-supervised feature
/// space and a three-layer mapping network produces the decoder latent
/// (rectifier activations on the hidden layers, linear output).
struct EncoderConfig {
    int input_h = 64;
    int input_w = 64;
    std::array<int, 3> conv_channels = {8, 16, 32};
    int feature_dim = 64; // backbone output F
    int proj_dim = 32;    // projection head output (prototype space)
    std::array<int, 2> map_hidden = {256, 256};
    int latent_dim = 16;  // must match the decoder basis

    int conv_out_h() const { return (((input_h + 1) / 2 + 1) / 2 + 1) / 2; }
    int conv_out_w() const { return (((input_w + 1) / 2 + 1) / 2 + 1) / 2; }
    int flatten_dim() const { return conv_channels[2] * conv_out_h() * conv_out_w(); }
};

struct ConvLayer {
    Eigen::MatrixXd W; // out_ch x (in_ch * 9)
    Eigen::VectorXd b;
    int in_ch = 0, out_ch = 0;
};

struct DenseLayer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

struct EncoderParams {
    EncoderConfig cfg;
    std::array<ConvLayer, 3> conv;
    DenseLayer fc;   // flatten -> feature_dim
    DenseLayer proj; // feature_dim -> proj_dim
    DenseLayer map1, map2, map3; // feature_dim -> h1 -> h2 -> latent_dim
};

/// Seeded He/Glorot initialization; biases zero. Deterministic.
EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed);

/// Zero-valued gradient holder with the same shapes as `params`.
EncoderParams zeros_like(const EncoderParams& params);

long param_count(const EncoderParams& params);
Eigen::VectorXd to_flat(const EncoderParams& params);
void from_flat(EncoderParams& params, const Eigen::VectorXd& flat);

// Cached activations for backpropagation.
struct ConvTrace {
    Eigen::MatrixXd input;   // in_ch x (h*w)
    Eigen::MatrixXd patches; // (in_ch*9) x (out_h*out_w)
    Eigen::MatrixXd preact;  // out_ch x (out_h*out_w)
    int in_h = 0, in_w = 0;
};
struct BackboneTrace {
    std::array<ConvTrace, 3> conv;
    Eigen::VectorXd flat;
};
struct MapTrace {
    Eigen::VectorXd input, pre1, pre2;
};

/// Backbone forward pass; `trace` may be null for inference.
Eigen::VectorXd backbone_forward(const EncoderParams& params, const Image& image,
                                 BackboneTrace* trace);
void backbone_backward(const EncoderParams& params, const BackboneTrace& trace,
                       const Eigen::VectorXd& dfeature, EncoderParams& grads);

Eigen::VectorXd map_forward(const EncoderParams& params,
                            const Eigen::VectorXd& feature, MapTrace* trace);
void map_backward(const EncoderParams& params, const MapTrace& trace,
                  const Eigen::VectorXd& dlatent, EncoderParams& grads,
                  Eigen::VectorXd& dfeature);

// Spec-level operations.
Feature forward_backbone(const EncoderParams& params, const Image& image);
Feature forward_projection(const EncoderParams& params, const Feature& feature);
Feature project_unit(const Feature& feature);
LatentCode map_identity(const EncoderParams& params, const Feature& feature);

/// d(unit(p))/dp applied to an upstream gradient.
Eigen::VectorXd unit_norm_backward(const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& dz);

/// Checkpoint file: magic "ENCP", version, config, then one shape header +
/// little-endian f64 block per tensor. When prototypes are given they are
/// appended as a "PROT" section (K, F, then f64 column-major).
void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const Prototypes* protos = nullptr);
EncoderParams load_checkpoint(const std::string& path,
                              Prototypes* protos = nullptr);

} // namespace facefill
