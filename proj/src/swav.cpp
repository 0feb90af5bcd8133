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

#include "facefill/swav.hpp"

#include "facefill/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace facefill {

namespace {

constexpr double kUnitTol = 1e-6;

void require_unit_columns(const Eigen::MatrixXd& m, const char* what) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (std::abs(m.col(c).norm() - 1.0) > kUnitTol) {
            throw std::invalid_argument(std::string(what) +
                                        " must have unit-norm columns (column " +
                                        std::to_string(c) + ")");
        }
    }
}

// log softmax of scores / tau, numerically stabilized.
Eigen::VectorXd log_softmax_scaled(const Eigen::VectorXd& scores, double tau) {
    const Eigen::ArrayXd scaled = scores.array() / tau;
    const double peak = scaled.maxCoeff();
    const double lse = peak + std::log((scaled - peak).exp().sum());
    return (scaled - lse).matrix();
}

} // namespace

Prototypes init_prototypes(int feature_dim, int k, std::uint64_t seed) {
    if (feature_dim < 1 || k < 1) {
        throw std::invalid_argument("init_prototypes: dimensions must be positive");
    }
    Rng rng(mix_seed(seed, 0x70726f74ULL)); // "prot"
    Prototypes p;
    p.C.resize(feature_dim, k);
    for (int c = 0; c < k; ++c) {
        for (int r = 0; r < feature_dim; ++r) p.C(r, c) = rng.normal();
    }
    renormalize_prototypes(p);
    return p;
}

void renormalize_prototypes(Prototypes& protos) {
    for (Eigen::Index c = 0; c < protos.C.cols(); ++c) {
        const double n = protos.C.col(c).norm();
        if (!(n > 0.0)) {
            throw std::runtime_error("renormalize_prototypes: zero prototype column");
        }
        protos.C.col(c) /= n;
    }
}

double CodeAssignment::row_sum_error() const {
    const double target = 1.0 / static_cast<double>(Q.rows());
    return (Q.rowwise().sum().array() - target).abs().maxCoeff();
}

double CodeAssignment::col_sum_error() const {
    const double target = 1.0 / static_cast<double>(Q.cols());
    return (Q.colwise().sum().array() - target).abs().maxCoeff();
}

void validate_swav_config(const SwavConfig& cfg) {
    if (!(cfg.temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (cfg.sinkhorn_iters < 1) throw std::invalid_argument("sinkhorn_iters must be >= 1");
    if (cfg.n_prototypes < 1) throw std::invalid_argument("n_prototypes must be >= 1");
}

Eigen::MatrixXd prototype_scores(const Eigen::MatrixXd& features,
                                 const Prototypes& protos) {
    if (features.rows() != protos.C.rows()) {
        throw std::invalid_argument("prototype_scores: feature dimension mismatch");
    }
    require_unit_columns(features, "features");
    require_unit_columns(protos.C, "prototypes");
    Eigen::MatrixXd scores = protos.C.transpose() * features;
    return scores.cwiseMax(-1.0).cwiseMin(1.0);
}

CodeAssignment sinkhorn_codes(const Eigen::MatrixXd& scores, double epsilon,
                              int iters) {
    if (!scores.allFinite()) {
        throw std::invalid_argument("sinkhorn_codes: scores must be finite");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn_codes: epsilon must be > 0");
    if (iters < 1) throw std::invalid_argument("sinkhorn_codes: iters must be >= 1");
    const Eigen::Index k = scores.rows();
    const Eigen::Index b = scores.cols();
    if (k < 1 || b < 1) throw std::invalid_argument("sinkhorn_codes: empty scores");

    // Q = Diag(u) exp(S / eps) Diag(v); the max shift cancels in the scaling.
    Eigen::MatrixXd q = ((scores.array() - scores.maxCoeff()) / epsilon).exp();
    const double row_target = 1.0 / static_cast<double>(k);
    const double col_target = 1.0 / static_cast<double>(b);
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd row_sums = q.rowwise().sum();
        q.array().colwise() *= (row_target / row_sums.array());
        const Eigen::VectorXd col_sums = q.colwise().sum();
        q.array().rowwise() *= (col_target / col_sums.transpose().array());
    }
    return CodeAssignment{std::move(q)};
}

double code_entropy(const CodeAssignment& codes) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < codes.Q.size(); ++i) {
        const double p = codes.Q(i);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double swapped_pair_loss(const Eigen::VectorXd& z_t, const Eigen::VectorXd& z_s,
                         const Eigen::VectorXd& q_t, const Eigen::VectorXd& q_s,
                         const Prototypes& protos, double temperature) {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("swapped_pair_loss: temperature must be > 0");
    }
    if (q_t.size() != protos.C.cols() || q_s.size() != protos.C.cols()) {
        throw std::invalid_argument("swapped_pair_loss: code dimension mismatch");
    }
    if (q_t.minCoeff() < 0.0 || q_s.minCoeff() < 0.0) {
        throw std::invalid_argument("swapped_pair_loss: codes must be nonnegative");
    }
    const Eigen::VectorXd log_p_t = log_softmax_scaled(protos.C.transpose() * z_t, temperature);
    const Eigen::VectorXd log_p_s = log_softmax_scaled(protos.C.transpose() * z_s, temperature);
    return -q_s.dot(log_p_t) - q_t.dot(log_p_s);
}

SwavBatchResult batch_swav_loss(const std::vector<Eigen::MatrixXd>& view_features,
                                const Prototypes& protos, const SwavConfig& cfg) {
    validate_swav_config(cfg);
    if (view_features.size() < 2) {
        throw std::invalid_argument("batch_swav_loss: need at least 2 views per image");
    }
    const Eigen::Index b = view_features[0].cols();
    for (const auto& z : view_features) {
        if (z.cols() != b || z.rows() != protos.C.rows()) {
            throw std::invalid_argument("batch_swav_loss: inconsistent view shapes");
        }
    }
    SwavBatchResult result;
    result.codes.reserve(view_features.size());
    for (const auto& z : view_features) {
        result.codes.push_back(sinkhorn_codes(prototype_scores(z, protos),
                                              cfg.epsilon, cfg.sinkhorn_iters));
    }
    result.loss = batch_swav_loss_value(view_features, result.codes, protos,
                                        cfg.temperature);

    // Gradients with the codes held constant. For one cross-entropy term
    // l(z, q) = -q . log softmax(C^T z / tau):
    //   dl/dz = C (p - q) / tau,  dl/dC = z (p - q)^T / tau.
    const double tau = cfg.temperature;
    const double scale = 1.0 / static_cast<double>(b);
    result.feature_grads.assign(view_features.size(),
                                Eigen::MatrixXd::Zero(protos.C.rows(), b));
    result.prototype_grads = Eigen::MatrixXd::Zero(protos.C.rows(), protos.C.cols());
    for (size_t t = 0; t < view_features.size(); ++t) {
        for (size_t s = t + 1; s < view_features.size(); ++s) {
            for (Eigen::Index col = 0; col < b; ++col) {
                for (const auto& [zi, qi] : {std::pair{t, s}, std::pair{s, t}}) {
                    const Eigen::VectorXd z = view_features[zi].col(col);
                    // Columns of Q sum to 1/B; rescale to a probability vector.
                    const Eigen::VectorXd q =
                        static_cast<double>(b) * result.codes[qi].Q.col(col);
                    const Eigen::VectorXd log_p =
                        log_softmax_scaled(protos.C.transpose() * z, tau);
                    const Eigen::VectorXd diff = (log_p.array().exp().matrix() - q);
                    result.feature_grads[zi].col(col) +=
                        scale / tau * (protos.C * diff);
                    result.prototype_grads += scale / tau * (z * diff.transpose());
                }
            }
        }
    }
    return result;
}

double batch_swav_loss_value(const std::vector<Eigen::MatrixXd>& view_features,
                             const std::vector<CodeAssignment>& frozen_codes,
                             const Prototypes& protos, double temperature) {
    if (view_features.size() < 2 || frozen_codes.size() != view_features.size()) {
        throw std::invalid_argument("batch_swav_loss_value: need codes for >= 2 views");
    }
    const Eigen::Index b = view_features[0].cols();
    double loss = 0.0;
    for (size_t t = 0; t < view_features.size(); ++t) {
        for (size_t s = t + 1; s < view_features.size(); ++s) {
            for (Eigen::Index col = 0; col < b; ++col) {
                const Eigen::VectorXd q_t =
                    static_cast<double>(b) * frozen_codes[t].Q.col(col);
                const Eigen::VectorXd q_s =
                    static_cast<double>(b) * frozen_codes[s].Q.col(col);
                loss += swapped_pair_loss(view_features[t].col(col),
                                          view_features[s].col(col), q_t, q_s,
                                          protos, temperature);
            }
        }
    }
    return loss / static_cast<double>(b);
}

Image augment(const Image& image, const AugmentConfig& cfg, std::uint64_t seed) {
    validate_image(image);
    if (!(cfg.min_scale > 0.0) || cfg.max_scale < cfg.min_scale || cfg.max_scale > 1.0) {
        throw std::invalid_argument("augment: scale range must satisfy 0 < min <= max <= 1");
    }
    Rng rng(mix_seed(seed, 0x617567ULL)); // "aug"
    const int h = image.height, w = image.width;

    // Crop-and-resize. A full-frame crop at the output size is passed
    // through untouched so the all-off config is the exact identity.
    const double scale = rng.uniform(cfg.min_scale, cfg.max_scale);
    const int crop_h = std::max(2, static_cast<int>(std::lround(scale * h)));
    const int crop_w = std::max(2, static_cast<int>(std::lround(scale * w)));
    const int off_r = crop_h < h ? static_cast<int>(rng.uniform_index(
                                       static_cast<std::uint64_t>(h - crop_h + 1)))
                                 : 0;
    const int off_c = crop_w < w ? static_cast<int>(rng.uniform_index(
                                       static_cast<std::uint64_t>(w - crop_w + 1)))
                                 : 0;
    Image out(h, w);
    if (crop_h == h && crop_w == w) {
        out.pix = image.pix;
    } else {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                // Bilinear sample of the crop window.
                const double sy = off_r + (r + 0.5) * crop_h / h - 0.5;
                const double sx = off_c + (c + 0.5) * crop_w / w - 0.5;
                const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
                const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
                const int y1 = std::min(y0 + 1, h - 1);
                const int x1 = std::min(x0 + 1, w - 1);
                const double fy = std::clamp(sy - y0, 0.0, 1.0);
                const double fx = std::clamp(sx - x0, 0.0, 1.0);
                out.pix(r, c) = (1 - fy) * ((1 - fx) * image.pix(y0, x0) +
                                            fx * image.pix(y0, x1)) +
                                fy * ((1 - fx) * image.pix(y1, x0) +
                                      fx * image.pix(y1, x1));
            }
        }
    }
    if (cfg.flip_prob > 0.0 && rng.bernoulli(cfg.flip_prob)) {
        out.pix = out.pix.rowwise().reverse().eval();
    }
    if (cfg.brightness_jitter > 0.0) {
        out.pix.array() += rng.uniform(-cfg.brightness_jitter, cfg.brightness_jitter);
    }
    if (cfg.noise_sigma > 0.0) {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) out.pix(r, c) += cfg.noise_sigma * rng.normal();
        }
    }
    if (cfg.brightness_jitter > 0.0 || cfg.noise_sigma > 0.0) {
        out.pix = out.pix.cwiseMax(0.0).cwiseMin(1.0);
    }
    return out;
}

} // namespace facefill
