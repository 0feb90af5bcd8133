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

#include "facefill/encoder.hpp"

#include "facefill/rng.hpp"
#include "facefill/swav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace facefill {

namespace {

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out(int n) { return (n - 1) / kStride + 1; }

// im2col for a 3x3 stride-2 pad-1 convolution. Row layout: channel-major,
// then kernel row, then kernel column.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& input, int h, int w) {
    const int in_ch = static_cast<int>(input.rows());
    const int oh = conv_out(h), ow = conv_out(w);
    Eigen::MatrixXd patches = Eigen::MatrixXd::Zero(in_ch * kKernel * kKernel, oh * ow);
    for (int orow = 0; orow < oh; ++orow) {
        for (int ocol = 0; ocol < ow; ++ocol) {
            const int col = orow * ow + ocol;
            for (int dr = 0; dr < kKernel; ++dr) {
                const int ir = orow * kStride - kPad + dr;
                if (ir < 0 || ir >= h) continue;
                for (int dc = 0; dc < kKernel; ++dc) {
                    const int ic = ocol * kStride - kPad + dc;
                    if (ic < 0 || ic >= w) continue;
                    const int pos = ir * w + ic;
                    for (int ch = 0; ch < in_ch; ++ch) {
                        patches(ch * 9 + dr * 3 + dc, col) = input(ch, pos);
                    }
                }
            }
        }
    }
    return patches;
}

// Scatter-add of patch gradients back onto the input feature map.
void col2im(const Eigen::MatrixXd& dpatches, int in_ch, int h, int w,
            Eigen::MatrixXd& dinput) {
    const int oh = conv_out(h), ow = conv_out(w);
    dinput = Eigen::MatrixXd::Zero(in_ch, h * w);
    for (int orow = 0; orow < oh; ++orow) {
        for (int ocol = 0; ocol < ow; ++ocol) {
            const int col = orow * ow + ocol;
            for (int dr = 0; dr < kKernel; ++dr) {
                const int ir = orow * kStride - kPad + dr;
                if (ir < 0 || ir >= h) continue;
                for (int dc = 0; dc < kKernel; ++dc) {
                    const int ic = ocol * kStride - kPad + dc;
                    if (ic < 0 || ic >= w) continue;
                    const int pos = ir * w + ic;
                    for (int ch = 0; ch < in_ch; ++ch) {
                        dinput(ch, pos) += dpatches(ch * 9 + dr * 3 + dc, col);
                    }
                }
            }
        }
    }
}

Eigen::MatrixXd he_matrix(Rng& rng, int rows, int cols, double fan_in) {
    const double std_dev = std::sqrt(2.0 / fan_in);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = std_dev * rng.normal();
    }
    return m;
}

} // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
    if (cfg.input_h < 8 || cfg.input_w < 8 || cfg.feature_dim < 1 ||
        cfg.proj_dim < 1 || cfg.latent_dim < 1) {
        throw std::invalid_argument("init_encoder: invalid configuration");
    }
    EncoderParams p;
    p.cfg = cfg;
    Rng rng(mix_seed(seed, 0x656e63ULL)); // "enc"
    int in_ch = 1;
    for (int i = 0; i < 3; ++i) {
        const int out_ch = cfg.conv_channels[static_cast<size_t>(i)];
        p.conv[static_cast<size_t>(i)].in_ch = in_ch;
        p.conv[static_cast<size_t>(i)].out_ch = out_ch;
        p.conv[static_cast<size_t>(i)].W = he_matrix(rng, out_ch, in_ch * 9, in_ch * 9.0);
        p.conv[static_cast<size_t>(i)].b = Eigen::VectorXd::Zero(out_ch);
        in_ch = out_ch;
    }
    const int flat = cfg.flatten_dim();
    p.fc.W = he_matrix(rng, cfg.feature_dim, flat, flat);
    p.fc.b = Eigen::VectorXd::Zero(cfg.feature_dim);
    p.proj.W = he_matrix(rng, cfg.proj_dim, cfg.feature_dim, cfg.feature_dim);
    p.proj.b = Eigen::VectorXd::Zero(cfg.proj_dim);
    p.map1.W = he_matrix(rng, cfg.map_hidden[0], cfg.feature_dim, cfg.feature_dim);
    p.map1.b = Eigen::VectorXd::Zero(cfg.map_hidden[0]);
    p.map2.W = he_matrix(rng, cfg.map_hidden[1], cfg.map_hidden[0], cfg.map_hidden[0]);
    p.map2.b = Eigen::VectorXd::Zero(cfg.map_hidden[1]);
    // Final layer deliberately small-scale so fresh encoders start near the
    // mean shape.
    p.map3.W = he_matrix(rng, cfg.latent_dim, cfg.map_hidden[1], cfg.map_hidden[1] * 4.0);
    p.map3.b = Eigen::VectorXd::Zero(cfg.latent_dim);
    return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
    EncoderParams z = params;
    for (auto& c : z.conv) {
        c.W.setZero();
        c.b.setZero();
    }
    for (DenseLayer* d : {&z.fc, &z.proj, &z.map1, &z.map2, &z.map3}) {
        d->W.setZero();
        d->b.setZero();
    }
    return z;
}

namespace {

template <typename Fn>
void for_each_tensor(EncoderParams& p, Fn&& fn) {
    for (auto& c : p.conv) {
        fn(c.W);
        fn(c.b);
    }
    for (DenseLayer* d : {&p.fc, &p.proj, &p.map1, &p.map2, &p.map3}) {
        fn(d->W);
        fn(d->b);
    }
}

template <typename Fn>
void for_each_tensor(const EncoderParams& p, Fn&& fn) {
    for (const auto& c : p.conv) {
        fn(c.W);
        fn(c.b);
    }
    for (const DenseLayer* d : {&p.fc, &p.proj, &p.map1, &p.map2, &p.map3}) {
        fn(d->W);
        fn(d->b);
    }
}

} // namespace

long param_count(const EncoderParams& params) {
    long n = 0;
    for_each_tensor(params, [&](const auto& t) { n += static_cast<long>(t.size()); });
    return n;
}

Eigen::VectorXd to_flat(const EncoderParams& params) {
    Eigen::VectorXd flat(param_count(params));
    Eigen::Index off = 0;
    for_each_tensor(params, [&](const auto& t) {
        // Row-major element order for matrices.
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) flat(off++) = t(r, c);
        }
    });
    return flat;
}

void from_flat(EncoderParams& params, const Eigen::VectorXd& flat) {
    if (flat.size() != param_count(params)) {
        throw std::invalid_argument("from_flat: size mismatch");
    }
    Eigen::Index off = 0;
    for_each_tensor(params, [&](auto& t) {
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = flat(off++);
        }
    });
}

Eigen::VectorXd backbone_forward(const EncoderParams& params, const Image& image,
                                 BackboneTrace* trace) {
    const EncoderConfig& cfg = params.cfg;
    if (image.height != cfg.input_h || image.width != cfg.input_w) {
        throw std::invalid_argument("backbone_forward: image size does not match config");
    }
    // Channel-row feature map, spatial row-major.
    Eigen::MatrixXd fm(1, cfg.input_h * cfg.input_w);
    for (int r = 0; r < cfg.input_h; ++r) {
        for (int c = 0; c < cfg.input_w; ++c) fm(0, r * cfg.input_w + c) = image.pix(r, c);
    }
    int h = cfg.input_h, w = cfg.input_w;
    for (int i = 0; i < 3; ++i) {
        const ConvLayer& layer = params.conv[static_cast<size_t>(i)];
        Eigen::MatrixXd patches = im2col(fm, h, w);
        Eigen::MatrixXd pre = layer.W * patches;
        pre.colwise() += layer.b;
        if (trace) {
            ConvTrace& t = trace->conv[static_cast<size_t>(i)];
            t.input = fm;
            t.patches = std::move(patches);
            t.preact = pre;
            t.in_h = h;
            t.in_w = w;
        }
        fm = pre.cwiseMax(0.0); // ReLU
        h = conv_out(h);
        w = conv_out(w);
    }
    // Flatten channel-major.
    Eigen::VectorXd flat(fm.size());
    Eigen::Index off = 0;
    for (Eigen::Index ch = 0; ch < fm.rows(); ++ch) {
        for (Eigen::Index pos = 0; pos < fm.cols(); ++pos) flat(off++) = fm(ch, pos);
    }
    if (trace) trace->flat = flat;
    return params.fc.W * flat + params.fc.b;
}

void backbone_backward(const EncoderParams& params, const BackboneTrace& trace,
                       const Eigen::VectorXd& dfeature, EncoderParams& grads) {
    grads.fc.W += dfeature * trace.flat.transpose();
    grads.fc.b += dfeature;
    Eigen::VectorXd dflat = params.fc.W.transpose() * dfeature;

    const int oh3 = conv_out(trace.conv[2].in_h);
    const int ow3 = conv_out(trace.conv[2].in_w);
    const int ch3 = params.conv[2].out_ch;
    Eigen::MatrixXd dfm(ch3, oh3 * ow3);
    Eigen::Index off = 0;
    for (Eigen::Index ch = 0; ch < dfm.rows(); ++ch) {
        for (Eigen::Index pos = 0; pos < dfm.cols(); ++pos) dfm(ch, pos) = dflat(off++);
    }
    for (int i = 2; i >= 0; --i) {
        const ConvLayer& layer = params.conv[static_cast<size_t>(i)];
        const ConvTrace& t = trace.conv[static_cast<size_t>(i)];
        // Through the ReLU.
        Eigen::MatrixXd dpre =
            (t.preact.array() > 0.0).select(dfm, Eigen::MatrixXd::Zero(dfm.rows(), dfm.cols()));
        ConvLayer& g = grads.conv[static_cast<size_t>(i)];
        g.W += dpre * t.patches.transpose();
        g.b += dpre.rowwise().sum();
        const Eigen::MatrixXd dpatches = layer.W.transpose() * dpre;
        if (i > 0) {
            Eigen::MatrixXd dinput;
            col2im(dpatches, layer.in_ch, t.in_h, t.in_w, dinput);
            dfm = std::move(dinput);
        }
    }
}

Eigen::VectorXd map_forward(const EncoderParams& params,
                            const Eigen::VectorXd& feature, MapTrace* trace) {
    const Eigen::VectorXd pre1 = params.map1.W * feature + params.map1.b;
    const Eigen::VectorXd h1 = pre1.cwiseMax(0.0);
    const Eigen::VectorXd pre2 = params.map2.W * h1 + params.map2.b;
    const Eigen::VectorXd h2 = pre2.cwiseMax(0.0);
    if (trace) {
        trace->input = feature;
        trace->pre1 = pre1;
        trace->pre2 = pre2;
    }
    return params.map3.W * h2 + params.map3.b;
}

void map_backward(const EncoderParams& params, const MapTrace& trace,
                  const Eigen::VectorXd& dlatent, EncoderParams& grads,
                  Eigen::VectorXd& dfeature) {
    const Eigen::VectorXd h1 = trace.pre1.cwiseMax(0.0);
    const Eigen::VectorXd h2 = trace.pre2.cwiseMax(0.0);
    grads.map3.W += dlatent * h2.transpose();
    grads.map3.b += dlatent;
    Eigen::VectorXd dh2 = params.map3.W.transpose() * dlatent;
    Eigen::VectorXd dpre2 =
        (trace.pre2.array() > 0.0).select(dh2, Eigen::VectorXd::Zero(dh2.size()));
    grads.map2.W += dpre2 * h1.transpose();
    grads.map2.b += dpre2;
    Eigen::VectorXd dh1 = params.map2.W.transpose() * dpre2;
    Eigen::VectorXd dpre1 =
        (trace.pre1.array() > 0.0).select(dh1, Eigen::VectorXd::Zero(dh1.size()));
    grads.map1.W += dpre1 * trace.input.transpose();
    grads.map1.b += dpre1;
    dfeature = params.map1.W.transpose() * dpre1;
}

Feature forward_backbone(const EncoderParams& params, const Image& image) {
    validate_image(image);
    return Feature{backbone_forward(params, image, nullptr)};
}

Feature forward_projection(const EncoderParams& params, const Feature& feature) {
    if (feature.values.size() != params.proj.W.cols()) {
        throw std::invalid_argument("forward_projection: feature length mismatch");
    }
    return Feature{params.proj.W * feature.values + params.proj.b};
}

Feature project_unit(const Feature& feature) {
    const double n = feature.values.norm();
    if (!(n > 0.0) || !feature.values.allFinite()) {
        throw std::invalid_argument("project_unit: degenerate feature (zero norm)");
    }
    return Feature{feature.values / n};
}

LatentCode map_identity(const EncoderParams& params, const Feature& feature) {
    if (feature.values.size() != params.map1.W.cols()) {
        throw std::invalid_argument("map_identity: feature length mismatch");
    }
    return LatentCode{map_forward(params, feature.values, nullptr)};
}

Eigen::VectorXd unit_norm_backward(const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& dz) {
    const double n = p.norm();
    const Eigen::VectorXd z = p / n;
    return (dz - z * z.dot(dz)) / n;
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_tensor(std::ostream& out, const Eigen::MatrixXd& t) {
    write_u32le(out, static_cast<std::uint32_t>(t.rows()));
    write_u32le(out, static_cast<std::uint32_t>(t.cols()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = t;
    out.write(reinterpret_cast<const char*>(rm.data()),
              static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

Eigen::MatrixXd read_tensor(std::istream& in) {
    const std::uint32_t rows = read_u32le(in);
    const std::uint32_t cols = read_u32le(in);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rm.size()));
    if (!in) throw std::runtime_error("truncated checkpoint tensor");
    return rm;
}

} // namespace

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const Prototypes* protos) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("ENCP", 4);
    write_u32le(out, kCheckpointVersion);
    const EncoderConfig& c = params.cfg;
    for (int v : {c.input_h, c.input_w, c.conv_channels[0], c.conv_channels[1],
                  c.conv_channels[2], c.feature_dim, c.proj_dim, c.map_hidden[0],
                  c.map_hidden[1], c.latent_dim}) {
        write_u32le(out, static_cast<std::uint32_t>(v));
    }
    std::vector<Eigen::MatrixXd> tensors;
    for_each_tensor(params, [&](const auto& t) { tensors.push_back(t); });
    write_u32le(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) write_tensor(out, t);
    if (protos) {
        out.write("PROT", 4);
        write_u32le(out, static_cast<std::uint32_t>(protos->C.cols())); // K
        write_u32le(out, static_cast<std::uint32_t>(protos->C.rows())); // F
        // Column-major per the prototype section contract.
        out.write(reinterpret_cast<const char*>(protos->C.data()),
                  static_cast<std::streamsize>(sizeof(double) * protos->C.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

EncoderParams load_checkpoint(const std::string& path, Prototypes* protos) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ENCP", 4) != 0) {
        throw std::runtime_error("not an encoder checkpoint: " + path);
    }
    if (read_u32le(in) != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version in " + path);
    }
    EncoderConfig cfg;
    cfg.input_h = static_cast<int>(read_u32le(in));
    cfg.input_w = static_cast<int>(read_u32le(in));
    for (auto& ch : cfg.conv_channels) ch = static_cast<int>(read_u32le(in));
    cfg.feature_dim = static_cast<int>(read_u32le(in));
    cfg.proj_dim = static_cast<int>(read_u32le(in));
    for (auto& hsz : cfg.map_hidden) hsz = static_cast<int>(read_u32le(in));
    cfg.latent_dim = static_cast<int>(read_u32le(in));

    EncoderParams params = init_encoder(cfg, 0);
    constexpr std::uint32_t kExpectedTensors = 16; // 3 conv + 5 dense, W and b each
    if (read_u32le(in) != kExpectedTensors) {
        throw std::runtime_error("checkpoint tensor count mismatch in " + path);
    }
    bool shape_ok = true;
    for_each_tensor(params, [&](auto& t) {
        Eigen::MatrixXd loaded = read_tensor(in);
        if (loaded.rows() == t.rows() && loaded.cols() == t.cols()) {
            t = loaded;
        } else {
            shape_ok = false;
        }
    });
    if (!shape_ok) throw std::runtime_error("checkpoint tensor shape mismatch in " + path);

    if (protos) {
        char tag[4];
        in.read(tag, 4);
        if (!in || std::memcmp(tag, "PROT", 4) != 0) {
            throw std::runtime_error("checkpoint has no prototype section: " + path);
        }
        const std::uint32_t k = read_u32le(in);
        const std::uint32_t f = read_u32le(in);
        protos->C.resize(f, k);
        in.read(reinterpret_cast<char*>(protos->C.data()),
                static_cast<std::streamsize>(sizeof(double) * protos->C.size()));
        if (!in) throw std::runtime_error("truncated prototype section in " + path);
    }
    return params;
}

} // namespace facefill
