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

#include "facefill/cli.hpp"

#include "facefill/dataset.hpp"
#include "facefill/mesh_io.hpp"
#include "facefill/runio.hpp"
#include "facefill/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace facefill {

namespace {

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Options shared by every subcommand (the spec'd common flag set).
struct CommonOpts {
    std::uint64_t seed = 1;
    double data_fraction = 1.0;
    int epochs = 50;
    int batch_size = 50;
    double lr = 1e-3;
    std::string out = "out";
    int jobs = 1;
    bool force = false;
};

void add_common_flags(CLI::App* sub, CommonOpts& o) {
    sub->set_config("--config", "", "Flat key=value config file (flags win)");
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--data-fraction", o.data_fraction,
                    "Fraction of training images to use")
        ->capture_default_str();
    sub->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--batch-size", o.batch_size, "Batch size")->capture_default_str();
    sub->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", o.jobs, "Worker threads for data generation and evaluation")
        ->capture_default_str();
    sub->add_flag("--force", o.force, "Override safety checks (non-watertight STL)");
}

class ManifestScope {
public:
    ManifestScope(std::string command, const CommonOpts& opts)
        : start_(std::chrono::steady_clock::now()) {
        manifest_.command = std::move(command);
        manifest_.seed = opts.seed;
        config("seed", std::to_string(opts.seed));
        config("data_fraction", fmt6(opts.data_fraction));
        config("epochs", std::to_string(opts.epochs));
        config("batch_size", std::to_string(opts.batch_size));
        config("lr", fmt6(opts.lr));
        config("out", opts.out);
        config("jobs", std::to_string(opts.jobs));
        config("force", opts.force ? "true" : "false");
    }

    void config(const std::string& key, const std::string& value) {
        manifest_.config[key] = value;
    }
    void input(const std::string& path) {
        manifest_.input_hashes[path] = file_content_hash(path);
    }
    void output(const std::string& path) { manifest_.outputs.push_back(path); }

    void write(const std::string& dir) {
        manifest_.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                .count();
        fs::create_directories(dir);
        write_run_manifest(manifest_, (fs::path(dir) / "run_manifest.json").string());
    }

private:
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

RegionWeights load_region_weights(const std::string& path, int n_vertices) {
    if (path.empty()) return RegionWeights::uniform(n_vertices);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open region weights: " + path);
    RegionWeights weights{Eigen::VectorXd(n_vertices)};
    double v = 0.0;
    Eigen::Index i = 0;
    while (in >> v) {
        if (i >= n_vertices) throw std::runtime_error("too many region weights in " + path);
        weights.w(i++) = v;
    }
    if (i != n_vertices) throw std::runtime_error("too few region weights in " + path);
    return weights;
}

TrainConfig make_train_config(const CommonOpts& o, TrainMode mode) {
    TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch_size;
    cfg.epochs = o.epochs;
    cfg.seed = o.seed;
    cfg.mode = mode;
    cfg.data_fraction = o.data_fraction;
    return cfg;
}

// gen-data ------------------------------------------------------------------

struct GenDataOpts {
    CommonOpts common;
    int identities = 200;
    int lights = 3;
    int resolution = 64;
    int n_vertices = 642;
    int latent_dim = 16;
    double amplitude = 0.5;
    double wound_depth = 0.25;
    bool undamaged = false;
};

int run_gen_data(const GenDataOpts& o) {
    ManifestScope scope("gen-data", o.common);
    scope.config("identities", std::to_string(o.identities));
    scope.config("lights", std::to_string(o.lights));
    scope.config("resolution", std::to_string(o.resolution));
    scope.config("n_vertices", std::to_string(o.n_vertices));
    scope.config("latent_dim", std::to_string(o.latent_dim));
    scope.config("amplitude", fmt6(o.amplitude));
    scope.config("wound_depth", fmt6(o.wound_depth));
    scope.config("undamaged", o.undamaged ? "true" : "false");

    const HeadModel model =
        synth_head_model(o.common.seed, o.n_vertices, o.latent_dim, o.amplitude);
    CorpusConfig cfg;
    cfg.n_identities = o.identities;
    cfg.lights_per_sample = o.lights;
    cfg.resolution = o.resolution;
    cfg.wound_depth = o.wound_depth;
    cfg.render_damaged = !o.undamaged;
    const Corpus corpus = build_corpus(model, cfg, o.common.seed, o.common.jobs);
    save_corpus(corpus, o.common.out);
    scope.output((fs::path(o.common.out) / "manifest.json").string());
    scope.write(o.common.out);
    std::cout << "wrote corpus with " << o.identities << " identities to "
              << o.common.out << "\n";
    return 0;
}

// pretrain ------------------------------------------------------------------

struct PretrainOpts {
    CommonOpts common;
    std::string data;
    int prototypes = 30;
    double temperature = 0.1;
    double epsilon = 0.05;
    int sinkhorn_iters = 3;
};

int run_pretrain(const PretrainOpts& o) {
    ManifestScope scope("pretrain", o.common);
    scope.config("data", o.data);
    scope.config("prototypes", std::to_string(o.prototypes));
    scope.config("temperature", fmt6(o.temperature));
    scope.config("epsilon", fmt6(o.epsilon));
    scope.config("sinkhorn_iters", std::to_string(o.sinkhorn_iters));
    scope.input((fs::path(o.data) / "manifest.json").string());
    scope.input((fs::path(o.data) / "basis.mbas").string());

    const Corpus corpus = load_corpus(o.data);
    PipelineSettings settings = default_pipeline_settings(corpus);
    settings.swav.n_prototypes = o.prototypes;
    settings.swav.temperature = o.temperature;
    settings.swav.epsilon = o.epsilon;
    settings.swav.sinkhorn_iters = o.sinkhorn_iters;

    EncoderParams params =
        init_encoder(settings.encoder, mix_seed(o.common.seed, 0x696e6974ULL));
    Prototypes protos = init_prototypes(settings.encoder.proj_dim, o.prototypes,
                                        mix_seed(o.common.seed, 0x70726f74ULL));
    const TrainConfig cfg = make_train_config(o.common, TrainMode::pretrain);
    const PretrainResult result =
        pretrain_ssl(corpus, params, protos, cfg, settings.swav, settings.augment);

    fs::create_directories(o.common.out);
    const std::string ckpt = (fs::path(o.common.out) / "checkpoint.encp").string();
    const std::string curve = (fs::path(o.common.out) / "pretrain_loss.csv").string();
    save_checkpoint(ckpt, result.params, &result.protos);
    write_loss_csv(curve, result.loss_curve, nullptr);
    scope.output(ckpt);
    scope.output(curve);
    scope.write(o.common.out);
    std::cout << "pretrain final loss " << fmt6(result.loss_curve.back()) << "\n";
    return 0;
}

// finetune ------------------------------------------------------------------

struct FinetuneOpts {
    CommonOpts common;
    std::string data;
    std::string init;
    std::string region_weights;
};

int run_finetune(const FinetuneOpts& o) {
    ManifestScope scope("finetune", o.common);
    scope.config("data", o.data);
    scope.config("init", o.init);
    scope.config("region_weights", o.region_weights);
    scope.input((fs::path(o.data) / "manifest.json").string());
    scope.input((fs::path(o.data) / "basis.mbas").string());
    if (!o.init.empty()) scope.input(o.init);

    const Corpus corpus = load_corpus(o.data);
    PipelineSettings settings = default_pipeline_settings(corpus);
    EncoderParams params =
        o.init.empty()
            ? init_encoder(settings.encoder, mix_seed(o.common.seed, 0x696e6974ULL))
            : load_checkpoint(o.init);
    const RegionWeights weights =
        load_region_weights(o.region_weights, corpus.basis.n_vertices());
    const TrainConfig cfg = make_train_config(o.common, TrainMode::finetune);
    const FinetuneResult result =
        finetune(corpus, params, corpus.basis, weights, cfg);

    fs::create_directories(o.common.out);
    const std::string ckpt = (fs::path(o.common.out) / "checkpoint.encp").string();
    const std::string curve = (fs::path(o.common.out) / "finetune_loss.csv").string();
    save_checkpoint(ckpt, result.params);
    write_loss_csv(curve, result.train_curve, &result.val_curve);
    scope.output(ckpt);
    scope.output(curve);
    scope.write(o.common.out);
    std::cout << "finetune final train loss " << fmt6(result.train_curve.back())
              << " val loss " << fmt6(result.val_curve.back()) << "\n";
    return 0;
}

// eval ----------------------------------------------------------------------

struct EvalOpts {
    CommonOpts common;
    std::string data;
    std::string ckpt;
    std::string split = "test";
    std::string pred;
    std::string gt;
    std::string watertight_check;
    std::string deviation_csv;
    std::string deviation_obj;
};

int run_eval(const EvalOpts& o) {
    ManifestScope scope("eval", o.common);
    if (!o.watertight_check.empty()) {
        scope.input(o.watertight_check);
        const TriangleMesh mesh = import_obj(o.watertight_check);
        const WatertightReport report = check_watertight(mesh);
        std::cout << "watertight=" << (report.watertight ? "true" : "false") << "\n";
        for (const auto& [a, b] : report.boundary_edges) {
            std::cout << "boundary_edge " << a << " " << b << "\n";
        }
        for (const auto& [a, b] : report.nonmanifold_edges) {
            std::cout << "nonmanifold_edge " << a << " " << b << "\n";
        }
        for (const auto& [a, b] : report.misoriented_edges) {
            std::cout << "misoriented_edge " << a << " " << b << "\n";
        }
        scope.write(o.common.out);
        return report.watertight ? 0 : 2;
    }
    if (!o.pred.empty() || !o.gt.empty()) {
        if (o.pred.empty() || o.gt.empty()) {
            throw std::runtime_error("eval: --pred and --gt must be given together");
        }
        scope.input(o.pred);
        scope.input(o.gt);
        const TriangleMesh pred = import_obj(o.pred);
        const TriangleMesh gt = import_obj(o.gt);
        const double dist = mean_geometric_distance(pred, gt);
        std::cout << "mean_distance=" << fmt6(dist) << "\n";
        if (!o.deviation_csv.empty() || !o.deviation_obj.empty()) {
            const auto dev = per_vertex_deviation(pred, gt);
            if (!o.deviation_csv.empty()) {
                export_deviation_csv(dev, o.deviation_csv);
                scope.output(o.deviation_csv);
            }
            if (!o.deviation_obj.empty()) {
                export_deviation_obj(pred, dev, o.deviation_obj);
                scope.output(o.deviation_obj);
            }
        }
        scope.write(o.common.out);
        return 0;
    }
    if (o.data.empty() || o.ckpt.empty()) {
        throw std::runtime_error(
            "eval: need --data with --ckpt, or --pred with --gt, or --watertight-check");
    }
    scope.input((fs::path(o.data) / "manifest.json").string());
    scope.input(o.ckpt);
    const Corpus corpus = load_corpus(o.data);
    const EncoderParams params = load_checkpoint(o.ckpt);
    const double dist = evaluate_mean_distance(corpus, params, corpus.basis,
                                               split_from_name(o.split), o.common.jobs);
    std::cout << "mean_distance=" << fmt6(dist) << "\n";
    scope.write(o.common.out);
    return 0;
}

// repair --------------------------------------------------------------------

struct RepairOpts {
    CommonOpts common;
    std::string in;
};

int run_repair(const RepairOpts& o) {
    ManifestScope scope("repair", o.common);
    scope.config("in", o.in);
    scope.input(o.in);
    TriangleMesh mesh = import_obj(o.in);
    mesh = remove_detached_components(mesh);
    mesh = fill_holes(mesh);
    fs::create_directories(o.common.out);
    const std::string out_path = (fs::path(o.common.out) / "repaired.obj").string();
    export_obj(mesh, out_path);
    scope.output(out_path);
    scope.write(o.common.out);
    std::cout << "repaired mesh watertight="
              << (is_watertight(mesh) ? "true" : "false") << " -> " << out_path
              << "\n";
    return 0;
}

// extract -------------------------------------------------------------------

struct ExtractOpts {
    CommonOpts common;
    std::string damaged;
    std::string recon;
    double threshold = 0.0; // 0 = auto (2x median deviation)
};

int run_extract(const ExtractOpts& o) {
    ManifestScope scope("extract", o.common);
    scope.config("damaged", o.damaged);
    scope.config("recon", o.recon);
    scope.input(o.damaged);
    scope.input(o.recon);
    const TriangleMesh damaged = import_obj(o.damaged);
    const TriangleMesh recon = import_obj(o.recon);

    double threshold = o.threshold;
    if (!(threshold > 0.0)) {
        auto dev = per_vertex_deviation(damaged, recon);
        std::vector<double> sorted = dev;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                         sorted.end());
        const double median = sorted[sorted.size() / 2];
        threshold = median > 0.0 ? 2.0 * median : 1e-9;
    }
    scope.config("threshold", fmt6(threshold));

    const FillingResult result = extract_filling(damaged, recon, threshold);
    fs::create_directories(o.common.out);
    if (result.empty_wound) {
        std::cout << "warning: no wound region above threshold "
                  << fmt6(threshold) << "; nothing extracted\n";
        scope.write(o.common.out);
        return 0;
    }
    const std::string filling_obj = (fs::path(o.common.out) / "filling.obj").string();
    const std::string filling_stl = (fs::path(o.common.out) / "filling.stl").string();
    const std::string labeled = (fs::path(o.common.out) / "labeled.obj").string();
    const std::string labels_csv = (fs::path(o.common.out) / "labels.csv").string();
    export_obj(result.filling, filling_obj);
    export_stl(result.filling, filling_stl, o.common.force);
    export_labeled_obj(recon, result.labels, labeled);
    {
        std::ofstream out(labels_csv);
        out << "vertex_index,label\n";
        for (size_t i = 0; i < result.labels.size(); ++i) {
            out << i << ',' << result.labels[i] << '\n';
        }
    }
    for (const auto& p : {filling_obj, filling_stl, labeled, labels_csv}) {
        scope.output(p);
    }
    scope.write(o.common.out);
    std::cout << "extracted filling with " << result.filling.vertex_count()
              << " vertices (watertight="
              << (is_watertight(result.filling) ? "true" : "false") << ")\n";
    return 0;
}

// export --------------------------------------------------------------------

struct ExportOpts {
    CommonOpts common;
    std::string in;
    std::string to;
};

int run_export(const ExportOpts& o) {
    ManifestScope scope("export", o.common);
    scope.config("in", o.in);
    scope.config("to", o.to);
    scope.input(o.in);
    const TriangleMesh mesh = import_obj(o.in);
    const std::string ext = fs::path(o.to).extension().string();
    if (ext == ".stl") {
        export_stl(mesh, o.to, o.common.force);
    } else if (ext == ".obj") {
        export_obj(mesh, o.to);
    } else {
        throw std::runtime_error("export: unsupported extension '" + ext + "'");
    }
    scope.output(o.to);
    scope.write(o.common.out);
    std::cout << "exported " << o.to << "\n";
    return 0;
}

// report --------------------------------------------------------------------

struct ReportOpts {
    CommonOpts common;
    std::string data;
};

int run_report(const ReportOpts& o) {
    ManifestScope scope("report", o.common);
    scope.config("data", o.data);
    scope.input((fs::path(o.data) / "manifest.json").string());
    const Corpus corpus = load_corpus(o.data);

    PipelineSettings settings = default_pipeline_settings(corpus);
    settings.finetune = make_train_config(o.common, TrainMode::finetune);
    settings.pretrain = make_train_config(o.common, TrainMode::pretrain);

    fs::create_directories(o.common.out);
    std::string csv = "method,mean_distance\n";
    {
        const PipelineResult transfer =
            run_transfer(corpus, settings, o.common.seed, o.common.jobs);
        write_loss_csv((fs::path(o.common.out) / "curves_transfer.csv").string(),
                       transfer.train_curve, &transfer.val_curve);
        csv += "transfer," + fmt6(transfer.test_mean_distance) + "\n";
    }
    for (const auto& [frac, name] :
         {std::pair{0.2, std::string("ssl-20")}, std::pair{1.0, std::string("ssl-100")}}) {
        const PipelineResult ssl =
            run_ssl(corpus, settings, o.common.seed, frac, o.common.jobs);
        write_loss_csv(
            (fs::path(o.common.out) / ("curves_" + name + ".csv")).string(),
            ssl.train_curve, &ssl.val_curve);
        write_loss_csv(
            (fs::path(o.common.out) / ("pretrain_" + name + ".csv")).string(),
            ssl.pretrain_curve, nullptr);
        csv += name + "," + fmt6(ssl.test_mean_distance) + "\n";
    }
    const std::string report_path = (fs::path(o.common.out) / "report.csv").string();
    atomic_write_file(report_path, csv);
    scope.output(report_path);
    scope.write(o.common.out);
    std::cout << csv;
    return 0;
}

} // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Face reconstruction and wound-filling extraction pipeline"};
    app.require_subcommand(1);

    GenDataOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic corpus");
    add_common_flags(gen_cmd, gen.common);
    gen_cmd->add_option("--identities", gen.identities, "Number of identities")
        ->capture_default_str();
    gen_cmd->add_option("--lights", gen.lights, "Renders per identity")
        ->capture_default_str();
    gen_cmd->add_option("--resolution", gen.resolution, "Render resolution")
        ->capture_default_str();
    gen_cmd->add_option("--n-vertices", gen.n_vertices, "Head mesh vertex count")
        ->capture_default_str();
    gen_cmd->add_option("--latent-dim", gen.latent_dim, "Decoder latent dimension")
        ->capture_default_str();
    gen_cmd->add_option("--amplitude", gen.amplitude, "Basis column norm")
        ->capture_default_str();
    gen_cmd->add_option("--wound-depth", gen.wound_depth, "Crater depth")
        ->capture_default_str();
    gen_cmd->add_flag("--undamaged", gen.undamaged,
                      "Render the pre-injury meshes instead of the wounded ones");

    PretrainOpts pre;
    auto* pre_cmd = app.add_subcommand("pretrain", "Self-supervised pretraining");
    add_common_flags(pre_cmd, pre.common);
    pre_cmd->add_option("--data", pre.data, "Corpus directory")->required();
    pre_cmd->add_option("--prototypes", pre.prototypes, "Number of prototypes")
        ->capture_default_str();
    pre_cmd->add_option("--temperature", pre.temperature, "Softmax temperature")
        ->capture_default_str();
    pre_cmd->add_option("--epsilon", pre.epsilon, "Entropy regularization")
        ->capture_default_str();
    pre_cmd->add_option("--sinkhorn-iters", pre.sinkhorn_iters,
                        "Sinkhorn iterations per batch")
        ->capture_default_str();

    FinetuneOpts fin;
    auto* fin_cmd = app.add_subcommand("finetune", "Supervised fine-tuning");
    add_common_flags(fin_cmd, fin.common);
    fin_cmd->add_option("--data", fin.data, "Corpus directory")->required();
    fin_cmd->add_option("--init", fin.init, "Checkpoint to start from");
    fin_cmd->add_option("--region-weights", fin.region_weights,
                        "Per-vertex weight file (one weight per line)");

    EvalOpts ev;
    auto* ev_cmd = app.add_subcommand("eval", "Evaluate meshes or checkpoints");
    add_common_flags(ev_cmd, ev.common);
    ev_cmd->add_option("--data", ev.data, "Corpus directory");
    ev_cmd->add_option("--ckpt", ev.ckpt, "Encoder checkpoint");
    ev_cmd->add_option("--split", ev.split, "Split to evaluate (train/validation/test)")
        ->capture_default_str();
    ev_cmd->add_option("--pred", ev.pred, "Predicted mesh (OBJ)");
    ev_cmd->add_option("--gt", ev.gt, "Ground-truth mesh (OBJ)");
    ev_cmd->add_option("--watertight-check", ev.watertight_check,
                       "Mesh to check for watertightness");
    ev_cmd->add_option("--deviation-csv", ev.deviation_csv,
                       "Write per-vertex deviations to this CSV");
    ev_cmd->add_option("--deviation-obj", ev.deviation_obj,
                       "Write a deviation-colored OBJ here");

    RepairOpts rep;
    auto* rep_cmd =
        app.add_subcommand("repair", "Remove detached components and fill holes");
    add_common_flags(rep_cmd, rep.common);
    rep_cmd->add_option("--in", rep.in, "Input mesh (OBJ)")->required();

    ExtractOpts ext;
    auto* ext_cmd = app.add_subcommand("extract", "Extract the wound filling");
    add_common_flags(ext_cmd, ext.common);
    ext_cmd->add_option("--damaged", ext.damaged, "Damaged mesh (OBJ)")->required();
    ext_cmd->add_option("--recon", ext.recon, "Reconstructed mesh (OBJ)")->required();
    ext_cmd->add_option("--threshold", ext.threshold,
                        "Deviation threshold (default: 2x median)");

    ExportOpts exp;
    auto* exp_cmd = app.add_subcommand("export", "Convert meshes (OBJ/STL)");
    add_common_flags(exp_cmd, exp.common);
    exp_cmd->add_option("--in", exp.in, "Input mesh (OBJ)")->required();
    exp_cmd->add_option("--to", exp.to, "Output path (.obj or .stl)")->required();

    ReportOpts rpt;
    auto* rpt_cmd = app.add_subcommand(
        "report", "Run the transfer/ssl-20/ssl-100 pipelines and tabulate");
    add_common_flags(rpt_cmd, rpt.common);
    rpt_cmd->add_option("--data", rpt.data, "Corpus directory")->required();

    int rc = 0;
    gen_cmd->callback([&] { rc = run_gen_data(gen); });
    pre_cmd->callback([&] { rc = run_pretrain(pre); });
    fin_cmd->callback([&] { rc = run_finetune(fin); });
    ev_cmd->callback([&] { rc = run_eval(ev); });
    rep_cmd->callback([&] { rc = run_repair(rep); });
    ext_cmd->callback([&] { rc = run_extract(ext); });
    exp_cmd->callback([&] { rc = run_export(exp); });
    rpt_cmd->callback([&] { rc = run_report(rpt); });

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

} // namespace facefill
