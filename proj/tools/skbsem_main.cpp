// Command-line front end for the knowledge-base-guided semantic
// communication simulator. Every verb reads the same JSON config file; see
// README.md for the schema and a worked example.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "skbsem/config.hpp"
#include "skbsem/kernels.hpp"
#include "skbsem/util.hpp"

namespace fs = std::filesystem;
using namespace skbsem;

namespace {

GlyphDataset load_data(const RunConfig& cfg) { return load_dataset_dir(cfg.paths.data_dir); }

std::string encoder_path(const RunConfig& cfg) { return cfg.paths.model_dir + "/encoder.skbm"; }
std::string cvae_path(const RunConfig& cfg, bool conditional) {
    return cfg.paths.model_dir + (conditional ? "/cvae.skbm" : "/cvae_unconditional.skbm");
}

void write_loss_trace(const std::string& path, const std::vector<double>& losses) {
    std::ofstream f(path, std::ios::trunc);
    f << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) f << i << "," << util::format_double(losses[i]) << "\n";
}

void require_file(const std::string& path, const std::string& hint) {
    if (!fs::exists(path))
        throw std::runtime_error("missing " + path + " — run '" + hint + "' first");
}

int cmd_gen_data(const RunConfig& cfg) {
    const GlyphDataset data = make_glyph_dataset(cfg.glyphs);
    export_dataset(cfg.paths.data_dir, data);
    std::printf("wrote %s: %zu classes x %zu attributes, %zu train / %zu test images (%zux%zux%zu)\n",
                cfg.paths.data_dir.c_str(), data.skb.class_count(), data.skb.attribute_count(), data.train.size(),
                data.test.size(), cfg.glyphs.width, cfg.glyphs.height, cfg.glyphs.channels);
    return 0;
}

int cmd_train_encoder(const RunConfig& cfg) {
    const GlyphDataset data = load_data(cfg);
    EncoderModel model(make_encoder_config(cfg, data));
    const TrainTrace trace = train_semantic_encoder(model, data.train, data.skb, cfg.encoder.train, cfg.encoder.seed);
    fs::create_directories(cfg.paths.model_dir);
    model.save(encoder_path(cfg));
    fs::create_directories(cfg.paths.results_dir);
    write_loss_trace(cfg.paths.results_dir + "/encoder_loss.csv", trace.epoch_mean_loss);
    const double acc = evaluate_classification(model, data.skb, data.test);
    std::printf("encoder trained: %zu epochs, final loss %.6f, held-out accuracy %.4f\n",
                trace.epoch_mean_loss.size(), trace.epoch_mean_loss.empty() ? 0.0 : trace.epoch_mean_loss.back(), acc);
    std::printf("saved %s\n", encoder_path(cfg).c_str());
    return 0;
}

int cmd_train_cvae(const RunConfig& cfg) {
    const GlyphDataset data = load_data(cfg);
    CvaeModel model(make_cvae_config(cfg, data));
    const CvaeTrainTrace trace = train_cvae(model, data.train, data.skb, cfg.cvae.train, cfg.cvae.seed);
    fs::create_directories(cfg.paths.model_dir);
    const std::string path = cvae_path(cfg, cfg.cvae.train.conditional);
    model.save(path);
    fs::create_directories(cfg.paths.results_dir);
    write_loss_trace(cfg.paths.results_dir + (cfg.cvae.train.conditional ? "/cvae_loss.csv" : "/cvae_baseline_loss.csv"),
                     trace.epoch_mean_loss);
    std::printf("cvae trained (%s): %zu epochs, final loss %.4f\n",
                cfg.cvae.train.conditional ? "conditional" : "unconditional", trace.epoch_mean_loss.size(),
                trace.epoch_mean_loss.empty() ? 0.0 : trace.epoch_mean_loss.back());
    std::printf("saved %s\n", path.c_str());
    return 0;
}

void print_run(const RunResult& result) {
    std::size_t inf_count = 0;
    const double mean_psnr = result.record.mean_psnr(&inf_count);
    std::printf("mode %s (test CR %.5f, trained CR %.5f), %zu wire bytes/image\n", to_string(result.mode).c_str(),
                result.test_cr, result.trained_cr, result.wire_bytes_per_image);
    std::printf("classification accuracy %.4f, semantic accuracy %.4f\n", result.record.classification_accuracy(),
                result.record.mean_semantic_accuracy());
    std::printf("mean PSNR %.2f dB (%zu infinite), mean SSIM %.4f\n", mean_psnr, inf_count, result.record.mean_ssim());
}

int cmd_run(const RunConfig& cfg, bool baseline) {
    const GlyphDataset data = load_data(cfg);
    require_file(encoder_path(cfg), "train-encoder");
    EncoderModel encoder(make_encoder_config(cfg, data));
    encoder.load(encoder_path(cfg));

    CvaeModel cvae(make_cvae_config(cfg, data));
    RunResult result;
    if (baseline) {
        require_file(cvae_path(cfg, false), "train-cvae with cvae.conditional=false");
        cvae.load(cvae_path(cfg, false));
        result = run_vanilla_baseline(cvae, encoder, data.skb, cfg.channel, data.test, cfg.run.seed);
    } else {
        require_file(cvae_path(cfg, true), "train-cvae");
        cvae.load(cvae_path(cfg, true));
        result = run_end_to_end(encoder, cvae, data.skb, make_rate_config(cfg, data), cfg.channel, data.test,
                                cfg.run.seed);
    }

    fs::create_directories(cfg.paths.results_dir);
    const std::string tag = baseline ? "baseline" : "proposed";
    write_eval_csv(cfg.paths.results_dir + "/eval_" + tag + ".csv", result.record);
    const std::string img_dir = cfg.paths.results_dir + "/images_" + tag;
    fs::create_directories(img_dir);
    char name[64];
    for (std::size_t i = 0; i < std::min(cfg.run.dump_images, result.outputs.size()); ++i) {
        std::snprintf(name, sizeof(name), "%s/out_%05zu.skbi", img_dir.c_str(), i);
        save_image(name, result.outputs[i]);
    }
    print_run(result);
    std::printf("wrote %s/eval_%s.csv\n", cfg.paths.results_dir.c_str(), tag.c_str());
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    const GlyphDataset data = load_data(cfg);
    require_file(encoder_path(cfg), "train-encoder");
    require_file(cvae_path(cfg, true), "train-cvae");
    EncoderModel encoder(make_encoder_config(cfg, data));
    encoder.load(encoder_path(cfg));
    CvaeModel cvae(make_cvae_config(cfg, data));
    cvae.load(cvae_path(cfg, true));

    CvaeModel baseline(make_cvae_config(cfg, data));
    const CvaeModel* baseline_ptr = nullptr;
    if (cfg.sweep_grid.include_baseline) {
        require_file(cvae_path(cfg, false), "train-cvae with cvae.conditional=false");
        baseline.load(cvae_path(cfg, false));
        baseline_ptr = &baseline;
    }

    const auto rows = sweep(encoder, cvae, baseline_ptr, data.skb, make_rate_config(cfg, data), data.test,
                            cfg.sweep_grid);
    fs::create_directories(cfg.paths.results_dir);
    write_sweep_csv(cfg.paths.results_dir + "/sweep.csv", rows);
    std::printf("wrote %s/sweep.csv (%zu rows)\n", cfg.paths.results_dir.c_str(), rows.size());
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    AblationConfig ab;
    ab.attribute_counts = cfg.ablate.attribute_counts;
    ab.seeds = cfg.ablate.seeds;
    ab.base_spec = cfg.glyphs;
    ab.base_spec.classes = cfg.ablate.classes;
    ab.base_spec.train_per_class = cfg.ablate.train_per_class;
    ab.base_spec.test_per_class = cfg.ablate.test_per_class;
    ab.train = cfg.encoder.train;
    ab.train.epochs = cfg.ablate.epochs;
    ab.encoder_template.hidden = cfg.ablate.hidden;
    ab.encoder_template.activation = nn::activation_from_string(cfg.encoder.activation);

    const auto rows = ablate_skb(ab);
    fs::create_directories(cfg.paths.results_dir);
    write_ablation_csv(cfg.paths.results_dir + "/ablation.csv", rows);

    for (std::size_t d : ab.attribute_counts) {
        double acc = 0.0, sem = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.attribute_count == d) {
                acc += r.classification_accuracy;
                sem += r.semantic_accuracy;
                ++n;
            }
        std::printf("d=%zu: mean classification %.4f, mean semantic %.4f over %zu seeds\n", d,
                    acc / static_cast<double>(n), sem / static_cast<double>(n), n);
    }
    std::printf("wrote %s/ablation.csv\n", cfg.paths.results_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-base-guided generative semantic communication simulator"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    app.add_option("-c,--config", config_path, "JSON run configuration (defaults apply when omitted)");
    app.add_option("--threads", threads, "cap OpenMP threads (0 = all)");

    auto* gen = app.add_subcommand("gen-data", "generate the glyph dataset and export it");
    auto* tenc = app.add_subcommand("train-encoder", "train the semantic encoder");
    auto* tcvae = app.add_subcommand("train-cvae", "train the generative codec");
    auto* run = app.add_subcommand("run", "end-to-end evaluation on the test set");
    bool run_baseline = false;
    run->add_flag("--baseline", run_baseline, "run the vanilla (unconditional) variant instead");
    auto* sw = app.add_subcommand("sweep", "SNR x CR x seed evaluation grid");
    auto* ab = app.add_subcommand("ablate-skb", "retrain across attribute-vector sizes");

    CLI11_PARSE(app, argc, argv);

    try {
        kernels::set_max_threads(threads);
        const RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (tenc->parsed()) return cmd_train_encoder(cfg);
        if (tcvae->parsed()) return cmd_train_cvae(cfg);
        if (run->parsed()) return cmd_run(cfg, run_baseline);
        if (sw->parsed()) return cmd_sweep(cfg);
        if (ab->parsed()) return cmd_ablate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
