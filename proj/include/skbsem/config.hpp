#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skbsem/channel.hpp"
#include "skbsem/cvae.hpp"
#include "skbsem/dataset.hpp"
#include "skbsem/encoder.hpp"
#include "skbsem/pipeline.hpp"

namespace skbsem {

// One JSON file drives every CLI verb. Unknown keys are rejected; missing
// keys fall back to the defaults below. See README for the schema.
struct RunConfig {
    struct Paths {
        std::string data_dir = "out/data";
        std::string model_dir = "out/models";
        std::string results_dir = "out/results";
    } paths;

    GlyphSpec glyphs;

    struct Encoder {
        std::size_t hidden = 256;
        std::string activation = "relu";
        EncoderTrainConfig train;
        std::uint64_t seed = 7;
    } encoder;

    struct Cvae {
        std::vector<std::size_t> group_widths = {8, 8};
        std::size_t cond_embed = 16;
        std::size_t hidden = 64;
        std::size_t decoder_hidden = 128;
        std::string activation = "relu";
        std::string likelihood = "bernoulli";
        double gaussian_sigma = 0.1;
        double sigma_floor = 1e-6;
        CvaeTrainConfig train;
        std::uint64_t seed = 9;
    } cvae;

    ChannelConfig channel;

    struct Rate {
        double test_cr = 0.05;
    } rate;

    struct Run {
        std::uint64_t seed = 42;
        std::size_t dump_images = 8;
    } run;

    SweepGrid sweep_grid{{0.0, 2.0, 4.0, 6.0, 8.0, 10.0}, {0.05}, {42}, false};

    struct Ablate {
        std::vector<std::size_t> attribute_counts = {2, 3, 6, 12};
        std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
        std::size_t classes = 4;
        std::size_t train_per_class = 60;
        std::size_t test_per_class = 15;
        std::size_t hidden = 128;
        std::size_t epochs = 12;
    } ablate;
};

RunConfig load_config(const std::string& path);
RunConfig default_config();

// Derived model configurations, dimensioned from an actual dataset.
EncoderConfig make_encoder_config(const RunConfig& cfg, const GlyphDataset& data);
CvaeConfig make_cvae_config(const RunConfig& cfg, const GlyphDataset& data);
RateConfig make_rate_config(const RunConfig& cfg, const GlyphDataset& data);

}  // namespace skbsem
