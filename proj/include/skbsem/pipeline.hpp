#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skbsem/channel.hpp"
#include "skbsem/cvae.hpp"
#include "skbsem/dataset.hpp"
#include "skbsem/encoder.hpp"
#include "skbsem/metrics.hpp"
#include "skbsem/skb.hpp"

namespace skbsem {

// Compression-rate bookkeeping. The codec was trained for
// trained_cr = (index_symbols + latent_symbols) / (W*H*C); the rate available
// at test time is test_cr. test_cr below trained_cr leaves room only for the
// index, so the receiver generates; otherwise the latent is transmitted too
// and the receiver reconstructs.
struct RateConfig {
    double test_cr = 0.05;
    std::size_t index_symbols = 1;
    std::size_t latent_symbols = 16;
    std::size_t width = 16, height = 16, channels = 1;

    double trained_cr() const;
    void validate() const;
};

enum class TransmissionMode { Generate, Reconstruct };

TransmissionMode select_mode(const RateConfig& rate);
std::string to_string(TransmissionMode mode);

struct RunResult {
    TransmissionMode mode = TransmissionMode::Reconstruct;
    double test_cr = 0.0;
    double trained_cr = 0.0;
    std::size_t wire_bytes_per_image = 0;
    EvalRecord record;
    std::vector<std::size_t> predicted;   // receiver-side class = transmitted index
    std::vector<ImageTensor> outputs;     // generated or reconstructed images
};

// Algorithm-1 end-to-end pass over a test set: encode, SKB-correct, frame,
// transmit (index error-free, latent through AWGN), decode per mode, score.
// Per-image noise seeds derive from (seed, image ordinal), so results do not
// depend on evaluation order.
RunResult run_end_to_end(const EncoderModel& encoder, const CvaeModel& cvae, const AttributeMatrix& skb,
                         const RateConfig& rate, const ChannelConfig& channel, const SampleSet& test,
                         std::uint64_t seed);

// Vanilla variant: unconditional VAE transmission of the latent, image
// reconstruction, then classification of the reconstructed image. No SKB
// correction happens before transmission; semantic accuracy is scored from
// the predicted class's SKB row.
RunResult run_vanilla_baseline(const CvaeModel& unconditional_cvae, const EncoderModel& classifier,
                               const AttributeMatrix& skb, const ChannelConfig& channel, const SampleSet& test,
                               std::uint64_t seed);

struct SweepRow {
    std::string scheme;  // "proposed" or "baseline"
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    double test_cr = 0.0;
    TransmissionMode mode = TransmissionMode::Reconstruct;
    double classification_accuracy = 0.0;
    double semantic_accuracy = 0.0;
    double mean_psnr_db = 0.0;
    std::size_t psnr_infinite_count = 0;
    double mean_ssim = 0.0;
    std::size_t wire_bytes_per_image = 0;
};

struct SweepGrid {
    std::vector<double> snr_db;
    std::vector<double> test_cr;
    std::vector<std::uint64_t> seeds;
    bool include_baseline = false;
};

// One row per (seed, snr, cr) in that nesting order; baseline rows (when
// requested) follow the proposed row for the same grid point.
std::vector<SweepRow> sweep(const EncoderModel& encoder, const CvaeModel& cvae, const CvaeModel* baseline_cvae,
                            const AttributeMatrix& skb, const RateConfig& rate_template, const SampleSet& test,
                            const SweepGrid& grid);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

// SKB-size ablation: regenerate the glyph dataset at each attribute count,
// retrain the encoder from scratch, report held-out accuracies.
struct AblationConfig {
    std::vector<std::size_t> attribute_counts = {2, 3, 6, 12};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    GlyphSpec base_spec;            // attribute count overridden per run
    EncoderTrainConfig train;
    EncoderConfig encoder_template; // attribute count overridden per run
};

struct AblationRow {
    std::size_t attribute_count = 0;
    std::uint64_t seed = 0;
    double classification_accuracy = 0.0;
    double semantic_accuracy = 0.0;
};

std::vector<AblationRow> ablate_skb(const AblationConfig& cfg);
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

// Held-out accuracy of encode -> nearest against the true labels.
double evaluate_classification(const EncoderModel& encoder, const AttributeMatrix& skb, const SampleSet& set);

}  // namespace skbsem
