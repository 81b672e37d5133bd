#include "skbsem/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "skbsem/rng.hpp"
#include "skbsem/util.hpp"

namespace skbsem {

namespace {

// Sub-stream tags under the per-image seed.
enum : std::uint64_t { kTagEncodeNoise = 1, kTagChannel = 2, kTagPriorSample = 3 };

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

}  // namespace

double RateConfig::trained_cr() const {
    return static_cast<double>(index_symbols + latent_symbols) /
           static_cast<double>(width * height * channels);
}

void RateConfig::validate() const {
    if (width * height * channels == 0) throw std::invalid_argument("rate: zero-sized image");
    if (index_symbols != 1) throw std::invalid_argument("rate: the index occupies exactly one symbol");
    if (latent_symbols == 0) throw std::invalid_argument("rate: zero latent symbols");
    if (!(test_cr >= 0.0)) throw std::invalid_argument("rate: test CR must be nonnegative");
}

TransmissionMode select_mode(const RateConfig& rate) {
    rate.validate();
    return rate.test_cr < rate.trained_cr() ? TransmissionMode::Generate : TransmissionMode::Reconstruct;
}

std::string to_string(TransmissionMode mode) {
    return mode == TransmissionMode::Generate ? "generate" : "reconstruct";
}

RunResult run_end_to_end(const EncoderModel& encoder, const CvaeModel& cvae, const AttributeMatrix& skb,
                         const RateConfig& rate, const ChannelConfig& channel, const SampleSet& test,
                         std::uint64_t seed) {
    if (test.empty()) throw std::invalid_argument("pipeline: empty test set");
    if (encoder.cfg.attribute_count != skb.attribute_count())
        throw std::invalid_argument("pipeline: encoder attribute count does not match the SKB");
    if (cvae.cfg.attribute_count != skb.attribute_count())
        throw std::invalid_argument("pipeline: cvae attribute count does not match the SKB");
    if (cvae.cfg.image_size() != encoder.cfg.input_size)
        throw std::invalid_argument("pipeline: encoder and cvae disagree on image size");
    if (rate.latent_symbols != cvae.cfg.latent_size())
        throw std::invalid_argument("pipeline: rate says " + std::to_string(rate.latent_symbols) +
                                    " latent symbols, cvae has " + std::to_string(cvae.cfg.latent_size()));

    const TransmissionMode mode = select_mode(rate);
    Rng run_rng(seed);

    RunResult result;
    result.mode = mode;
    result.test_cr = rate.test_cr;
    result.trained_cr = rate.trained_cr();

    for (std::size_t i = 0; i < test.size(); ++i) {
        const LabeledSample& sample = test[i];
        Rng image_rng = run_rng.derive(i);

        // Transmitter: semantic feature, SKB correction, frame.
        const std::vector<double> feature = encode(encoder, sample.image);
        const NearestResult corrected = nearest(skb, feature);
        const std::size_t v = corrected.index;

        Frame frame;
        frame.index = static_cast<std::uint8_t>(v);
        LatentGroups z;
        if (mode == TransmissionMode::Reconstruct) {
            z = cvae_encode(cvae, sample.image, corrected.prototype, image_rng.derive(kTagEncodeNoise).next_u64());
            frame.mode = Frame::Mode::IndexPlusLatent;
            frame.payload = to_f32(z.flatten());
        } else {
            frame.mode = Frame::Mode::IndexOnly;
        }
        const std::vector<std::uint8_t> wire = frame_encode(frame);
        const Frame received_frame = frame_decode(wire);
        result.wire_bytes_per_image = wire.size();

        // Channel: index error-free, latent through AWGN.
        const std::size_t received_index = transmit_index(received_frame.index);
        std::vector<double> z_hat;
        if (mode == TransmissionMode::Reconstruct) {
            ChannelConfig image_channel = channel;
            image_channel.seed = image_rng.derive(kTagChannel).next_u64();
            z_hat = awgn(z.flatten(), image_channel);
        }

        // Receiver: resolve semantics by index, decode per mode.
        const std::vector<double>& prototype_rx = lookup(skb, received_index);
        const std::size_t predicted = received_index;
        ImageTensor output;
        if (mode == TransmissionMode::Generate) {
            const LatentGroups zp =
                prior_sample(cvae, prototype_rx, image_rng.derive(kTagPriorSample).next_u64());
            output = cvae_decode(cvae, zp, prototype_rx);
        } else {
            output = cvae_decode(cvae, LatentGroups::unflatten(z_hat, cvae.cfg.group_widths), prototype_rx);
        }

        EvalRecord::PerImage per;
        per.true_class = sample.class_index;
        per.predicted_class = predicted;
        per.semantic_accuracy = semantic_accuracy(prototype_rx, skb.row(sample.class_index));
        per.psnr_db = psnr(output, sample.image);
        per.ssim = ssim(output, sample.image);
        result.record.images.push_back(per);
        result.predicted.push_back(predicted);
        result.outputs.push_back(std::move(output));
    }
    return result;
}

RunResult run_vanilla_baseline(const CvaeModel& unconditional_cvae, const EncoderModel& classifier,
                               const AttributeMatrix& skb, const ChannelConfig& channel, const SampleSet& test,
                               std::uint64_t seed) {
    if (test.empty()) throw std::invalid_argument("pipeline: empty test set");
    if (classifier.cfg.attribute_count != skb.attribute_count())
        throw std::invalid_argument("pipeline: classifier attribute count does not match the SKB");
    if (unconditional_cvae.cfg.image_size() != classifier.cfg.input_size)
        throw std::invalid_argument("pipeline: classifier and cvae disagree on image size");

    const std::vector<double> cond = null_condition(unconditional_cvae);
    Rng run_rng(seed);

    RunResult result;
    result.mode = TransmissionMode::Reconstruct;
    result.trained_cr = static_cast<double>(unconditional_cvae.cfg.latent_size()) /
                        static_cast<double>(unconditional_cvae.cfg.image_size());
    result.test_cr = result.trained_cr;
    // Latent-only transmission: l f32 symbols, no index side channel.
    result.wire_bytes_per_image = unconditional_cvae.cfg.latent_size() * 4;

    for (std::size_t i = 0; i < test.size(); ++i) {
        const LabeledSample& sample = test[i];
        Rng image_rng = run_rng.derive(i);

        const LatentGroups z =
            cvae_encode(unconditional_cvae, sample.image, cond, image_rng.derive(kTagEncodeNoise).next_u64());
        ChannelConfig image_channel = channel;
        image_channel.seed = image_rng.derive(kTagChannel).next_u64();
        const std::vector<double> z_hat = awgn(z.flatten(), image_channel);
        ImageTensor recon = cvae_decode(unconditional_cvae,
                                        LatentGroups::unflatten(z_hat, unconditional_cvae.cfg.group_widths), cond);

        // Classification happens after reconstruction, on the receiver side.
        const std::size_t predicted = nearest(skb, encode(classifier, recon)).index;

        EvalRecord::PerImage per;
        per.true_class = sample.class_index;
        per.predicted_class = predicted;
        per.semantic_accuracy = semantic_accuracy(skb.row(predicted), skb.row(sample.class_index));
        per.psnr_db = psnr(recon, sample.image);
        per.ssim = ssim(recon, sample.image);
        result.record.images.push_back(per);
        result.predicted.push_back(predicted);
        result.outputs.push_back(std::move(recon));
    }
    return result;
}

std::vector<SweepRow> sweep(const EncoderModel& encoder, const CvaeModel& cvae, const CvaeModel* baseline_cvae,
                            const AttributeMatrix& skb, const RateConfig& rate_template, const SampleSet& test,
                            const SweepGrid& grid) {
    if (grid.snr_db.empty() || grid.test_cr.empty() || grid.seeds.empty())
        throw std::invalid_argument("pipeline: sweep grid has an empty axis");
    if (grid.include_baseline && baseline_cvae == nullptr)
        throw std::invalid_argument("pipeline: baseline sweep requested without a baseline model");

    std::vector<SweepRow> rows;
    for (std::uint64_t seed : grid.seeds)
        for (double snr : grid.snr_db)
            for (double cr : grid.test_cr) {
                RateConfig rate = rate_template;
                rate.test_cr = cr;
                ChannelConfig channel;
                channel.snr_db = snr;

                const RunResult run = run_end_to_end(encoder, cvae, skb, rate, channel, test, seed);
                SweepRow row;
                row.scheme = "proposed";
                row.seed = seed;
                row.snr_db = snr;
                row.test_cr = cr;
                row.mode = run.mode;
                row.classification_accuracy = run.record.classification_accuracy();
                row.semantic_accuracy = run.record.mean_semantic_accuracy();
                row.mean_psnr_db = run.record.mean_psnr(&row.psnr_infinite_count);
                row.mean_ssim = run.record.mean_ssim();
                row.wire_bytes_per_image = run.wire_bytes_per_image;
                rows.push_back(row);

                if (grid.include_baseline) {
                    const RunResult base = run_vanilla_baseline(*baseline_cvae, encoder, skb, channel, test, seed);
                    SweepRow brow = row;
                    brow.scheme = "baseline";
                    brow.mode = base.mode;
                    brow.classification_accuracy = base.record.classification_accuracy();
                    brow.semantic_accuracy = base.record.mean_semantic_accuracy();
                    brow.mean_psnr_db = base.record.mean_psnr(&brow.psnr_infinite_count);
                    brow.mean_ssim = base.record.mean_ssim();
                    brow.wire_bytes_per_image = base.wire_bytes_per_image;
                    rows.push_back(brow);
                }
            }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("pipeline: cannot open for writing: " + path);
    f << "scheme,seed,snr_db,test_cr,mode,classification_accuracy,semantic_accuracy,mean_psnr_db,"
         "psnr_infinite_count,mean_ssim,wire_bytes_per_image\n";
    for (const SweepRow& r : rows) {
        f << r.scheme << "," << r.seed << "," << util::format_double(r.snr_db) << ","
          << util::format_double(r.test_cr) << "," << to_string(r.mode) << ","
          << util::format_double(r.classification_accuracy) << "," << util::format_double(r.semantic_accuracy) << ","
          << util::format_double(r.mean_psnr_db) << "," << r.psnr_infinite_count << ","
          << util::format_double(r.mean_ssim) << "," << r.wire_bytes_per_image << "\n";
    }
}

double evaluate_classification(const EncoderModel& encoder, const AttributeMatrix& skb, const SampleSet& set) {
    if (set.empty()) throw std::invalid_argument("pipeline: empty evaluation set");
    std::vector<std::size_t> predictions, truths;
    predictions.reserve(set.size());
    truths.reserve(set.size());
    for (const LabeledSample& s : set) {
        predictions.push_back(nearest(skb, encode(encoder, s.image)).index);
        truths.push_back(s.class_index);
    }
    return classification_accuracy(predictions, truths);
}

std::vector<AblationRow> ablate_skb(const AblationConfig& cfg) {
    if (cfg.attribute_counts.empty() || cfg.seeds.empty())
        throw std::invalid_argument("pipeline: ablation needs attribute counts and seeds");
    std::vector<AblationRow> rows;
    for (std::size_t d : cfg.attribute_counts)
        for (std::uint64_t seed : cfg.seeds) {
            GlyphSpec spec = cfg.base_spec;
            spec.attributes = d;
            spec.seed = seed;  // matched datasets: identical seed per run seed, only d varies
            const GlyphDataset data = make_glyph_dataset(spec);

            EncoderConfig enc_cfg = cfg.encoder_template;
            enc_cfg.input_size = spec.width * spec.height * spec.channels;
            enc_cfg.attribute_count = d;
            EncoderModel model(enc_cfg);
            train_semantic_encoder(model, data.train, data.skb, cfg.train, seed);

            AblationRow row;
            row.attribute_count = d;
            row.seed = seed;
            row.classification_accuracy = evaluate_classification(model, data.skb, data.test);
            double sem = 0.0;
            for (const LabeledSample& s : data.test) {
                const std::size_t pred = nearest(data.skb, encode(model, s.image)).index;
                sem += semantic_accuracy(data.skb.row(pred), data.skb.row(s.class_index));
            }
            row.semantic_accuracy = sem / static_cast<double>(data.test.size());
            rows.push_back(row);
        }
    return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("pipeline: cannot open for writing: " + path);
    f << "attribute_count,seed,classification_accuracy,semantic_accuracy\n";
    for (const AblationRow& r : rows)
        f << r.attribute_count << "," << r.seed << "," << util::format_double(r.classification_accuracy) << ","
          << util::format_double(r.semantic_accuracy) << "\n";
}

}  // namespace skbsem
