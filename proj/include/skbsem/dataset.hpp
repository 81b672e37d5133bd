#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skbsem/image.hpp"
#include "skbsem/skb.hpp"

namespace skbsem {

struct LabeledSample {
    ImageTensor image;
    std::size_t class_index = 0;
};

using SampleSet = std::vector<LabeledSample>;

// Synthetic attribute-labeled glyph dataset. Each class is a weighted blend
// of d fixed smooth basis masks, weighted by the class attribute vector, with
// per-sample integer jitter and Gaussian pixel noise on top. Attributes are
// linearly recoverable from pixels by construction, which is what makes the
// toy encoder trainable in seconds.
struct GlyphSpec {
    std::size_t classes = 8;
    std::size_t attributes = 12;
    std::size_t width = 16;
    std::size_t height = 16;
    std::size_t channels = 1;
    std::size_t train_per_class = 200;
    std::size_t test_per_class = 50;
    std::uint64_t seed = 1;
    int jitter = 1;             // max |shift| in pixels, both axes
    double pixel_noise = 0.02;  // stddev of additive Gaussian noise
};

struct GlyphDataset {
    AttributeMatrix skb;
    SampleSet train;
    SampleSet test;
};

// Deterministic in the spec (same spec -> bit-identical datasets; the
// generator is SplitMix64 in counter mode, see rng.hpp). Throws when the
// requested class count cannot satisfy the pairwise cosine-similarity cap
// of 0.95 within 10*classes candidate draws.
GlyphDataset make_glyph_dataset(const GlyphSpec& spec);

// Directory layout written by export_dataset / read by load_dataset_dir:
//   <dir>/skb.csv            attribute matrix, one row per class
//   <dir>/train/, <dir>/test/
//     img_NNNNN.skbi         raw image files (see image.hpp)
//     labels.csv             filename,class_index
void export_dataset(const std::string& dir, const GlyphDataset& data);
GlyphDataset load_dataset_dir(const std::string& dir);

struct ExternalData {
    AttributeMatrix skb;
    SampleSet samples;
    std::size_t skipped = 0;         // undecodable images
    std::size_t clamp_warnings = 0;  // attribute values clamped to [0,1]
};

// CUB-style ingestion: attribute CSV plus a directory of images with a
// labels.csv. Images are bilinearly resized to width x height and scaled to
// [0,1]; undecodable files are skipped and counted. An empty or absent
// image directory yields an empty sample set.
ExternalData load_external(const std::string& attr_csv, const std::string& image_dir,
                           std::size_t width, std::size_t height);

}  // namespace skbsem
