#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "skbsem/image.hpp"

namespace skbsem {

// Default attribute-match tolerance for semantic accuracy.
inline constexpr double kSemanticAccuracyTolerance = 0.0005;

// Fraction of attributes of `received` within `tolerance` of `truth`.
// Both vectors must have equal length and entries in [0,1].
double semantic_accuracy(const std::vector<double>& received, const std::vector<double>& truth,
                         double tolerance = kSemanticAccuracyTolerance);

// Fraction of exact matches; empty inputs rejected.
double classification_accuracy(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truths);

// 10*log10(1/MSE) with unit peak. Identical images return +infinity.
double psnr(const ImageTensor& a, const ImageTensor& b);

struct SsimConfig {
    std::size_t window = 8;
    std::size_t stride = 4;
    double c1 = 0.01 * 0.01;  // on unit dynamic range
    double c2 = 0.03 * 0.03;
};

// Mean SSIM over uniform windows and channels. Images smaller than the
// window are rejected.
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimConfig& cfg = {});

struct EvalRecord {
    struct PerImage {
        std::size_t true_class = 0;
        std::size_t predicted_class = 0;
        double semantic_accuracy = 0.0;
        double psnr_db = 0.0;  // may be +inf
        double ssim = 0.0;
    };
    std::vector<PerImage> images;

    double mean_semantic_accuracy() const;
    double classification_accuracy() const;
    // Mean over finite entries; infinite_count reports how many were excluded.
    double mean_psnr(std::size_t* infinite_count = nullptr) const;
    double mean_ssim() const;
};

// One row per image plus a trailing aggregate row. Columns:
//   index,true_class,predicted_class,semantic_accuracy,psnr_db,ssim
// The aggregate row holds: "aggregate", image count, classification
// accuracy, mean semantic accuracy, mean PSNR over finite entries, mean
// SSIM, and the infinite-PSNR count as a 7th column.
void write_eval_csv(const std::string& path, const EvalRecord& record);

}  // namespace skbsem
