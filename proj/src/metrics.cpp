#include "skbsem/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "skbsem/util.hpp"

namespace skbsem {

double semantic_accuracy(const std::vector<double>& received, const std::vector<double>& truth, double tolerance) {
    if (received.size() != truth.size())
        throw std::invalid_argument("metrics: semantic accuracy of vectors with lengths " +
                                    std::to_string(received.size()) + " and " + std::to_string(truth.size()));
    if (received.empty()) throw std::invalid_argument("metrics: semantic accuracy of empty vectors");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < received.size(); ++i)
        if (std::fabs(received[i] - truth[i]) <= tolerance) ++hits;
    return static_cast<double>(hits) / static_cast<double>(received.size());
}

double classification_accuracy(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truths) {
    if (predictions.size() != truths.size())
        throw std::invalid_argument("metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                                    std::to_string(truths.size()) + " truths");
    if (predictions.empty()) throw std::invalid_argument("metrics: classification accuracy of empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truths[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("metrics: psnr of images with different dimensions");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimConfig& cfg) {
    if (!a.same_dims(b)) throw std::invalid_argument("metrics: ssim of images with different dimensions");
    if (a.width < cfg.window || a.height < cfg.window)
        throw std::invalid_argument("metrics: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " smaller than the " + std::to_string(cfg.window) + "-pixel ssim window");
    const std::size_t w = cfg.window;
    const double n = static_cast<double>(w * w);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t c = 0; c < a.channels; ++c)
        for (std::size_t y0 = 0; y0 + w <= a.height; y0 += cfg.stride)
            for (std::size_t x0 = 0; x0 + w <= a.width; x0 += cfg.stride) {
                double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (std::size_t y = y0; y < y0 + w; ++y)
                    for (std::size_t x = x0; x < x0 + w; ++x) {
                        const double pa = a.at(x, y, c), pb = b.at(x, y, c);
                        sx += pa;
                        sy += pb;
                        sxx += pa * pa;
                        syy += pb * pb;
                        sxy += pa * pb;
                    }
                const double mx = sx / n, my = sy / n;
                // Population (divide-by-n) variance and covariance.
                const double vx = sxx / n - mx * mx;
                const double vy = syy / n - my * my;
                const double cov = sxy / n - mx * my;
                total += ((2.0 * mx * my + cfg.c1) * (2.0 * cov + cfg.c2)) /
                         ((mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2));
                ++windows;
            }
    return total / static_cast<double>(windows);
}

double EvalRecord::mean_semantic_accuracy() const {
    if (images.empty()) throw std::invalid_argument("metrics: empty evaluation record");
    double acc = 0.0;
    for (const auto& r : images) acc += r.semantic_accuracy;
    return acc / static_cast<double>(images.size());
}

double EvalRecord::classification_accuracy() const {
    if (images.empty()) throw std::invalid_argument("metrics: empty evaluation record");
    std::size_t hits = 0;
    for (const auto& r : images)
        if (r.predicted_class == r.true_class) ++hits;
    return static_cast<double>(hits) / static_cast<double>(images.size());
}

double EvalRecord::mean_psnr(std::size_t* infinite_count) const {
    if (images.empty()) throw std::invalid_argument("metrics: empty evaluation record");
    double acc = 0.0;
    std::size_t finite = 0, infinite = 0;
    for (const auto& r : images) {
        if (std::isinf(r.psnr_db)) {
            ++infinite;
        } else {
            acc += r.psnr_db;
            ++finite;
        }
    }
    if (infinite_count) *infinite_count = infinite;
    return finite ? acc / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
}

double EvalRecord::mean_ssim() const {
    if (images.empty()) throw std::invalid_argument("metrics: empty evaluation record");
    double acc = 0.0;
    for (const auto& r : images) acc += r.ssim;
    return acc / static_cast<double>(images.size());
}

void write_eval_csv(const std::string& path, const EvalRecord& record) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("metrics: cannot open for writing: " + path);
    f << "index,true_class,predicted_class,semantic_accuracy,psnr_db,ssim\n";
    for (std::size_t i = 0; i < record.images.size(); ++i) {
        const auto& r = record.images[i];
        f << i << "," << r.true_class << "," << r.predicted_class << "," << util::format_double(r.semantic_accuracy)
          << "," << util::format_double(r.psnr_db) << "," << util::format_double(r.ssim) << "\n";
    }
    std::size_t inf_count = 0;
    const double mean_p = record.mean_psnr(&inf_count);
    f << "aggregate," << record.images.size() << "," << util::format_double(record.classification_accuracy()) << ","
      << util::format_double(record.mean_semantic_accuracy()) << "," << util::format_double(mean_p) << ","
      << util::format_double(record.mean_ssim()) << "," << inf_count << "\n";
}

}  // namespace skbsem
