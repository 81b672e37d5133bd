#include "skbsem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "skbsem/rng.hpp"
#include "skbsem/util.hpp"

namespace fs = std::filesystem;

namespace skbsem {

namespace {

constexpr double kPairwiseSimilarityCap = 0.95;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Stream tags for deriving independent child generators from the master seed.
enum : std::uint64_t { kTagMasks = 1, kTagAttributes = 2, kTagTrain = 3, kTagTest = 4 };

// One smooth mask: white noise blurred with a circular Gaussian kernel,
// min-max normalized to [0,1]. Blurred noise keeps the d masks mutually
// diverse (well-conditioned recovery) while the blur radius makes small
// circular shifts nearly harmless, so the attribute->pixel map stays close
// to linear under jitter.
std::vector<double> draw_basis_mask(Rng& rng, std::size_t w, std::size_t h) {
    std::vector<double> field(w * h);
    for (double& v : field) v = rng.gaussian();

    const double sigma = std::max(1.5, static_cast<double>(std::min(w, h)) / 10.0);
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

    // Separable circular convolution; wrap-around matches the circular
    // jitter shift applied to samples.
    std::vector<double> tmp(w * h), mask(w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const std::size_t sx = static_cast<std::size_t>((static_cast<int>(x) + i % static_cast<int>(w) +
                                                                 static_cast<int>(w)) % static_cast<int>(w));
                acc += kernel[i + radius] * field[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    double lo = 1e300, hi = -1e300;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const std::size_t sy = static_cast<std::size_t>((static_cast<int>(y) + i % static_cast<int>(h) +
                                                                 static_cast<int>(h)) % static_cast<int>(h));
                acc += kernel[i + radius] * tmp[sy * w + x];
            }
            mask[y * w + x] = acc;
            lo = std::min(lo, acc);
            hi = std::max(hi, acc);
        }
    const double range = hi - lo;
    if (range < 1e-9) return draw_basis_mask(rng, w, h);
    for (double& v : mask) v = (v - lo) / range;
    return mask;
}

std::vector<std::vector<double>> draw_attribute_rows(Rng& rng, std::size_t classes, std::size_t attrs) {
    std::vector<std::vector<double>> rows;
    const std::size_t budget = 10 * classes;
    std::size_t failures = 0;
    while (rows.size() < classes) {
        std::vector<double> cand(attrs);
        bool nonzero = false;
        for (double& v : cand) {
            v = 0.25 * static_cast<double>(rng.uniform_index(5));  // {0, .25, .5, .75, 1}
            if (v != 0.0) nonzero = true;
        }
        bool ok = nonzero;
        for (const auto& prev : rows) {
            if (!ok) break;
            if (cosine_similarity(cand, prev) > kPairwiseSimilarityCap) ok = false;
        }
        if (ok) {
            rows.push_back(std::move(cand));
            failures = 0;
        } else if (++failures >= budget) {
            throw std::runtime_error("glyphs: could not draw " + std::to_string(classes) + " attribute vectors of length " +
                                     std::to_string(attrs) + " with pairwise cosine <= " +
                                     std::to_string(kPairwiseSimilarityCap) + " after " + std::to_string(budget) +
                                     " consecutive rejections; spec too crowded");
        }
    }
    return rows;
}

ImageTensor render_sample(const GlyphSpec& spec, const std::vector<std::vector<double>>& masks, double mask_norm,
                          const std::vector<double>& attrs, Rng rng) {
    const std::size_t w = spec.width, h = spec.height, c = spec.channels;
    // Integer shift within the jitter amplitude, drawn before the noise so
    // the two are independent of sample ordering.
    const int span = 2 * spec.jitter + 1;
    const int dx = spec.jitter > 0 ? static_cast<int>(rng.uniform_index(span)) - spec.jitter : 0;
    const int dy = spec.jitter > 0 ? static_cast<int>(rng.uniform_index(span)) - spec.jitter : 0;
    ImageTensor img(w, h, c);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // Circular shift of the composed pattern.
            const std::size_t sx = static_cast<std::size_t>((static_cast<int>(x) - dx + static_cast<int>(w)) % static_cast<int>(w));
            const std::size_t sy = static_cast<std::size_t>((static_cast<int>(y) - dy + static_cast<int>(h)) % static_cast<int>(h));
            double base = 0.0;
            for (std::size_t j = 0; j < attrs.size(); ++j) base += attrs[j] * masks[j][sy * w + sx];
            base /= mask_norm;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double noise = spec.pixel_noise > 0.0 ? spec.pixel_noise * rng.gaussian() : 0.0;
                img.at(x, y, ch) = std::clamp(base + noise, 0.0, 1.0);
            }
        }
    return img;
}

void validate_spec(const GlyphSpec& spec) {
    if (spec.classes == 0 || spec.classes > 256)
        throw std::invalid_argument("glyphs: class count must be in [1,256], got " + std::to_string(spec.classes));
    if (spec.attributes < 2) throw std::invalid_argument("glyphs: need at least 2 attributes");
    if (spec.train_per_class < 1 || spec.test_per_class < 1)
        throw std::invalid_argument("glyphs: train and test counts must be >= 1");
    if (spec.width * spec.height * spec.channels == 0) throw std::invalid_argument("glyphs: zero-sized images");
    if (spec.jitter < 0) throw std::invalid_argument("glyphs: negative jitter");
    if (spec.pixel_noise < 0.0) throw std::invalid_argument("glyphs: negative pixel noise");
}

}  // namespace

GlyphDataset make_glyph_dataset(const GlyphSpec& spec) {
    validate_spec(spec);
    Rng master(spec.seed);

    Rng mask_rng = master.derive(kTagMasks);
    std::vector<std::vector<double>> masks;
    masks.reserve(spec.attributes);
    for (std::size_t j = 0; j < spec.attributes; ++j) masks.push_back(draw_basis_mask(mask_rng, spec.width, spec.height));

    // Largest possible un-noised pixel over all k in [0,1]^d; dividing by it
    // keeps the clean signal inside [0,1] so clamping only trims noise tails.
    double mask_norm = 0.0;
    for (std::size_t p = 0; p < spec.width * spec.height; ++p) {
        double s = 0.0;
        for (const auto& m : masks) s += m[p];
        mask_norm = std::max(mask_norm, s);
    }
    if (mask_norm <= 0.0) mask_norm = 1.0;

    Rng attr_rng = master.derive(kTagAttributes);
    AttributeMatrix skb(draw_attribute_rows(attr_rng, spec.classes, spec.attributes));

    // Per-sample generators derive from (master, split tag, class, ordinal):
    // train and test draws can never collide, and classes may be generated
    // in parallel without changing the result.
    auto generate_split = [&](std::uint64_t split_tag, std::size_t per_class) {
        SampleSet set;
        set.reserve(per_class * spec.classes);
        for (std::size_t m = 0; m < spec.classes; ++m)
            for (std::size_t i = 0; i < per_class; ++i) {
                Rng sample_rng = master.derive(split_tag).derive(m, i);
                set.push_back({render_sample(spec, masks, mask_norm, skb.row(m), sample_rng), m});
            }
        return set;
    };

    SampleSet train = generate_split(kTagTrain, spec.train_per_class);
    SampleSet test = generate_split(kTagTest, spec.test_per_class);
    return GlyphDataset{std::move(skb), std::move(train), std::move(test)};
}

namespace {

void export_split(const std::string& dir, const SampleSet& set) {
    fs::create_directories(dir);
    std::ofstream labels(dir + "/labels.csv", std::ios::trunc);
    if (!labels) throw std::runtime_error("glyphs: cannot write " + dir + "/labels.csv");
    char name[32];
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::snprintf(name, sizeof(name), "img_%05zu.skbi", i);
        save_image(dir + "/" + name, set[i].image);
        labels << name << "," << set[i].class_index << "\n";
    }
}

SampleSet load_split(const std::string& dir) {
    std::ifstream labels(dir + "/labels.csv");
    if (!labels) throw std::runtime_error("glyphs: cannot open " + dir + "/labels.csv");
    SampleSet set;
    std::string line;
    while (std::getline(labels, line)) {
        if (line.empty()) continue;
        const auto fields = util::split(line, ',');
        if (fields.size() != 2) throw std::runtime_error("glyphs: malformed label line '" + line + "' in " + dir);
        set.push_back({load_image(dir + "/" + fields[0]), static_cast<std::size_t>(std::stoul(fields[1]))});
    }
    return set;
}

}  // namespace

void export_dataset(const std::string& dir, const GlyphDataset& data) {
    fs::create_directories(dir);
    save_attribute_csv(dir + "/skb.csv", data.skb);
    export_split(dir + "/train", data.train);
    export_split(dir + "/test", data.test);
}

GlyphDataset load_dataset_dir(const std::string& dir) {
    AttributeMatrix skb = load_attribute_csv(dir + "/skb.csv");
    GlyphDataset data{std::move(skb), load_split(dir + "/train"), load_split(dir + "/test")};
    for (const auto& s : data.train)
        if (s.class_index >= data.skb.class_count())
            throw std::runtime_error("glyphs: train label out of range in " + dir);
    for (const auto& s : data.test)
        if (s.class_index >= data.skb.class_count())
            throw std::runtime_error("glyphs: test label out of range in " + dir);
    return data;
}

ExternalData load_external(const std::string& attr_csv, const std::string& image_dir,
                           std::size_t width, std::size_t height) {
    std::size_t clamps = 0;
    AttributeMatrix skb = load_attribute_csv(attr_csv, &clamps);
    ExternalData out{std::move(skb), {}, 0, clamps};

    if (image_dir.empty() || !fs::exists(image_dir)) return out;
    const std::string labels_path = image_dir + "/labels.csv";
    if (!fs::exists(labels_path)) return out;

    std::ifstream labels(labels_path);
    std::string line;
    while (std::getline(labels, line)) {
        if (line.empty()) continue;
        const auto fields = util::split(line, ',');
        if (fields.size() != 2) {
            ++out.skipped;
            continue;
        }
        const std::size_t cls = static_cast<std::size_t>(std::stoul(fields[1]));
        if (cls >= out.skb.class_count())
            throw std::runtime_error("load_external: label " + std::to_string(cls) + " out of range for " +
                                     std::to_string(out.skb.class_count()) + " classes");
        ImageTensor img;
        try {
            img = load_image(image_dir + "/" + fields[0]);
        } catch (const std::exception&) {
            ++out.skipped;
            continue;
        }
        if (img.width != width || img.height != height) img = resize_bilinear(img, width, height);
        out.samples.push_back({std::move(img), cls});
    }
    return out;
}

}  // namespace skbsem
