// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus a whole-training-step measurement. Build in Release.
//
//   bench_kernels [--threads N] [--repeats R]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skbsem/cvae.hpp"
#include "skbsem/dataset.hpp"
#include "skbsem/encoder.hpp"
#include "skbsem/kernels.hpp"
#include "skbsem/rng.hpp"

using namespace skbsem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void bench_gemm(std::size_t m, std::size_t k, std::size_t n, int repeats) {
    Rng rng(42);
    std::vector<double> a(m * k), b(k * n), c(m * n);
    for (double& v : a) v = rng.gaussian();
    for (double& v : b) v = rng.gaussian();

    auto time_variant = [&](auto&& fn) {
        fn(a.data(), b.data(), c.data(), m, k, n, false);  // warm up
        const auto t0 = Clock::now();
        for (int r = 0; r < repeats; ++r) fn(a.data(), b.data(), c.data(), m, k, n, false);
        return seconds_since(t0) / repeats;
    };

    const double ts = time_variant(kernels::gemm_nn_serial);
    const double tp = time_variant(kernels::gemm_nn_parallel);
    const double flops = 2.0 * static_cast<double>(m) * static_cast<double>(k) * static_cast<double>(n);
    std::printf("gemm_nn %4zux%4zux%4zu  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  speedup %.2fx\n",
                m, k, n, ts * 1e3, flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9, ts / tp);
}

void bench_training_epoch() {
    GlyphSpec spec;
    spec.train_per_class = 25;
    spec.test_per_class = 1;
    const GlyphDataset data = make_glyph_dataset(spec);

    EncoderConfig ecfg;
    ecfg.input_size = spec.width * spec.height * spec.channels;
    ecfg.attribute_count = spec.attributes;
    EncoderModel enc(ecfg);
    EncoderTrainConfig etrain;
    etrain.epochs = 1;

    auto t0 = Clock::now();
    train_semantic_encoder(enc, data.train, data.skb, etrain, 1);
    std::printf("encoder epoch (%zu images): %.3f s\n", data.train.size(), seconds_since(t0));

    CvaeConfig ccfg;
    ccfg.width = spec.width;
    ccfg.height = spec.height;
    ccfg.channels = spec.channels;
    ccfg.attribute_count = spec.attributes;
    CvaeModel cvae(ccfg);
    CvaeTrainConfig ctrain;
    ctrain.epochs = 1;
    t0 = Clock::now();
    train_cvae(cvae, data.train, data.skb, ctrain, 1);
    std::printf("cvae epoch    (%zu images): %.3f s\n", data.train.size(), seconds_since(t0));
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 0;
    int repeats = 5;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) threads = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--repeats") == 0 && i + 1 < argc) repeats = std::atoi(argv[++i]);
    }
    kernels::set_max_threads(threads);

#ifdef _OPENMP
    std::printf("openmp enabled, max threads %d (cap %d)\n", omp_get_max_threads(), threads);
#else
    std::printf("built without openmp; parallel variants fall back to serial\n");
#endif

    for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{32, 256, 256},
                           {64, 256, 256},
                           {128, 512, 512},
                           {256, 1024, 1024}})
        bench_gemm(m, k, n, repeats);

    bench_training_epoch();
    return 0;
}
