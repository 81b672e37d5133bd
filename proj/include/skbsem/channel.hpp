#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace skbsem {

// AWGN on the latent payload. Noise power follows the measured signal power:
// sigma^2 = mean(signal^2) * 10^(-snr_db/10). snr_db = +infinity disables the
// noise entirely. FixedSigma mode uses `fixed_sigma` directly instead.
struct ChannelConfig {
    enum class PowerMode { Empirical, FixedSigma };

    double snr_db = 10.0;
    std::uint64_t seed = 0;
    PowerMode power_mode = PowerMode::Empirical;
    double fixed_sigma = 0.1;

    static ChannelConfig noiseless();
    bool noise_disabled() const;
};

// Noise standard deviation for a given measured power and target SNR.
double noise_sigma(double signal_power, double snr_db);

std::vector<double> awgn(const std::vector<double>& signal, const ChannelConfig& cfg);

// The index side channel is error-free in this system; modeled as identity.
std::size_t transmit_index(std::size_t v);

// Wire frame. Exact layout (little-endian):
//   byte 0        ASCII 'F'
//   byte 1        mode: 0 = IndexOnly, 1 = IndexPlusLatent
//   byte 2        class index v as u8
//   if mode 1:
//     bytes 3-6   u32 payload length l
//     then        l little-endian f32 latent symbols
struct Frame {
    enum class Mode : std::uint8_t { IndexOnly = 0, IndexPlusLatent = 1 };

    Mode mode = Mode::IndexOnly;
    std::uint8_t index = 0;
    std::optional<std::vector<float>> payload;  // present iff IndexPlusLatent
};

std::vector<std::uint8_t> frame_encode(const Frame& frame);
// Rejects truncated buffers, unknown mode bytes, trailing garbage and
// payload-length mismatches; diagnostics name the byte position.
Frame frame_decode(const std::vector<std::uint8_t>& bytes);

}  // namespace skbsem
