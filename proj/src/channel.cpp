#include "skbsem/channel.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "skbsem/rng.hpp"

namespace skbsem {

ChannelConfig ChannelConfig::noiseless() {
    ChannelConfig cfg;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    return cfg;
}

bool ChannelConfig::noise_disabled() const {
    return power_mode == PowerMode::Empirical && std::isinf(snr_db) && snr_db > 0.0;
}

double noise_sigma(double signal_power, double snr_db) {
    if (signal_power < 0.0) throw std::invalid_argument("channel: negative signal power");
    return std::sqrt(signal_power * std::pow(10.0, -snr_db / 10.0));
}

std::vector<double> awgn(const std::vector<double>& signal, const ChannelConfig& cfg) {
    if (signal.empty()) throw std::invalid_argument("channel: awgn on empty signal");
    if (cfg.noise_disabled()) return signal;

    double sigma;
    if (cfg.power_mode == ChannelConfig::PowerMode::FixedSigma) {
        if (cfg.fixed_sigma < 0.0) throw std::invalid_argument("channel: negative fixed sigma");
        sigma = cfg.fixed_sigma;
    } else {
        double power = 0.0;
        for (double v : signal) power += v * v;
        power /= static_cast<double>(signal.size());
        if (power == 0.0)
            throw std::invalid_argument("channel: zero-power signal with finite SNR; SNR undefined");
        sigma = noise_sigma(power, cfg.snr_db);
    }

    Rng rng(cfg.seed);
    std::vector<double> out(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] + sigma * rng.gaussian();
    return out;
}

std::size_t transmit_index(std::size_t v) { return v; }

namespace {

constexpr std::uint8_t kFrameMagic = 0x46;  // 'F'

[[noreturn]] void decode_error(std::size_t pos, const std::string& what) {
    throw std::runtime_error("frame: decode error at byte " + std::to_string(pos) + ": " + what);
}

}  // namespace

std::vector<std::uint8_t> frame_encode(const Frame& frame) {
    if (frame.mode == Frame::Mode::IndexOnly && frame.payload.has_value())
        throw std::invalid_argument("frame: IndexOnly frame carries a payload");
    if (frame.mode == Frame::Mode::IndexPlusLatent && !frame.payload.has_value())
        throw std::invalid_argument("frame: IndexPlusLatent frame missing its payload");

    std::vector<std::uint8_t> out;
    out.push_back(kFrameMagic);
    out.push_back(static_cast<std::uint8_t>(frame.mode));
    out.push_back(frame.index);
    if (frame.mode == Frame::Mode::IndexPlusLatent) {
        const auto& payload = *frame.payload;
        const std::uint32_t l = static_cast<std::uint32_t>(payload.size());
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((l >> (8 * i)) & 0xFF));
        for (float s : payload) {
            std::uint32_t bits;
            std::memcpy(&bits, &s, 4);
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
        }
    }
    return out;
}

Frame frame_decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 3) decode_error(bytes.size(), "buffer shorter than the 3-byte header");
    if (bytes[0] != kFrameMagic) decode_error(0, "bad magic byte, expected 'F'");
    if (bytes[1] > 1) decode_error(1, "unknown mode byte " + std::to_string(bytes[1]));

    Frame frame;
    frame.mode = static_cast<Frame::Mode>(bytes[1]);
    frame.index = bytes[2];
    if (frame.mode == Frame::Mode::IndexOnly) {
        if (bytes.size() != 3) decode_error(3, "trailing bytes after an IndexOnly frame");
        return frame;
    }
    if (bytes.size() < 7) decode_error(bytes.size(), "truncated payload length");
    std::uint32_t l = 0;
    for (int i = 0; i < 4; ++i) l |= static_cast<std::uint32_t>(bytes[3 + i]) << (8 * i);
    const std::size_t expected = 7 + static_cast<std::size_t>(l) * 4;
    if (bytes.size() != expected)
        decode_error(7, "payload length " + std::to_string(l) + " implies " + std::to_string(expected) +
                            " bytes, buffer has " + std::to_string(bytes.size()));
    std::vector<float> payload(l);
    for (std::size_t i = 0; i < l; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[7 + i * 4 + b]) << (8 * b);
        std::memcpy(&payload[i], &bits, 4);
    }
    frame.payload = std::move(payload);
    return frame;
}

}  // namespace skbsem
