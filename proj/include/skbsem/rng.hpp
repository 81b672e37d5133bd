#pragma once

#include <cstdint>
#include <vector>

namespace skbsem {

// SplitMix64 (Steele/Lea/Flood 2014) used as a counter-based generator:
// output_i = mix64(seed + (i+1) * 0x9E3779B97F4A7C15). Pure 64-bit integer
// arithmetic, so streams regenerate identically from the same seed on any
// platform. All randomness in the simulator flows through explicit Rng
// instances; there is no global generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix64(std::uint64_t z);

    // A decorrelated child stream. Children of distinct tags (or of distinct
    // parents) never share outputs in practice.
    Rng derive(std::uint64_t tag) const;
    Rng derive(std::uint64_t tag_a, std::uint64_t tag_b) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Box-Muller on uniform() pairs (no libstdc++
    // distribution objects, which are not pinned across implementations).
    double gaussian();
    std::vector<double> gaussian_vector(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace skbsem
