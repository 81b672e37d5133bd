#include "skbsem/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace skbsem {

ImageTensor::ImageTensor(std::size_t w, std::size_t h, std::size_t c, double fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {
    if (w * h * c == 0) throw std::invalid_argument("image: zero-sized dimensions");
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    f.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("image: truncated header: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_image(const std::string& path, const ImageTensor& img) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("image: cannot open for writing: " + path);
    f.write("SKBI", 4);
    put_u32(f, static_cast<std::uint32_t>(img.width));
    put_u32(f, static_cast<std::uint32_t>(img.height));
    put_u32(f, static_cast<std::uint32_t>(img.channels));
    std::vector<char> payload(img.pixels.size() * 4);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float v = static_cast<float>(std::clamp(img.pixels[i], 0.0, 1.0));
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int b = 0; b < 4; ++b) payload[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!f) throw std::runtime_error("image: write failed: " + path);
}

ImageTensor load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("image: cannot open: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "SKBI", 4) != 0)
        throw std::runtime_error("image: bad magic, expected SKBI: " + path);
    const std::uint32_t w = get_u32(f, path), h = get_u32(f, path), c = get_u32(f, path);
    if (w == 0 || h == 0 || c == 0 || static_cast<std::uint64_t>(w) * h * c > (1u << 28))
        throw std::runtime_error("image: implausible dimensions in header: " + path);
    ImageTensor img(w, h, c);
    std::vector<char> payload(img.pixels.size() * 4);
    if (!f.read(payload.data(), static_cast<std::streamsize>(payload.size())))
        throw std::runtime_error("image: truncated pixel payload: " + path);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[i * 4 + b])) << (8 * b);
        float v;
        std::memcpy(&v, &bits, 4);
        img.pixels[i] = std::clamp(static_cast<double>(v), 0.0, 1.0);
    }
    return img;
}

ImageTensor resize_bilinear(const ImageTensor& img, std::size_t new_w, std::size_t new_h) {
    if (new_w == 0 || new_h == 0) throw std::invalid_argument("image: resize to zero dimension");
    ImageTensor out(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / static_cast<double>(new_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(new_h);
    for (std::size_t y = 0; y < new_h; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        const double cy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(cy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = cy - static_cast<double>(y0);
        for (std::size_t x = 0; x < new_w; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            const double cx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(cx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = cx - static_cast<double>(x0);
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
                const double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
                out.at(x, y, c) = std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0);
            }
        }
    }
    return out;
}

}  // namespace skbsem
