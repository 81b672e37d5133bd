#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace skbsem {

// W x H x C image with pixels in [0,1], stored row-major as [y][x][c].
struct ImageTensor {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<double> pixels;

    ImageTensor() = default;
    ImageTensor(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0);

    std::size_t size() const { return pixels.size(); }
    double& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
    double at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

    bool same_dims(const ImageTensor& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Raw image file: magic "SKBI", then u32 little-endian W, H, C, then
// W*H*C little-endian f32 pixels in [y][x][c] order.
void save_image(const std::string& path, const ImageTensor& img);
ImageTensor load_image(const std::string& path);

// Bilinear resample to new dimensions; channel count unchanged. Output
// clamped to [0,1].
ImageTensor resize_bilinear(const ImageTensor& img, std::size_t new_w, std::size_t new_h);

}  // namespace skbsem
