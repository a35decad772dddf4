#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nlcl {

// Dense float image, row-major, channels interleaved (HWC), values in [0, 1].
// Channel count is 1 or 3; loaders normalise PNG samples by the type maximum.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f);

    float& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    const float& at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

// Screen-blend-free additive composition O = clamp(B + R, 0, 1).
Image compose(const Image& background, const Image& rain);

// Elementwise clamped difference clamp(a - b, 0, 1); used to read a rain layer
// back out of a composed image.
Image subtract_clamped(const Image& a, const Image& b);

Image crop(const Image& img, int top, int left, int h, int w);

// PNG round trip via OpenCV. Loading accepts 8- and 16-bit files (alpha is
// dropped) and divides by the sample-type maximum; saving quantises to the
// requested bit depth. Both throw std::runtime_error with the path on failure.
Image load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

double mean_abs(const Image& img);

}  // namespace nlcl
