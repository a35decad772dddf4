#include "nlcl/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace nlcl {

Image::Image(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0 || (c != 1 && c != 3)) {
        throw std::invalid_argument("Image: bad shape " + std::to_string(h) + "x" + std::to_string(w) +
                                    "x" + std::to_string(c));
    }
    data.assign(static_cast<size_t>(h) * w * c, fill);
}

Image compose(const Image& background, const Image& rain) {
    if (!background.same_shape(rain)) {
        throw std::invalid_argument("compose: background and rain shapes differ");
    }
    Image out(background.height, background.width, background.channels);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = std::clamp(background.data[i] + rain.data[i], 0.0f, 1.0f);
    }
    return out;
}

Image subtract_clamped(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("subtract_clamped: shapes differ");
    }
    Image out(a.height, a.width, a.channels);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = std::clamp(a.data[i] - b.data[i], 0.0f, 1.0f);
    }
    return out;
}

Image crop(const Image& img, int top, int left, int h, int w) {
    if (top < 0 || left < 0 || h <= 0 || w <= 0 || top + h > img.height || left + w > img.width) {
        throw std::out_of_range("crop: window outside image bounds");
    }
    Image out(h, w, img.channels);
    for (int y = 0; y < h; ++y) {
        const float* src = &img.at(top + y, left, 0);
        float* dst = &out.at(y, 0, 0);
        std::copy(src, src + static_cast<size_t>(w) * img.channels, dst);
    }
    return out;
}

Image load_png(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) {
        throw std::runtime_error("load_png: cannot decode " + path.string());
    }
    if (raw.channels() == 4) {
        cv::cvtColor(raw, raw, cv::COLOR_BGRA2BGR);
    }
    if (raw.channels() == 3) {
        cv::cvtColor(raw, raw, cv::COLOR_BGR2RGB);
    }
    if (raw.channels() != 1 && raw.channels() != 3) {
        throw std::runtime_error("load_png: unsupported channel count in " + path.string());
    }

    float scale;
    if (raw.depth() == CV_8U) {
        scale = 1.0f / 255.0f;
    } else if (raw.depth() == CV_16U) {
        scale = 1.0f / 65535.0f;
    } else {
        throw std::runtime_error("load_png: unsupported sample depth in " + path.string());
    }

    cv::Mat as_float;
    raw.convertTo(as_float, CV_32F, scale);

    Image out(as_float.rows, as_float.cols, as_float.channels());
    if (as_float.isContinuous()) {
        std::copy(as_float.ptr<float>(0), as_float.ptr<float>(0) + out.data.size(), out.data.begin());
    } else {
        for (int y = 0; y < out.height; ++y) {
            const float* row = as_float.ptr<float>(y);
            std::copy(row, row + static_cast<size_t>(out.width) * out.channels, &out.at(y, 0, 0));
        }
    }
    return out;
}

void save_png(const std::filesystem::path& path, const Image& img, int bit_depth) {
    if (img.data.empty()) {
        throw std::invalid_argument("save_png: empty image");
    }
    if (bit_depth != 8 && bit_depth != 16) {
        throw std::invalid_argument("save_png: bit depth must be 8 or 16");
    }
    cv::Mat as_float(img.height, img.width, CV_32FC(img.channels), const_cast<float*>(img.data.data()));
    cv::Mat quantised;
    if (bit_depth == 8) {
        as_float.convertTo(quantised, CV_8U, 255.0);
    } else {
        as_float.convertTo(quantised, CV_16U, 65535.0);
    }
    if (img.channels == 3) {
        cv::cvtColor(quantised, quantised, cv::COLOR_RGB2BGR);
    }
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), quantised)) {
        throw std::runtime_error("save_png: cannot write " + path.string());
    }
}

double mean_abs(const Image& img) {
    if (img.data.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (float v : img.data) {
        acc += std::abs(static_cast<double>(v));
    }
    return acc / static_cast<double>(img.data.size());
}

}  // namespace nlcl
