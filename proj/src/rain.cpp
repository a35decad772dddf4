#include "nlcl/rain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace nlcl {

namespace {

void validate(const StreakParams& p) {
    if (p.density < 0.0 || p.density > 0.2) {
        throw std::invalid_argument("synthesize_streaks: density must be in [0, 0.2]");
    }
    if (p.length < 1.0) {
        throw std::invalid_argument("synthesize_streaks: length must be >= 1");
    }
    if (p.angle_deg <= -45.0 || p.angle_deg >= 45.0) {
        throw std::invalid_argument("synthesize_streaks: angle must be in (-45, 45) degrees");
    }
    if (p.intensity < 0.0 || p.intensity > 1.0) {
        throw std::invalid_argument("synthesize_streaks: intensity must be in [0, 1]");
    }
    if (p.veiling < 0.0 || p.veiling > 0.5) {
        throw std::invalid_argument("synthesize_streaks: veiling must be in [0, 0.5]");
    }
}

struct KernelTap {
    int dy;
    int dx;
    double w;
};

// Bilinear footprint of a unit-mass line segment through the origin.
std::vector<KernelTap> line_kernel(double length, double angle_deg) {
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double dx = std::sin(rad);
    const double dy = std::cos(rad);
    const int samples = std::max(2, static_cast<int>(std::lround(length * 2.0)));

    std::vector<KernelTap> taps;
    double total = 0.0;
    auto deposit = [&](int y, int x, double w) {
        if (w <= 0.0) {
            return;
        }
        for (auto& t : taps) {
            if (t.dy == y && t.dx == x) {
                t.w += w;
                total += w;
                return;
            }
        }
        taps.push_back({y, x, w});
        total += w;
    };

    for (int s = 0; s < samples; ++s) {
        const double t = (static_cast<double>(s) / (samples - 1) - 0.5) * length;
        const double px = t * dx;
        const double py = t * dy;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        deposit(y0, x0, (1.0 - fy) * (1.0 - fx));
        deposit(y0, x0 + 1, (1.0 - fy) * fx);
        deposit(y0 + 1, x0, fy * (1.0 - fx));
        deposit(y0 + 1, x0 + 1, fy * fx);
    }
    for (auto& t : taps) {
        t.w /= total;
    }
    return taps;
}

}  // namespace

Image synthesize_streaks(int height, int width, int channels, const StreakParams& params) {
    validate(params);
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("synthesize_streaks: channels must be 1 or 3");
    }

    const size_t pixels = static_cast<size_t>(height) * width;
    std::vector<double> field(pixels, 0.0);

    std::mt19937_64 rng(params.seed);
    const size_t n_sites = static_cast<size_t>(params.density * static_cast<double>(pixels));

    // Partial Fisher-Yates over pixel indices: exactly n_sites distinct sites.
    std::vector<std::uint32_t> order(pixels);
    for (size_t i = 0; i < pixels; ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    std::uniform_real_distribution<double> amp_dist(0.5, 1.0);
    const auto taps = line_kernel(params.length, params.angle_deg);

    for (size_t i = 0; i < n_sites; ++i) {
        std::uniform_int_distribution<size_t> pick(i, pixels - 1);
        std::swap(order[i], order[pick(rng)]);
        const int y = static_cast<int>(order[i] / width);
        const int x = static_cast<int>(order[i] % width);
        const double amp = amp_dist(rng);
        for (const auto& tap : taps) {
            const int yy = y + tap.dy;
            const int xx = x + tap.dx;
            if (yy >= 0 && yy < height && xx >= 0 && xx < width) {
                field[static_cast<size_t>(yy) * width + xx] += amp * tap.w;
            }
        }
    }

    Image out(height, width, channels);
    for (size_t i = 0; i < pixels; ++i) {
        const double v = std::clamp(field[i] * params.intensity + params.veiling, 0.0, 1.0);
        for (int c = 0; c < channels; ++c) {
            out.data[i * channels + c] = static_cast<float>(v);
        }
    }
    return out;
}

Image make_clean_texture(int height, int width, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    struct Wave {
        double fy, fx, phase, gain[3];
    };
    std::vector<Wave> waves(3);
    for (auto& w : waves) {
        // Integer cycle counts keep the pattern exactly periodic across the image.
        w.fy = static_cast<double>(1 + static_cast<int>(unit(rng) * 4.0));
        w.fx = static_cast<double>(1 + static_cast<int>(unit(rng) * 4.0));
        w.phase = unit(rng) * 2.0 * std::numbers::pi;
        const double shared = 0.08 + 0.10 * unit(rng);
        for (double& g : w.gain) {
            g = shared * (0.7 + 0.6 * unit(rng));
        }
    }

    struct Blob {
        double cy, cx, radius, gain[3];
    };
    std::vector<Blob> blobs(2 + static_cast<int>(unit(rng) * 3.0));
    for (auto& b : blobs) {
        b.cy = unit(rng) * height;
        b.cx = unit(rng) * width;
        b.radius = (0.08 + 0.12 * unit(rng)) * std::min(height, width);
        for (double& g : b.gain) {
            g = (unit(rng) - 0.5) * 0.5;
        }
    }

    double grad[3][3];
    for (auto& row : grad) {
        row[0] = 0.35 + 0.3 * unit(rng);               // offset
        row[1] = (unit(rng) - 0.5) * 0.25;             // per-x slope
        row[2] = (unit(rng) - 0.5) * 0.25;             // per-y slope
    }

    Image out(height, width, channels);
    double lo = 1e9;
    double hi = -1e9;
    std::vector<double> values(out.data.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                double v = grad[c][0] + grad[c][1] * (static_cast<double>(x) / width) +
                           grad[c][2] * (static_cast<double>(y) / height);
                for (const auto& w : waves) {
                    v += w.gain[c] * std::sin(2.0 * std::numbers::pi *
                                                  (w.fy * y / height + w.fx * x / width) +
                                              w.phase);
                }
                for (const auto& b : blobs) {
                    const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
                    v += b.gain[c] * std::exp(-d2 / (2.0 * b.radius * b.radius));
                }
                values[(static_cast<size_t>(y) * width + x) * channels + c] = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }

    const double span = std::max(hi - lo, 1e-9);
    for (size_t i = 0; i < values.size(); ++i) {
        out.data[i] = static_cast<float>(0.08 + 0.84 * (values[i] - lo) / span);
    }
    return out;
}

void write_dataset(const std::filesystem::path& root, const DatasetSpec& spec) {
    if (spec.n_rainy <= 0 || spec.n_clean <= 0) {
        throw std::invalid_argument("write_dataset: need at least one rainy and one clean image");
    }
    char name[16];
    auto png_name = [&name](int i) {
        std::snprintf(name, sizeof(name), "%03d.png", i);
        return std::string(name);
    };

    for (int i = 0; i < spec.n_rainy; ++i) {
        Image base = make_clean_texture(spec.height, spec.width, spec.channels, spec.seed + 1000 + i);
        StreakParams sp = spec.streaks;
        sp.seed = spec.seed + 2000 + i;
        Image rain = synthesize_streaks(spec.height, spec.width, spec.channels, sp);
        save_png(root / "rainy" / png_name(i), compose(base, rain), 16);
    }
    for (int i = 0; i < spec.n_clean; ++i) {
        Image clean = make_clean_texture(spec.height, spec.width, spec.channels, spec.seed + 3000 + i);
        save_png(root / "clean" / png_name(i), clean, 16);
    }
    for (int i = 0; i < spec.n_test; ++i) {
        Image base = make_clean_texture(spec.height, spec.width, spec.channels, spec.seed + 4000 + i);
        StreakParams sp = spec.streaks;
        sp.seed = spec.seed + 5000 + i;
        Image rain = synthesize_streaks(spec.height, spec.width, spec.channels, sp);
        save_png(root / "test" / "gt" / png_name(i), base, 16);
        save_png(root / "test" / "rainy" / png_name(i), compose(base, rain), 16);
    }
}

}  // namespace nlcl
