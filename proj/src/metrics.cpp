#include "nlcl/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nlcl/patch_grid.hpp"
#include "nlcl/sampling.hpp"

namespace nlcl {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("psnr: shape mismatch");
    }
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("ssim: shape mismatch");
    }
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    if (a.height < kWindow || a.width < kWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }

    double kernel[kWindow];
    double ksum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - (kWindow - 1) / 2.0;
        kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += kernel[i];
    }
    for (double& k : kernel) {
        k /= ksum;
    }

    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    const int out_h = a.height - kWindow + 1;
    const int out_w = a.width - kWindow + 1;

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double channel_acc = 0.0;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
                for (int ky = 0; ky < kWindow; ++ky) {
                    for (int kx = 0; kx < kWindow; ++kx) {
                        const double w = kernel[ky] * kernel[kx];
                        const double va = a.at(oy + ky, ox + kx, c);
                        const double vb = b.at(oy + ky, ox + kx, c);
                        mu_a += w * va;
                        mu_b += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
                const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
                channel_acc += num / den;
            }
        }
        total += channel_acc / (static_cast<double>(out_h) * out_w);
    }
    return total / a.channels;
}

MetricResult compare(const Image& a, const Image& b) {
    return {psnr(a, b), ssim(a, b)};
}

void dump_embeddings(NetworkBundle& bundle, const std::vector<Image>& rainy_images, int patch,
                     int stride, int max_per_class_per_image,
                     const std::filesystem::path& out_tsv) {
    if (!out_tsv.parent_path().empty()) {
        std::filesystem::create_directories(out_tsv.parent_path());
    }
    std::ofstream out(out_tsv);
    if (!out) {
        throw std::runtime_error("dump_embeddings: cannot write " + out_tsv.string());
    }
    out << "label";
    for (int i = 0; i < bundle.config.proj_dim; ++i) {
        out << "\tf" << i;
    }
    out << "\n";

    torch::NoGradGuard no_grad;
    const bool was_training = bundle.g_background->is_training();
    bundle.g_background->eval();
    bundle.g_rain->eval();
    bundle.disc->eval();
    bundle.h_layer->eval();

    auto write_rows = [&](const char* label, const torch::Tensor& feats) {
        for (int r = 0; r < feats.size(0); ++r) {
            out << label;
            auto row = feats[r];
            for (int c = 0; c < feats.size(1); ++c) {
                out << '\t' << row[c].item<float>();
            }
            out << "\n";
        }
    };

    for (const auto& rainy : rainy_images) {
        auto o = to_tensor(rainy);
        auto bg = bundle.g_background->forward(o);
        auto rain = bundle.g_rain->forward(o);
        for (int side = 0; side < 2; ++side) {
            const auto& est = side == 0 ? bg : rain;
            const PatchGrid grid = build_grid(from_tensor(est), patch, stride);
            std::vector<int> indices;
            const int take = std::min(max_per_class_per_image, grid.count());
            // Deterministic even spread over the grid.
            for (int i = 0; i < take; ++i) {
                indices.push_back(static_cast<int>(static_cast<int64_t>(i) * grid.count() / take));
            }
            auto feats = encode_layer(bundle, est, grid, indices, /*momentum_branch=*/false);
            write_rows(side == 0 ? "background" : "rain", feats);
        }
    }
    if (was_training) {
        bundle.g_background->train();
        bundle.g_rain->train();
        bundle.disc->train();
        bundle.h_layer->train();
    }
}

EmbeddingSeparation embedding_separation(const std::filesystem::path& tsv) {
    std::ifstream in(tsv);
    if (!in) {
        throw std::runtime_error("embedding_separation: cannot read " + tsv.string());
    }
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows[2];
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        std::string label;
        ss >> label;
        std::vector<double> v;
        double x;
        while (ss >> x) {
            v.push_back(x);
        }
        if (label == "background") {
            rows[0].push_back(std::move(v));
        } else if (label == "rain") {
            rows[1].push_back(std::move(v));
        } else {
            throw std::runtime_error("embedding_separation: unknown label " + label);
        }
    }
    if (rows[0].empty() || rows[1].empty()) {
        throw std::runtime_error("embedding_separation: need both classes present");
    }

    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        return dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
    };

    EmbeddingSeparation sep;
    double intra_acc = 0.0;
    size_t intra_n = 0;
    for (const auto& cls : rows) {
        for (size_t i = 0; i < cls.size(); ++i) {
            for (size_t j = i + 1; j < cls.size(); ++j) {
                intra_acc += cosine(cls[i], cls[j]);
                ++intra_n;
            }
        }
    }
    double inter_acc = 0.0;
    size_t inter_n = 0;
    for (const auto& a : rows[0]) {
        for (const auto& b : rows[1]) {
            inter_acc += cosine(a, b);
            ++inter_n;
        }
    }
    sep.intra = intra_acc / static_cast<double>(intra_n);
    sep.inter = inter_acc / static_cast<double>(inter_n);
    return sep;
}

}  // namespace nlcl
