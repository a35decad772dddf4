#pragma once

#include <filesystem>
#include <vector>

#include "nlcl/image.hpp"
#include "nlcl/networks.hpp"

namespace nlcl {

struct MetricResult {
    double psnr = 0.0;
    double ssim = 0.0;
};

// Peak signal-to-noise ratio against a [0, 1] peak, computed in double.
// Identical inputs return +infinity.
double psnr(const Image& a, const Image& b);

// Structural similarity with the standard 11-tap Gaussian window (sigma 1.5),
// stabilisers K1=0.01, K2=0.03 on unit range, evaluated on valid windows only
// and averaged over channels. Requires both sides >= 11 pixels.
double ssim(const Image& a, const Image& b);

MetricResult compare(const Image& a, const Image& b);

// Writes one TSV row per sampled patch: a class label ("background"/"rain")
// followed by the pooled + projected layer features of the corresponding
// model estimate. Patches come from a grid over each decomposed input.
void dump_embeddings(NetworkBundle& bundle, const std::vector<Image>& rainy_images, int patch,
                     int stride, int max_per_class_per_image,
                     const std::filesystem::path& out_tsv);

// Mean cosine similarity within and across the two label classes of a dump
// produced by dump_embeddings; used to check that the feature space separates
// the layers.
struct EmbeddingSeparation {
    double intra = 0.0;
    double inter = 0.0;
};
EmbeddingSeparation embedding_separation(const std::filesystem::path& tsv);

}  // namespace nlcl
