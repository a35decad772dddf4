#pragma once

#include <utility>
#include <vector>

#include <torch/torch.h>

#include "nlcl/networks.hpp"

namespace nlcl {

enum class GanMode { Logistic, LeastSquares };

// FullDenominator is standard InfoNCE (the positive term appears in the
// denominator); NegativesOnly drops it, leaving a pure positive-vs-negative
// ratio that can go negative.
enum class ContrastMode { FullDenominator, NegativesOnly };

struct LossWeights {
    double lambda_sparse = 0.1;  // rain L1 weight
    double delta_adv = 1.0;      // adversarial weight
    double mu_layer = 1.0;       // layer contrast weight
    double sigma_loc = 1.0;      // location contrast weight
    double tau = 0.77;           // contrastive temperature
};

// Per-step scalar record, mirrored into the training CSV.
struct LossReport {
    double recon = 0.0;
    double sparse = 0.0;
    double adv_g = 0.0;
    double adv_d = 0.0;
    double layer_con = 0.0;
    double loc_con = 0.0;
    double total = 0.0;
    double mean_pos_dist = 0.0;
};

// Mean squared residual of the decomposition, mean |.|, both over all elements.
torch::Tensor reconstruction_loss(const torch::Tensor& background, const torch::Tensor& rain,
                                  const torch::Tensor& observed);
torch::Tensor rain_sparsity(const torch::Tensor& rain);

// Raw-score adversarial terms. Logistic mode uses softplus identities, so the
// values stay finite for any score; least-squares mode targets 1/0.
torch::Tensor adv_discriminator_loss(const torch::Tensor& real_scores,
                                     const torch::Tensor& fake_scores, GanMode mode);
torch::Tensor adv_generator_loss(const torch::Tensor& fake_scores, GanMode mode);

// Convenience wrapper running the discriminator on both images; the fake is
// detached for the discriminator term. Returns {generator, discriminator}.
std::pair<torch::Tensor, torch::Tensor> adversarial_losses(PatchDiscriminator& disc,
                                                           const torch::Tensor& fake,
                                                           const torch::Tensor& real, GanMode mode);

// Noise-contrastive attraction within groups of keys against a shared
// negative set. `anchors` and `keys` are row-aligned [n, d] unit features;
// for each group and each member, the other members' keys are positives.
// Softmax ratios are evaluated via logsumexp (max-subtracted), and the result
// is the mean over all (anchor, positive) pairs.
torch::Tensor grouped_info_nce(const torch::Tensor& anchors, const torch::Tensor& keys,
                               const std::vector<std::vector<int>>& groups,
                               const torch::Tensor& negatives, double tau, ContrastMode mode);

// Single-positive convenience form: positives[i] is anchor i's only positive.
torch::Tensor info_nce(const torch::Tensor& anchors, const torch::Tensor& positives,
                       const torch::Tensor& negatives, double tau, ContrastMode mode);

// Two-sided layer contrast: background features attract each other and repel
// rain features, and vice versa. Background rows form one group; rain rows
// are grouped by `rain_groups` (indices into the rain feature rows).
torch::Tensor layer_contrastive(const torch::Tensor& bg_anchors, const torch::Tensor& bg_keys,
                                const torch::Tensor& rain_anchors, const torch::Tensor& rain_keys,
                                const std::vector<std::vector<int>>& rain_groups, double tau,
                                ContrastMode mode);

// Same-location attraction between the composed image and the background
// estimate. `query_obs`/`query_bg` are row-aligned [n, d]; negatives is
// [n, m, d], each query's own negative set drawn from the composed image.
torch::Tensor location_contrastive(const torch::Tensor& query_obs, const torch::Tensor& query_bg,
                                   const torch::Tensor& negatives, double tau, ContrastMode mode);

torch::Tensor total_generator_loss(const torch::Tensor& recon, const torch::Tensor& sparse,
                                   const torch::Tensor& adv_g, const torch::Tensor& layer_con,
                                   const torch::Tensor& loc_con, const LossWeights& weights);

}  // namespace nlcl
