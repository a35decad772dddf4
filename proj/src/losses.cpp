#include "nlcl/losses.hpp"

namespace nlcl {

namespace {

void check_unit_rows(const torch::Tensor& t, const char* what) {
    TORCH_CHECK(t.dim() >= 2, what, ": expected feature rows");
    auto norms = t.norm(2, /*dim=*/-1);
    const double worst = (norms - 1.0).abs().max().item<double>();
    TORCH_CHECK(worst <= 1e-3, what, ": features must be unit-norm, worst deviation ", worst);
}

// -log( exp(pos) / (exp(pos) + sum exp(negs)) ) per row, or with the positive
// dropped from the denominator in NegativesOnly mode. `pos` is [n], `negs` is
// [n, m]; both already divided by tau.
torch::Tensor nce_rows(const torch::Tensor& pos, const torch::Tensor& negs, ContrastMode mode) {
    if (mode == ContrastMode::FullDenominator) {
        auto all = torch::cat({pos.unsqueeze(1), negs}, /*dim=*/1);
        return torch::logsumexp(all, /*dim=*/1) - pos;
    }
    return torch::logsumexp(negs, /*dim=*/1) - pos;
}

}  // namespace

torch::Tensor reconstruction_loss(const torch::Tensor& background, const torch::Tensor& rain,
                                  const torch::Tensor& observed) {
    TORCH_CHECK(background.sizes() == rain.sizes() && rain.sizes() == observed.sizes(),
                "reconstruction_loss: shape mismatch");
    auto residual = background + rain - observed;
    return residual.square().mean();
}

torch::Tensor rain_sparsity(const torch::Tensor& rain) {
    return rain.abs().mean();
}

torch::Tensor adv_discriminator_loss(const torch::Tensor& real_scores,
                                     const torch::Tensor& fake_scores, GanMode mode) {
    if (mode == GanMode::Logistic) {
        return torch::softplus(-real_scores).mean() + torch::softplus(fake_scores).mean();
    }
    return (real_scores - 1.0).square().mean() + fake_scores.square().mean();
}

torch::Tensor adv_generator_loss(const torch::Tensor& fake_scores, GanMode mode) {
    if (mode == GanMode::Logistic) {
        return torch::softplus(-fake_scores).mean();
    }
    return (fake_scores - 1.0).square().mean();
}

std::pair<torch::Tensor, torch::Tensor> adversarial_losses(PatchDiscriminator& disc,
                                                           const torch::Tensor& fake,
                                                           const torch::Tensor& real,
                                                           GanMode mode) {
    auto g = adv_generator_loss(disc->forward(fake), mode);
    auto d = adv_discriminator_loss(disc->forward(real), disc->forward(fake.detach()), mode);
    return {g, d};
}

torch::Tensor grouped_info_nce(const torch::Tensor& anchors, const torch::Tensor& keys,
                               const std::vector<std::vector<int>>& groups,
                               const torch::Tensor& negatives, double tau, ContrastMode mode) {
    TORCH_CHECK(tau > 0.0, "grouped_info_nce: tau must be positive");
    TORCH_CHECK(anchors.sizes() == keys.sizes(), "grouped_info_nce: anchors/keys shape mismatch");
    check_unit_rows(anchors, "anchors");
    check_unit_rows(keys, "keys");
    check_unit_rows(negatives, "negatives");

    // neg_logits[i, j] = <anchor_i, negative_j> / tau, shared across groups.
    auto neg_logits = torch::matmul(anchors, negatives.transpose(0, 1)) / tau;
    auto key_logits = torch::matmul(anchors, keys.transpose(0, 1)) / tau;

    std::vector<int64_t> anchor_of_pair;
    std::vector<int64_t> positive_of_pair;
    for (const auto& group : groups) {
        for (int a : group) {
            TORCH_CHECK(a >= 0 && a < anchors.size(0), "grouped_info_nce: group index ", a,
                        " outside feature rows");
            for (int p : group) {
                if (p == a) {
                    continue;
                }
                anchor_of_pair.push_back(a);
                positive_of_pair.push_back(p);
            }
        }
    }
    TORCH_CHECK(!anchor_of_pair.empty(), "grouped_info_nce: no (anchor, positive) pairs");
    auto ai = torch::tensor(anchor_of_pair, torch::kLong);
    auto pi = torch::tensor(positive_of_pair, torch::kLong);
    auto pos = key_logits.index({ai, pi});
    auto negs = neg_logits.index_select(0, ai);
    return nce_rows(pos, negs, mode).mean();
}

torch::Tensor info_nce(const torch::Tensor& anchors, const torch::Tensor& positives,
                       const torch::Tensor& negatives, double tau, ContrastMode mode) {
    TORCH_CHECK(tau > 0.0, "info_nce: tau must be positive");
    TORCH_CHECK(anchors.sizes() == positives.sizes(), "info_nce: anchors/positives mismatch");
    check_unit_rows(anchors, "anchors");
    check_unit_rows(positives, "positives");
    check_unit_rows(negatives, "negatives");
    auto pos = (anchors * positives).sum(/*dim=*/1) / tau;
    auto negs = torch::matmul(anchors, negatives.transpose(0, 1)) / tau;
    return nce_rows(pos, negs, mode).mean();
}

torch::Tensor layer_contrastive(const torch::Tensor& bg_anchors, const torch::Tensor& bg_keys,
                                const torch::Tensor& rain_anchors, const torch::Tensor& rain_keys,
                                const std::vector<std::vector<int>>& rain_groups, double tau,
                                ContrastMode mode) {
    std::vector<std::vector<int>> bg_group(1);
    bg_group[0].resize(bg_anchors.size(0));
    for (int i = 0; i < bg_anchors.size(0); ++i) {
        bg_group[0][i] = i;
    }
    auto bg_side = grouped_info_nce(bg_anchors, bg_keys, bg_group, rain_keys, tau, mode);
    auto rain_side = grouped_info_nce(rain_anchors, rain_keys, rain_groups, bg_keys, tau, mode);
    return bg_side + rain_side;
}

torch::Tensor location_contrastive(const torch::Tensor& query_obs, const torch::Tensor& query_bg,
                                   const torch::Tensor& negatives, double tau, ContrastMode mode) {
    TORCH_CHECK(tau > 0.0, "location_contrastive: tau must be positive");
    TORCH_CHECK(query_obs.sizes() == query_bg.sizes(),
                "location_contrastive: query shape mismatch");
    TORCH_CHECK(negatives.dim() == 3 && negatives.size(0) == query_obs.size(0),
                "location_contrastive: negatives must be [n, m, d]");
    check_unit_rows(query_obs, "query_obs");
    check_unit_rows(query_bg, "query_bg");
    check_unit_rows(negatives, "negatives");

    // The background-side query is the anchor; its negatives come from other
    // locations of the composed image.
    auto pos = (query_obs * query_bg).sum(/*dim=*/1) / tau;
    auto negs = torch::einsum("nmd,nd->nm", {negatives, query_bg}) / tau;
    return nce_rows(pos, negs, mode).mean();
}

torch::Tensor total_generator_loss(const torch::Tensor& recon, const torch::Tensor& sparse,
                                   const torch::Tensor& adv_g, const torch::Tensor& layer_con,
                                   const torch::Tensor& loc_con, const LossWeights& weights) {
    return recon + weights.lambda_sparse * sparse + weights.delta_adv * adv_g +
           weights.mu_layer * layer_con + weights.sigma_loc * loc_con;
}

}  // namespace nlcl
