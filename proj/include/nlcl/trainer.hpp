#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "nlcl/dataset.hpp"
#include "nlcl/losses.hpp"
#include "nlcl/networks.hpp"
#include "nlcl/sampling.hpp"

namespace nlcl {

struct TrainConfig {
    // run control
    std::uint32_t seed = 0;
    int iters = 10000;
    int batch = 4;
    int crop = 256;
    int checkpoint_every = 500;
    bool deterministic = true;

    // optimisation
    double lr = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double momentum = 0.99;  // EMA rate of the momentum trunk

    // networks
    int base_width = 64;
    int res_blocks = 9;

    // patch machinery
    int patch = 32;
    int stride = 8;
    int n_location = 256;    // location-contrast queries (and negatives per query)
    int n_background = 8;    // background patch set size
    int n_rain = 256;        // rain patch total
    int rain_group = 8;      // rain patches per mutually similar group

    // strategies
    PatchStrategy pos_strategy = PatchStrategy::NonLocal;
    PatchStrategy neg_strategy = PatchStrategy::NonLocal;
    LocationNegatives loc_negatives = LocationNegatives::ReverseNonLocal;
    LayerEncoder layer_encoder = LayerEncoder::Discriminator;
    GanMode gan_mode = GanMode::Logistic;
    ContrastMode contrast_mode = ContrastMode::FullDenominator;

    LossWeights weights;
};

// Small-footprint preset that trains in minutes on one CPU core; used by the
// bundled toy dataset and the end-to-end tests.
TrainConfig desk_config();

struct TrainState {
    NetworkBundle bundle;
    std::unique_ptr<torch::optim::Adam> g_opt;
    std::unique_ptr<torch::optim::Adam> d_opt;
    std::mt19937 sample_rng;
    std::int64_t step = 0;
    // Epoch permutation over the rainy pool, serialised with checkpoints so a
    // resumed run follows the identical data order.
    std::vector<std::int64_t> pool_order;
    std::int64_t pool_cursor = -1;
};

// Fresh state: seeded RNGs, freshly initialised bundle, Adam over
// generators + projection heads and over the discriminator respectively.
TrainState make_train_state(const TrainConfig& cfg);

// One optimisation step on an already-assembled batch:
//   1. forward both generators;
//   2. discriminator step (real clean crops vs detached background);
//   3. momentum trunk update;
//   4. per-image patch and location sampling on the detached estimates;
//   5. feature encodes (live anchors, momentum keys) and all generator terms;
//   6. generator step with the discriminator frozen;
//   7. scalar report for the log.
LossReport train_step(TrainState& state, const TrainConfig& cfg,
                      const std::vector<Image>& rainy_crops,
                      const std::vector<Image>& clean_crops);

// Full loop: loads <data_root>, drives train_step, appends one CSV row per
// step to <out_dir>/log.csv, checkpoints every checkpoint_every steps and at
// the end. `resume_from` continues a previous run bit-for-bit.
void train(const TrainConfig& cfg, const std::filesystem::path& data_root,
           const std::filesystem::path& out_dir, const std::filesystem::path& resume_from = {});

struct DerainResult {
    Image background;  // generator estimate
    Image rain;        // rain generator estimate
    Image residual;    // clamp(input - background)
};

// Runs the background and rain generators on an arbitrary-size image,
// reflection-padding to a multiple of 4 and cropping back.
DerainResult derain(NetworkBundle& bundle, const Image& rainy);

// Single-file checkpoint: every network parameter under a per-network prefix,
// both optimiser states, torch and sampling RNG states, and a JSON metadata
// blob (format version, step, config hash, full config text).
void save_checkpoint(const std::filesystem::path& file, const TrainState& state,
                     const TrainConfig& cfg);
TrainState load_checkpoint(const std::filesystem::path& file, TrainConfig& cfg_out);

inline constexpr const char* kLossCsvHeader =
    "step,recon,sparse,adv_g,adv_d,layer_con,loc_con,total,mean_pos_dist";

// Runs every cell of an ablation axis (see ablation_grid in config.hpp):
// writes <out_root>/<axis>/<cell>/config.txt and trains each cell on the
// given data for base.iters steps.
void run_ablation(const std::string& axis, const TrainConfig& base,
                  const std::filesystem::path& data_root, const std::filesystem::path& out_root);

}  // namespace nlcl
