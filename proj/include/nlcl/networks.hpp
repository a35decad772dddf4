#pragma once

#include <vector>

#include <torch/torch.h>

#include "nlcl/image.hpp"
#include "nlcl/patch_grid.hpp"

namespace nlcl {

// Which trunk supplies the patch features for the layer contrast.
enum class LayerEncoder { Discriminator, ImageGenerator, ImageRainGenerator };

struct NetConfig {
    int channels = 3;
    int base_width = 64;
    int res_blocks = 9;
    int proj_dim = 256;
    int proj_hidden = 256;
    double init_gain = 0.02;
};

// ---------------------------------------------------------------------------
// Residual image translator: 7x7 stem, two stride-2 halvings, a stack of
// residual blocks at 4x width, two transposed-conv doublings, 7x7 head mapped
// through (tanh+1)/2 so outputs live in [0, 1]. Instance norm throughout,
// reflection padding at full resolution.
struct ResnetBlockImpl : torch::nn::Module {
    explicit ResnetBlockImpl(int width);
    torch::Tensor forward(const torch::Tensor& x);
    torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(ResnetBlock);

struct ResnetGeneratorImpl : torch::nn::Module {
    ResnetGeneratorImpl(int channels, int base_width, int res_blocks);
    torch::Tensor forward(const torch::Tensor& x);
    // Stride-2 and stride-4 activations of the downsampling path; the
    // channel counts are 2w and 4w, matching the discriminator taps in sum.
    std::vector<torch::Tensor> encoder_features(const torch::Tensor& x);

    torch::nn::Sequential stem{nullptr}, down1{nullptr}, down2{nullptr};
    torch::nn::Sequential blocks{nullptr};
    torch::nn::Sequential up1{nullptr}, up2{nullptr}, head{nullptr};
};
TORCH_MODULE(ResnetGenerator);

// ---------------------------------------------------------------------------
// 70x70-receptive-field patch discriminator split into a convolutional trunk
// (shared with the contrastive feature path and mirrored by a momentum copy)
// and a 1-channel scoring head.
struct DiscTrunkImpl : torch::nn::Module {
    DiscTrunkImpl(int channels, int base_width);
    torch::Tensor forward(const torch::Tensor& x);
    // Stride-4 (2w channels) and stride-8 (4w channels) activations.
    std::vector<torch::Tensor> features(const torch::Tensor& x);

    torch::nn::Sequential c1{nullptr}, c2{nullptr}, c3{nullptr}, c4{nullptr};
};
TORCH_MODULE(DiscTrunk);

struct PatchDiscriminatorImpl : torch::nn::Module {
    PatchDiscriminatorImpl(int channels, int base_width);
    torch::Tensor forward(const torch::Tensor& x);

    DiscTrunk trunk{nullptr};
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

// ---------------------------------------------------------------------------
// Two-layer projection MLP; outputs are L2-normalised feature vectors.
struct ProjectionHeadImpl : torch::nn::Module {
    ProjectionHeadImpl(int in_dim, int hidden, int out_dim);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(ProjectionHead);

// ---------------------------------------------------------------------------
struct NetworkBundle {
    ResnetGenerator g_background{nullptr};
    ResnetGenerator g_rain{nullptr};
    PatchDiscriminator disc{nullptr};
    DiscTrunk ema_trunk{nullptr};  // momentum copy of disc->trunk, never optimised
    ProjectionHead h_layer{nullptr};
    ProjectionHead h_location{nullptr};
    LayerEncoder layer_encoder = LayerEncoder::Discriminator;
    NetConfig config;
};

// Builds all networks with normal(0, init_gain) conv/linear weights, zero
// biases, and the momentum trunk initialised equal to the live trunk. The
// layer head input width follows the encoder choice (6w for the single-trunk
// encoders, 12w when background and rain encoders are concatenated).
NetworkBundle build_bundle(const NetConfig& cfg, LayerEncoder encoder);

void init_weights(torch::nn::Module& module, double gain);

// ema <- m * ema + (1 - m) * live over matching parameters (and buffers).
void momentum_update(torch::nn::Module& live, torch::nn::Module& ema, double momentum);

// Mean-pools trunk feature maps over each patch footprint and concatenates
// across maps: one row per requested grid index. `strides` gives each map's
// downsampling factor relative to the image the grid was built on.
torch::Tensor pool_patch_features(const std::vector<torch::Tensor>& maps,
                                  const std::vector<int>& strides, const PatchGrid& grid,
                                  const std::vector<int>& indices);

// Trunk features for the layer contrast under the configured encoder. `image`
// is the model output (background or rain estimate) as a 1xCxHxW tensor.
std::vector<torch::Tensor> layer_trunk_features(NetworkBundle& bundle, const torch::Tensor& image,
                                                bool momentum_branch);
std::vector<int> layer_trunk_strides(const NetworkBundle& bundle);

// Pooled + projected unit features at `indices`: the full encode path used by
// both contrastive losses.
torch::Tensor encode_layer(NetworkBundle& bundle, const torch::Tensor& image, const PatchGrid& grid,
                           const std::vector<int>& indices, bool momentum_branch);
torch::Tensor encode_location(NetworkBundle& bundle, const torch::Tensor& image,
                              const PatchGrid& grid, const std::vector<int>& indices);

// Image <-> tensor bridges. Tensors are 1xCxHxW float32 on CPU.
torch::Tensor to_tensor(const Image& img);
Image from_tensor(const torch::Tensor& t, bool clamp_unit = true);

}  // namespace nlcl
