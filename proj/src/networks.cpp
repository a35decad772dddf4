#include "nlcl/networks.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace nlcl {

namespace {

torch::nn::InstanceNorm2d make_norm(int width) {
    return torch::nn::InstanceNorm2d(
        torch::nn::InstanceNorm2dOptions(width).affine(false).track_running_stats(false));
}

}  // namespace

// ---------------------------------------------------------------------------
ResnetBlockImpl::ResnetBlockImpl(int width) {
    body = torch::nn::Sequential(
        torch::nn::ReflectionPad2d(1),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(width, width, 3)),
        make_norm(width),
        torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)),
        torch::nn::ReflectionPad2d(1),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(width, width, 3)),
        make_norm(width));
    register_module("body", body);
}

torch::Tensor ResnetBlockImpl::forward(const torch::Tensor& x) {
    return x + body->forward(x);
}

ResnetGeneratorImpl::ResnetGeneratorImpl(int channels, int base_width, int res_blocks) {
    const int w = base_width;
    stem = torch::nn::Sequential(torch::nn::ReflectionPad2d(3),
                                 torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, w, 7)),
                                 make_norm(w),
                                 torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)));
    down1 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(w, 2 * w, 3).stride(2).padding(1)),
        make_norm(2 * w), torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)));
    down2 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * w, 4 * w, 3).stride(2).padding(1)),
        make_norm(4 * w), torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)));
    blocks = torch::nn::Sequential();
    for (int i = 0; i < res_blocks; ++i) {
        blocks->push_back(ResnetBlock(4 * w));
    }
    up1 = torch::nn::Sequential(
        torch::nn::ConvTranspose2d(
            torch::nn::ConvTranspose2dOptions(4 * w, 2 * w, 3).stride(2).padding(1).output_padding(1)),
        make_norm(2 * w), torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)));
    up2 = torch::nn::Sequential(
        torch::nn::ConvTranspose2d(
            torch::nn::ConvTranspose2dOptions(2 * w, w, 3).stride(2).padding(1).output_padding(1)),
        make_norm(w), torch::nn::ReLU(torch::nn::ReLUOptions().inplace(true)));
    head = torch::nn::Sequential(torch::nn::ReflectionPad2d(3),
                                 torch::nn::Conv2d(torch::nn::Conv2dOptions(w, channels, 7)));

    register_module("stem", stem);
    register_module("down1", down1);
    register_module("down2", down2);
    register_module("blocks", blocks);
    register_module("up1", up1);
    register_module("up2", up2);
    register_module("head", head);
}

torch::Tensor ResnetGeneratorImpl::forward(const torch::Tensor& x) {
    TORCH_CHECK(x.dim() == 4, "generator expects NCHW input");
    TORCH_CHECK(x.size(2) % 4 == 0 && x.size(3) % 4 == 0,
                "generator input sides must be multiples of 4, got ", x.size(2), "x", x.size(3));
    auto h = stem->forward(x);
    h = down1->forward(h);
    h = down2->forward(h);
    h = blocks->forward(h);
    h = up1->forward(h);
    h = up2->forward(h);
    h = head->forward(h);
    return (torch::tanh(h) + 1.0) * 0.5;
}

std::vector<torch::Tensor> ResnetGeneratorImpl::encoder_features(const torch::Tensor& x) {
    auto h = stem->forward(x);
    auto f1 = down1->forward(h);
    auto f2 = down2->forward(f1);
    return {f1, f2};
}

// ---------------------------------------------------------------------------
DiscTrunkImpl::DiscTrunkImpl(int channels, int base_width) {
    const int w = base_width;
    c1 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, w, 4).stride(2).padding(1)),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    c2 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(w, 2 * w, 4).stride(2).padding(1)),
        make_norm(2 * w),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    c3 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * w, 4 * w, 4).stride(2).padding(1)),
        make_norm(4 * w),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    c4 = torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(4 * w, 8 * w, 4).stride(1).padding(1)),
        make_norm(8 * w),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    register_module("c1", c1);
    register_module("c2", c2);
    register_module("c3", c3);
    register_module("c4", c4);
}

torch::Tensor DiscTrunkImpl::forward(const torch::Tensor& x) {
    return c4->forward(c3->forward(c2->forward(c1->forward(x))));
}

std::vector<torch::Tensor> DiscTrunkImpl::features(const torch::Tensor& x) {
    auto f1 = c2->forward(c1->forward(x));
    auto f2 = c3->forward(f1);
    return {f1, f2};
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int channels, int base_width) {
    trunk = DiscTrunk(channels, base_width);
    head = torch::nn::Conv2d(torch::nn::Conv2dOptions(8 * base_width, 1, 4).stride(1).padding(1));
    register_module("trunk", trunk);
    register_module("head", head);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
    return head->forward(trunk->forward(x));
}

// ---------------------------------------------------------------------------
ProjectionHeadImpl::ProjectionHeadImpl(int in_dim, int hidden, int out_dim) {
    fc1 = torch::nn::Linear(in_dim, hidden);
    fc2 = torch::nn::Linear(hidden, out_dim);
    register_module("fc1", fc1);
    register_module("fc2", fc2);
}

torch::Tensor ProjectionHeadImpl::forward(const torch::Tensor& x) {
    auto h = fc2->forward(torch::relu(fc1->forward(x)));
    return h / h.norm(2, /*dim=*/1, /*keepdim=*/true).clamp_min(1e-12);
}

// ---------------------------------------------------------------------------
void init_weights(torch::nn::Module& module, double gain) {
    torch::NoGradGuard no_grad;
    for (auto& sub : module.modules(/*include_self=*/true)) {
        if (auto* conv = sub->as<torch::nn::Conv2d>()) {
            conv->weight.normal_(0.0, gain);
            if (conv->bias.defined()) {
                conv->bias.zero_();
            }
        } else if (auto* tconv = sub->as<torch::nn::ConvTranspose2d>()) {
            tconv->weight.normal_(0.0, gain);
            if (tconv->bias.defined()) {
                tconv->bias.zero_();
            }
        } else if (auto* linear = sub->as<torch::nn::Linear>()) {
            linear->weight.normal_(0.0, gain);
            linear->bias.zero_();
        }
    }
}

void momentum_update(torch::nn::Module& live, torch::nn::Module& ema, double momentum) {
    TORCH_CHECK(momentum >= 0.0 && momentum <= 1.0, "momentum must be in [0, 1]");
    torch::NoGradGuard no_grad;
    auto live_params = live.named_parameters();
    auto ema_params = ema.named_parameters();
    TORCH_CHECK(live_params.size() == ema_params.size(),
                "momentum_update: parameter sets differ in size");
    for (const auto& item : live_params) {
        auto* target = ema_params.find(item.key());
        TORCH_CHECK(target != nullptr, "momentum_update: missing parameter ", item.key());
        target->mul_(momentum).add_(item.value(), 1.0 - momentum);
    }
    auto live_buffers = live.named_buffers();
    auto ema_buffers = ema.named_buffers();
    for (const auto& item : live_buffers) {
        auto* target = ema_buffers.find(item.key());
        TORCH_CHECK(target != nullptr, "momentum_update: missing buffer ", item.key());
        if (item.value().is_floating_point()) {
            target->mul_(momentum).add_(item.value(), 1.0 - momentum);
        } else {
            target->copy_(item.value());
        }
    }
}

NetworkBundle build_bundle(const NetConfig& cfg, LayerEncoder encoder) {
    TORCH_CHECK(cfg.base_width > 0 && cfg.res_blocks > 0, "bad network config");
    NetworkBundle b;
    b.config = cfg;
    b.layer_encoder = encoder;
    b.g_background = ResnetGenerator(cfg.channels, cfg.base_width, cfg.res_blocks);
    b.g_rain = ResnetGenerator(cfg.channels, cfg.base_width, cfg.res_blocks);
    b.disc = PatchDiscriminator(cfg.channels, cfg.base_width);
    init_weights(*b.g_background, cfg.init_gain);
    init_weights(*b.g_rain, cfg.init_gain);
    init_weights(*b.disc, cfg.init_gain);

    b.ema_trunk = DiscTrunk(cfg.channels, cfg.base_width);
    {
        torch::NoGradGuard no_grad;
        auto src = b.disc->trunk->named_parameters();
        for (auto& item : b.ema_trunk->named_parameters()) {
            item.value().copy_(*src.find(item.key()));
        }
    }
    for (auto& p : b.ema_trunk->parameters()) {
        p.set_requires_grad(false);
    }

    // Taps concatenate to 6w channels per trunk; the dual-generator encoder
    // stacks both generators' taps.
    const int tap_width = 6 * cfg.base_width;
    const int layer_in = encoder == LayerEncoder::ImageRainGenerator ? 2 * tap_width : tap_width;
    b.h_layer = ProjectionHead(layer_in, cfg.proj_hidden, cfg.proj_dim);
    b.h_location = ProjectionHead(tap_width, cfg.proj_hidden, cfg.proj_dim);
    init_weights(*b.h_layer, cfg.init_gain);
    init_weights(*b.h_location, cfg.init_gain);
    return b;
}

// ---------------------------------------------------------------------------
torch::Tensor pool_patch_features(const std::vector<torch::Tensor>& maps,
                                  const std::vector<int>& strides, const PatchGrid& grid,
                                  const std::vector<int>& indices) {
    TORCH_CHECK(maps.size() == strides.size(), "pool_patch_features: one stride per map");
    TORCH_CHECK(!maps.empty(), "pool_patch_features: no feature maps");

    torch::Tensor index_tensor =
        torch::tensor(std::vector<int64_t>(indices.begin(), indices.end()), torch::kLong);

    std::vector<torch::Tensor> pooled;
    pooled.reserve(maps.size());
    for (size_t m = 0; m < maps.size(); ++m) {
        const auto& f = maps[m];
        TORCH_CHECK(f.dim() == 4 && f.size(0) == 1, "pool_patch_features: expects 1xCxHxW maps");
        const int s = strides[m];
        if (grid.patch % s == 0 && grid.stride % s == 0 &&
            (grid.image_height - grid.patch) % s == 0 &&
            (grid.image_width - grid.patch) % s == 0) {
            // All grid footprints pool in one pass; positions land row-major,
            // exactly matching grid indices.
            auto all = torch::avg_pool2d(f, /*kernel_size=*/grid.patch / s,
                                         /*stride=*/grid.stride / s);
            TORCH_CHECK(all.size(2) == grid.rows && all.size(3) == grid.cols,
                        "pool_patch_features: pooled grid ", all.size(2), "x", all.size(3),
                        " does not match patch grid ", grid.rows, "x", grid.cols);
            auto flat = all.flatten(2).squeeze(0).transpose(0, 1);  // count x C
            pooled.push_back(flat.index_select(0, index_tensor));
        } else {
            std::vector<torch::Tensor> rows;
            rows.reserve(indices.size());
            for (int idx : indices) {
                const auto [top, left] = grid.positions.at(idx);
                const int y0 = top / s;
                const int y1 = std::max(y0 + 1, (top + grid.patch + s - 1) / s);
                const int x0 = left / s;
                const int x1 = std::max(x0 + 1, (left + grid.patch + s - 1) / s);
                rows.push_back(f.slice(2, y0, std::min<int64_t>(y1, f.size(2)))
                                   .slice(3, x0, std::min<int64_t>(x1, f.size(3)))
                                   .mean({2, 3})
                                   .squeeze(0));
            }
            pooled.push_back(torch::stack(rows));
        }
    }
    return torch::cat(pooled, /*dim=*/1);
}

std::vector<int> layer_trunk_strides(const NetworkBundle& bundle) {
    if (bundle.layer_encoder == LayerEncoder::Discriminator) {
        return {4, 8};
    }
    if (bundle.layer_encoder == LayerEncoder::ImageGenerator) {
        return {2, 4};
    }
    return {2, 4, 2, 4};
}

std::vector<torch::Tensor> layer_trunk_features(NetworkBundle& bundle, const torch::Tensor& image,
                                                bool momentum_branch) {
    switch (bundle.layer_encoder) {
        case LayerEncoder::Discriminator: {
            if (momentum_branch) {
                torch::NoGradGuard no_grad;
                return bundle.ema_trunk->features(image);
            }
            return bundle.disc->trunk->features(image);
        }
        case LayerEncoder::ImageGenerator: {
            // No momentum copy is kept for generator encoders; the key branch
            // uses detached live features instead.
            if (momentum_branch) {
                torch::NoGradGuard no_grad;
                return bundle.g_background->encoder_features(image);
            }
            return bundle.g_background->encoder_features(image);
        }
        case LayerEncoder::ImageRainGenerator: {
            auto run = [&](const torch::Tensor& x) {
                auto fb = bundle.g_background->encoder_features(x);
                auto fr = bundle.g_rain->encoder_features(x);
                fb.insert(fb.end(), fr.begin(), fr.end());
                return fb;
            };
            if (momentum_branch) {
                torch::NoGradGuard no_grad;
                return run(image);
            }
            return run(image);
        }
    }
    throw std::logic_error("layer_trunk_features: unknown encoder");
}

torch::Tensor encode_layer(NetworkBundle& bundle, const torch::Tensor& image, const PatchGrid& grid,
                           const std::vector<int>& indices, bool momentum_branch) {
    auto maps = layer_trunk_features(bundle, image, momentum_branch);
    auto pooled = pool_patch_features(maps, layer_trunk_strides(bundle), grid, indices);
    if (momentum_branch) {
        torch::NoGradGuard no_grad;
        return bundle.h_layer->forward(pooled);
    }
    return bundle.h_layer->forward(pooled);
}

torch::Tensor encode_location(NetworkBundle& bundle, const torch::Tensor& image,
                              const PatchGrid& grid, const std::vector<int>& indices) {
    auto maps = bundle.g_background->encoder_features(image);
    auto pooled = pool_patch_features(maps, {2, 4}, grid, indices);
    return bundle.h_location->forward(pooled);
}

// ---------------------------------------------------------------------------
torch::Tensor to_tensor(const Image& img) {
    TORCH_CHECK(!img.data.empty(), "to_tensor: empty image");
    auto t = torch::from_blob(const_cast<float*>(img.data.data()),
                              {img.height, img.width, img.channels}, torch::kFloat32);
    return t.permute({2, 0, 1}).unsqueeze(0).clone();
}

Image from_tensor(const torch::Tensor& t, bool clamp_unit) {
    torch::Tensor x = t;
    if (x.dim() == 4) {
        TORCH_CHECK(x.size(0) == 1, "from_tensor: batch size must be 1");
        x = x.squeeze(0);
    }
    TORCH_CHECK(x.dim() == 3, "from_tensor: expects CxHxW");
    x = x.detach().to(torch::kFloat32);
    if (clamp_unit) {
        x = x.clamp(0.0, 1.0);
    }
    x = x.permute({1, 2, 0}).contiguous();
    Image out(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)),
              static_cast<int>(x.size(2)));
    std::memcpy(out.data.data(), x.data_ptr<float>(), out.data.size() * sizeof(float));
    return out;
}

}  // namespace nlcl
