#include "nlcl/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nlcl/config.hpp"

namespace nlcl {

namespace {

void validate_config(const TrainConfig& cfg) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (cfg.batch < 1) fail("batch must be >= 1");
    if (cfg.iters < 1) fail("iters must be >= 1");
    if (cfg.crop < 16 || cfg.crop % 4 != 0) fail("crop must be a multiple of 4 and >= 16");
    if (cfg.patch < 2 || cfg.patch > cfg.crop) fail("patch must be in [2, crop]");
    if (cfg.stride < 1) fail("stride must be >= 1");
    if (cfg.lr <= 0.0) fail("lr must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) fail("momentum must be in [0, 1)");
    if (cfg.weights.tau <= 0.0) fail("tau must be positive");
    if (cfg.base_width < 1 || cfg.res_blocks < 1) fail("network sizes must be >= 1");
    if (cfg.rain_group < 2) fail("rain_group must be >= 2");
    if (cfg.n_background < 2) fail("n_pos must be >= 2");
    if (cfg.n_rain < 1) fail("n_neg must be >= 1");
    if (cfg.n_location < 1) fail("n_loc must be >= 1");

    const int per_side = (cfg.crop - cfg.patch) / cfg.stride + 1;
    const int count = per_side * per_side;
    if (cfg.n_background > count) fail("n_pos exceeds the patch grid (" + std::to_string(count) + ")");
    if (cfg.rain_group > count) fail("rain_group exceeds the patch grid");
    if (cfg.n_location > count - 1) {
        fail("n_loc must leave room for negatives on the grid (" + std::to_string(count) + ")");
    }
}

std::string archive_key(const std::string& prefix, std::string name) {
    for (char& c : name) {
        if (c == '.') {
            c = '/';
        }
    }
    return prefix + "/" + name;
}

struct NamedNets {
    std::vector<std::pair<std::string, torch::nn::Module*>> items;
};

NamedNets named_nets(NetworkBundle& b) {
    return {{{"gB", b.g_background.get()},
             {"gR", b.g_rain.get()},
             {"D", b.disc.get()},
             {"emaD", b.ema_trunk.get()},
             {"hLayer", b.h_layer.get()},
             {"hLoc", b.h_location.get()}}};
}

torch::Tensor string_to_tensor(const std::string& s) {
    auto t = torch::empty({static_cast<int64_t>(s.size())}, torch::kUInt8);
    std::memcpy(t.data_ptr<uint8_t>(), s.data(), s.size());
    return t;
}

std::string tensor_to_string(const torch::Tensor& t) {
    auto c = t.contiguous();
    return std::string(reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), c.numel());
}

}  // namespace

TrainConfig desk_config() {
    TrainConfig cfg;
    cfg.iters = 2000;
    cfg.batch = 4;
    cfg.crop = 96;
    cfg.lr = 2e-4;
    cfg.base_width = 16;
    cfg.res_blocks = 6;
    cfg.patch = 16;
    cfg.stride = 4;
    cfg.n_location = 128;
    cfg.n_background = 8;
    cfg.n_rain = 128;
    cfg.checkpoint_every = 500;
    return cfg;
}

TrainState make_train_state(const TrainConfig& cfg) {
    validate_config(cfg);
    if (cfg.deterministic) {
        at::set_num_threads(1);
    }
    torch::manual_seed(cfg.seed);

    TrainState st;
    NetConfig net;
    net.base_width = cfg.base_width;
    net.res_blocks = cfg.res_blocks;
    st.bundle = build_bundle(net, cfg.layer_encoder);

    std::vector<torch::Tensor> g_params;
    for (auto* m : {static_cast<torch::nn::Module*>(st.bundle.g_background.get()),
                    static_cast<torch::nn::Module*>(st.bundle.g_rain.get()),
                    static_cast<torch::nn::Module*>(st.bundle.h_layer.get()),
                    static_cast<torch::nn::Module*>(st.bundle.h_location.get())}) {
        for (auto& p : m->parameters()) {
            g_params.push_back(p);
        }
    }
    auto opts = torch::optim::AdamOptions(cfg.lr).betas({cfg.adam_beta1, cfg.adam_beta2});
    st.g_opt = std::make_unique<torch::optim::Adam>(g_params, opts);
    st.d_opt = std::make_unique<torch::optim::Adam>(st.bundle.disc->parameters(), opts);
    st.sample_rng.seed(cfg.seed ^ 0x9e3779b9u);
    return st;
}

LossReport train_step(TrainState& st, const TrainConfig& cfg,
                      const std::vector<Image>& rainy_crops,
                      const std::vector<Image>& clean_crops) {
    TORCH_CHECK(!rainy_crops.empty() && rainy_crops.size() == clean_crops.size(),
                "train_step: batch lists must be non-empty and equal-sized");
    auto& bundle = st.bundle;
    bundle.g_background->train();
    bundle.g_rain->train();
    bundle.disc->train();
    bundle.h_layer->train();
    bundle.h_location->train();

    std::vector<torch::Tensor> o_list, c_list;
    for (size_t i = 0; i < rainy_crops.size(); ++i) {
        o_list.push_back(to_tensor(rainy_crops[i]));
        c_list.push_back(to_tensor(clean_crops[i]));
    }
    auto O = torch::cat(o_list, 0);
    auto C = torch::cat(c_list, 0);

    auto B = bundle.g_background->forward(O);
    auto R = bundle.g_rain->forward(O);

    // A term with zero weight is skipped outright, not just scaled away, so
    // loss-removal configurations cost nothing and touch no optimiser state.
    const bool use_adv = cfg.weights.delta_adv != 0.0;
    const bool use_layer = cfg.weights.mu_layer != 0.0;
    const bool use_loc = cfg.weights.sigma_loc != 0.0;

    // Discriminator step: unpaired clean crops are real, the detached
    // background estimate is fake.
    auto adv_d = torch::zeros({}, O.options());
    if (use_adv) {
        adv_d = adv_discriminator_loss(bundle.disc->forward(C), bundle.disc->forward(B.detach()),
                                       cfg.gan_mode);
        st.d_opt->zero_grad();
        adv_d.backward();
        st.d_opt->step();
    }

    momentum_update(*bundle.disc->trunk, *bundle.ema_trunk, cfg.momentum);

    // Generator phase: the discriminator still shapes gradients through its
    // trunk, but its own weights stay fixed.
    for (auto& p : bundle.disc->parameters()) {
        p.set_requires_grad(false);
    }

    const LayerSampleConfig layer_cfg{cfg.n_background, cfg.n_rain, cfg.rain_group,
                                      cfg.pos_strategy, cfg.neg_strategy};
    std::vector<torch::Tensor> layer_terms;
    std::vector<torch::Tensor> loc_terms;
    double mean_pos_dist = 0.0;
    const int batch = static_cast<int>(O.size(0));

    for (int i = 0; i < batch && (use_layer || use_loc); ++i) {
        auto Oi = O.slice(0, i, i + 1);
        auto Bi = B.slice(0, i, i + 1);
        auto Ri = R.slice(0, i, i + 1);

        // Sampling happens on the detached current estimates, re-drawn every
        // step so the matched sets track the evolving decomposition.
        if (use_layer) {
            const Image b_img = from_tensor(Bi);
            const Image r_img = from_tensor(Ri);
            const PatchGrid grid_b = build_grid(b_img, cfg.patch, cfg.stride);
            const PatchGrid grid_r = build_grid(r_img, cfg.patch, cfg.stride);

            const LayerSamples layer =
                sample_layer_contrast(grid_b, grid_r, layer_cfg, st.sample_rng);
            mean_pos_dist += layer.mean_positive_distance;

            std::vector<int> rain_flat;
            std::vector<std::vector<int>> rain_groups_local;
            for (const auto& g : layer.rain_groups) {
                rain_groups_local.emplace_back();
                for (int idx : g.members) {
                    rain_groups_local.back().push_back(static_cast<int>(rain_flat.size()));
                    rain_flat.push_back(idx);
                }
            }

            auto anchor_b = encode_layer(bundle, Bi, grid_b, layer.background, false);
            auto key_b = encode_layer(bundle, Bi, grid_b, layer.background, true);
            auto anchor_r = encode_layer(bundle, Ri, grid_r, rain_flat, false);
            auto key_r = encode_layer(bundle, Ri, grid_r, rain_flat, true);
            layer_terms.push_back(layer_contrastive(anchor_b, key_b, anchor_r, key_r,
                                                    rain_groups_local, cfg.weights.tau,
                                                    cfg.contrast_mode));
        }

        if (use_loc) {
            const PatchGrid grid_o = build_grid(rainy_crops[i], cfg.patch, cfg.stride);
            const LocationSamples loc = sample_location_contrast(
                grid_o, cfg.n_location, cfg.n_location, cfg.loc_negatives, st.sample_rng);
            std::vector<int> all_indices(grid_o.count());
            std::iota(all_indices.begin(), all_indices.end(), 0);
            auto v_obs_all = encode_location(bundle, Oi, grid_o, all_indices);

            auto query_idx = torch::tensor(
                std::vector<int64_t>(loc.queries.begin(), loc.queries.end()), torch::kLong);
            auto v_obs_q = v_obs_all.index_select(0, query_idx);
            auto v_bg_q = encode_location(bundle, Bi, grid_o, loc.queries);

            std::vector<int64_t> neg_flat;
            neg_flat.reserve(static_cast<size_t>(cfg.n_location) * cfg.n_location);
            for (const auto& row : loc.negatives) {
                neg_flat.insert(neg_flat.end(), row.begin(), row.end());
            }
            auto v_neg = v_obs_all.index_select(0, torch::tensor(neg_flat, torch::kLong))
                             .view({static_cast<int64_t>(loc.queries.size()),
                                    static_cast<int64_t>(loc.negatives.front().size()), -1});
            loc_terms.push_back(
                location_contrastive(v_obs_q, v_bg_q, v_neg, cfg.weights.tau, cfg.contrast_mode));
        }
    }
    mean_pos_dist /= batch;

    auto layer_con =
        use_layer ? torch::stack(layer_terms).mean() : torch::zeros({}, O.options());
    auto loc_con = use_loc ? torch::stack(loc_terms).mean() : torch::zeros({}, O.options());
    auto recon = reconstruction_loss(B, R, O);
    auto sparse = rain_sparsity(R);
    auto adv_g = use_adv ? adv_generator_loss(bundle.disc->forward(B), cfg.gan_mode)
                         : torch::zeros({}, O.options());
    auto total = total_generator_loss(recon, sparse, adv_g, layer_con, loc_con, cfg.weights);

    LossReport report;
    report.recon = recon.item<double>();
    report.sparse = sparse.item<double>();
    report.adv_g = adv_g.item<double>();
    report.adv_d = adv_d.item<double>();
    report.layer_con = layer_con.item<double>();
    report.loc_con = loc_con.item<double>();
    report.total = total.item<double>();
    report.mean_pos_dist = mean_pos_dist;

    if (!std::isfinite(report.total) || !std::isfinite(report.adv_d)) {
        for (auto& p : bundle.disc->parameters()) {
            p.set_requires_grad(true);
        }
        throw std::runtime_error(
            "train_step: non-finite loss at step " + std::to_string(st.step) +
            " (recon=" + std::to_string(report.recon) + ", adv_g=" + std::to_string(report.adv_g) +
            ", adv_d=" + std::to_string(report.adv_d) +
            ", layer=" + std::to_string(report.layer_con) +
            ", loc=" + std::to_string(report.loc_con) + ")");
    }

    st.g_opt->zero_grad();
    total.backward();
    st.g_opt->step();

    for (auto& p : bundle.disc->parameters()) {
        p.set_requires_grad(true);
    }
    ++st.step;
    return report;
}

namespace {

void append_csv_row(std::ofstream& csv, std::int64_t step, const LossReport& r) {
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%" PRId64 ",%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g", step, r.recon, r.sparse,
                  r.adv_g, r.adv_d, r.layer_con, r.loc_con, r.total, r.mean_pos_dist);
    csv << line << "\n";
    csv.flush();
}

void dump_failed_batch(const std::filesystem::path& out_dir, std::int64_t step,
                       const std::vector<Image>& rainy, const std::vector<Image>& clean) {
    const auto dir = out_dir / ("diagnostics_step_" + std::to_string(step));
    for (size_t i = 0; i < rainy.size(); ++i) {
        save_png(dir / ("rainy_" + std::to_string(i) + ".png"), rainy[i], 16);
        save_png(dir / ("clean_" + std::to_string(i) + ".png"), clean[i], 16);
    }
}

}  // namespace

void train(const TrainConfig& cfg, const std::filesystem::path& data_root,
           const std::filesystem::path& out_dir, const std::filesystem::path& resume_from) {
    validate_config(cfg);
    Dataset ds = load_dataset(data_root);
    for (const auto& img : ds.rainy) {
        if (img.height < cfg.crop || img.width < cfg.crop) {
            throw std::runtime_error("train: rainy image smaller than crop");
        }
    }
    for (const auto& img : ds.clean) {
        if (img.height < cfg.crop || img.width < cfg.crop) {
            throw std::runtime_error("train: clean image smaller than crop");
        }
    }

    std::filesystem::create_directories(out_dir);
    TrainConfig active = cfg;
    TrainState st;
    if (!resume_from.empty()) {
        st = load_checkpoint(resume_from, active);
    } else {
        st = make_train_state(cfg);
    }

    const auto csv_path = out_dir / "log.csv";
    const bool fresh_csv = !std::filesystem::exists(csv_path) || resume_from.empty();
    std::ofstream csv(csv_path, fresh_csv ? std::ios::trunc : std::ios::app);
    if (!csv) {
        throw std::runtime_error("train: cannot write " + csv_path.string());
    }
    if (fresh_csv) {
        csv << kLossCsvHeader << "\n";
    }

    std::uniform_int_distribution<size_t> clean_pick(0, ds.clean.size() - 1);
    while (st.step < active.iters) {
        std::vector<Image> rainy_crops;
        std::vector<Image> clean_crops;
        rainy_crops.reserve(active.batch);
        clean_crops.reserve(active.batch);
        for (int b = 0; b < active.batch; ++b) {
            if (st.pool_cursor < 0 ||
                st.pool_cursor == static_cast<std::int64_t>(st.pool_order.size())) {
                st.pool_order.resize(ds.rainy.size());
                std::iota(st.pool_order.begin(), st.pool_order.end(), 0);
                std::shuffle(st.pool_order.begin(), st.pool_order.end(), st.sample_rng);
                st.pool_cursor = 0;
            }
            const auto idx = static_cast<size_t>(st.pool_order[st.pool_cursor++]);
            rainy_crops.push_back(random_crop(ds.rainy[idx], active.crop, st.sample_rng));
            clean_crops.push_back(random_crop(ds.clean[clean_pick(st.sample_rng)], active.crop,
                                              st.sample_rng));
        }

        LossReport report;
        try {
            report = train_step(st, active, rainy_crops, clean_crops);
        } catch (const std::runtime_error&) {
            dump_failed_batch(out_dir, st.step, rainy_crops, clean_crops);
            throw;
        }
        append_csv_row(csv, st.step, report);

        if (st.step % 50 == 0 || st.step == active.iters) {
            std::printf("step %6" PRId64 "  total %.4f  recon %.5f  adv_d %.4f  pos_dist %.4f\n",
                        st.step, report.total, report.recon, report.adv_d, report.mean_pos_dist);
            std::fflush(stdout);
        }
        if (active.checkpoint_every > 0 && st.step % active.checkpoint_every == 0 &&
            st.step < active.iters) {
            char name[64];
            std::snprintf(name, sizeof(name), "ckpt_%06" PRId64 ".pt", st.step);
            save_checkpoint(out_dir / name, st, active);
            save_checkpoint(out_dir / "latest.pt", st, active);
        }
    }
    save_checkpoint(out_dir / "final.pt", st, active);
    save_checkpoint(out_dir / "latest.pt", st, active);
}

DerainResult derain(NetworkBundle& bundle, const Image& rainy) {
    torch::NoGradGuard no_grad;
    const bool was_training = bundle.g_background->is_training();
    bundle.g_background->eval();
    bundle.g_rain->eval();

    auto o = to_tensor(rainy);
    const int pad_h = (4 - rainy.height % 4) % 4;
    const int pad_w = (4 - rainy.width % 4) % 4;
    if (pad_h > 0 || pad_w > 0) {
        o = torch::reflection_pad2d(o, {0, pad_w, 0, pad_h});
    }
    auto bg = bundle.g_background->forward(o)
                  .slice(2, 0, rainy.height)
                  .slice(3, 0, rainy.width);
    auto rain = bundle.g_rain->forward(o).slice(2, 0, rainy.height).slice(3, 0, rainy.width);

    if (was_training) {
        bundle.g_background->train();
        bundle.g_rain->train();
    }
    DerainResult out;
    out.background = from_tensor(bg);
    out.rain = from_tensor(rain);
    out.residual = subtract_clamped(rainy, out.background);
    return out;
}

void save_checkpoint(const std::filesystem::path& file, const TrainState& st,
                     const TrainConfig& cfg) {
    if (!file.parent_path().empty()) {
        std::filesystem::create_directories(file.parent_path());
    }
    torch::serialize::OutputArchive archive;
    auto& bundle = const_cast<NetworkBundle&>(st.bundle);
    for (auto& [prefix, net] : named_nets(bundle).items) {
        for (const auto& item : net->named_parameters()) {
            archive.write(archive_key(prefix, item.key()), item.value());
        }
        for (const auto& item : net->named_buffers()) {
            archive.write(archive_key(prefix, item.key()) + "/__buffer", item.value());
        }
    }

    torch::serialize::OutputArchive g_opt_archive;
    st.g_opt->save(g_opt_archive);
    archive.write("opt/g", g_opt_archive);
    torch::serialize::OutputArchive d_opt_archive;
    st.d_opt->save(d_opt_archive);
    archive.write("opt/d", d_opt_archive);

    archive.write("rng/torch", at::globalContext().defaultGenerator(at::kCPU).get_state());
    std::ostringstream rng_text;
    rng_text << st.sample_rng;
    archive.write("rng/sampler", string_to_tensor(rng_text.str()));
    archive.write("rng/pool_order",
                  torch::tensor(st.pool_order, torch::kLong));
    archive.write("rng/pool_cursor", torch::tensor(st.pool_cursor, torch::kLong));

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["step"] = st.step;
    meta["config_hash"] = config_hash(cfg);
    meta["config"] = serialize_config(cfg);
    archive.write("meta/json", string_to_tensor(meta.dump(2)));
    archive.save_to(file.string());
}

TrainState load_checkpoint(const std::filesystem::path& file, TrainConfig& cfg_out) {
    torch::serialize::InputArchive archive;
    archive.load_from(file.string());

    torch::Tensor meta_bytes;
    archive.read("meta/json", meta_bytes);
    const auto meta = nlohmann::json::parse(tensor_to_string(meta_bytes));
    if (meta.at("format_version").get<int>() != 1) {
        throw std::runtime_error("load_checkpoint: unsupported format version");
    }
    cfg_out = parse_config_text(meta.at("config").get<std::string>());
    if (config_hash(cfg_out) != meta.at("config_hash").get<std::string>()) {
        throw std::runtime_error("load_checkpoint: config hash mismatch");
    }

    TrainState st = make_train_state(cfg_out);
    st.step = meta.at("step").get<std::int64_t>();

    torch::NoGradGuard no_grad;
    for (auto& [prefix, net] : named_nets(st.bundle).items) {
        for (auto& item : net->named_parameters()) {
            torch::Tensor value;
            archive.read(archive_key(prefix, item.key()), value);
            item.value().copy_(value);
        }
        for (auto& item : net->named_buffers()) {
            torch::Tensor value;
            archive.read(archive_key(prefix, item.key()) + "/__buffer", value);
            item.value().copy_(value);
        }
    }

    torch::serialize::InputArchive g_opt_archive;
    archive.read("opt/g", g_opt_archive);
    st.g_opt->load(g_opt_archive);
    torch::serialize::InputArchive d_opt_archive;
    archive.read("opt/d", d_opt_archive);
    st.d_opt->load(d_opt_archive);

    torch::Tensor torch_rng;
    archive.read("rng/torch", torch_rng);
    auto gen = at::globalContext().defaultGenerator(at::kCPU);
    gen.set_state(torch_rng);
    torch::Tensor sampler_bytes;
    archive.read("rng/sampler", sampler_bytes);
    std::istringstream rng_text(tensor_to_string(sampler_bytes));
    rng_text >> st.sample_rng;

    torch::Tensor pool_order;
    archive.read("rng/pool_order", pool_order);
    st.pool_order.assign(pool_order.data_ptr<std::int64_t>(),
                         pool_order.data_ptr<std::int64_t>() + pool_order.numel());
    torch::Tensor pool_cursor;
    archive.read("rng/pool_cursor", pool_cursor);
    st.pool_cursor = pool_cursor.item<std::int64_t>();
    return st;
}

void run_ablation(const std::string& axis, const TrainConfig& base,
                  const std::filesystem::path& data_root, const std::filesystem::path& out_root) {
    const auto cells = ablation_grid(axis, base);
    for (const auto& cell : cells) {
        const auto cell_dir = out_root / axis / cell.name;
        std::filesystem::create_directories(cell_dir);
        std::ofstream cfg_file(cell_dir / "config.txt");
        cfg_file << serialize_config(cell.config);
        cfg_file.close();
        std::printf("ablation %s/%s (%d iters)\n", axis.c_str(), cell.name.c_str(),
                    cell.config.iters);
        std::fflush(stdout);
        train(cell.config, data_root, cell_dir);
    }
}

}  // namespace nlcl
