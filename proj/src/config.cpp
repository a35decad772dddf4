#include "nlcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nlcl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

int to_int(const std::string& key, const std::string& v) {
    int out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        bad_value(key, v);
    }
    return out;
}

std::uint32_t to_u32(const std::string& key, const std::string& v) {
    std::uint32_t out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        bad_value(key, v);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) {
            bad_value(key, v);
        }
        return out;
    } catch (const std::exception&) {
        bad_value(key, v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    bad_value(key, v);
}

PatchStrategy to_patch_strategy(const std::string& key, const std::string& v) {
    if (v == "random") return PatchStrategy::Random;
    if (v == "neighbour") return PatchStrategy::Neighbour;
    if (v == "nonlocal") return PatchStrategy::NonLocal;
    bad_value(key, v);
}

LocationNegatives to_loc_negatives(const std::string& key, const std::string& v) {
    if (v == "random") return LocationNegatives::Random;
    if (v == "reverse_nonlocal") return LocationNegatives::ReverseNonLocal;
    bad_value(key, v);
}

LayerEncoder to_layer_encoder(const std::string& key, const std::string& v) {
    if (v == "discriminator") return LayerEncoder::Discriminator;
    if (v == "image_generator") return LayerEncoder::ImageGenerator;
    if (v == "image_rain_generator") return LayerEncoder::ImageRainGenerator;
    bad_value(key, v);
}

GanMode to_gan_mode(const std::string& key, const std::string& v) {
    if (v == "logistic") return GanMode::Logistic;
    if (v == "least_squares") return GanMode::LeastSquares;
    bad_value(key, v);
}

ContrastMode to_contrast_mode(const std::string& key, const std::string& v) {
    if (v == "full") return ContrastMode::FullDenominator;
    if (v == "negatives_only") return ContrastMode::NegativesOnly;
    bad_value(key, v);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(PatchStrategy s) {
    switch (s) {
        case PatchStrategy::Random: return "random";
        case PatchStrategy::Neighbour: return "neighbour";
        case PatchStrategy::NonLocal: return "nonlocal";
    }
    return "?";
}

std::string to_string(LocationNegatives s) {
    return s == LocationNegatives::Random ? "random" : "reverse_nonlocal";
}

std::string to_string(LayerEncoder e) {
    switch (e) {
        case LayerEncoder::Discriminator: return "discriminator";
        case LayerEncoder::ImageGenerator: return "image_generator";
        case LayerEncoder::ImageRainGenerator: return "image_rain_generator";
    }
    return "?";
}

std::string to_string(GanMode m) {
    return m == GanMode::Logistic ? "logistic" : "least_squares";
}

std::string to_string(ContrastMode m) {
    return m == ContrastMode::FullDenominator ? "full" : "negatives_only";
}

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
    auto add = [&](const std::string& key, auto&& fn) { setters[key] = fn; };

    add("seed", [&](const std::string& k, const std::string& v) { cfg.seed = to_u32(k, v); });
    add("iters", [&](const std::string& k, const std::string& v) { cfg.iters = to_int(k, v); });
    add("batch", [&](const std::string& k, const std::string& v) { cfg.batch = to_int(k, v); });
    add("crop", [&](const std::string& k, const std::string& v) { cfg.crop = to_int(k, v); });
    add("checkpoint_every",
        [&](const std::string& k, const std::string& v) { cfg.checkpoint_every = to_int(k, v); });
    add("deterministic",
        [&](const std::string& k, const std::string& v) { cfg.deterministic = to_bool(k, v); });
    add("lr", [&](const std::string& k, const std::string& v) { cfg.lr = to_double(k, v); });
    add("adam_beta1",
        [&](const std::string& k, const std::string& v) { cfg.adam_beta1 = to_double(k, v); });
    add("adam_beta2",
        [&](const std::string& k, const std::string& v) { cfg.adam_beta2 = to_double(k, v); });
    add("momentum",
        [&](const std::string& k, const std::string& v) { cfg.momentum = to_double(k, v); });
    add("base_width",
        [&](const std::string& k, const std::string& v) { cfg.base_width = to_int(k, v); });
    add("res_blocks",
        [&](const std::string& k, const std::string& v) { cfg.res_blocks = to_int(k, v); });
    add("patch", [&](const std::string& k, const std::string& v) { cfg.patch = to_int(k, v); });
    add("stride", [&](const std::string& k, const std::string& v) { cfg.stride = to_int(k, v); });
    add("n_loc", [&](const std::string& k, const std::string& v) { cfg.n_location = to_int(k, v); });
    add("n_pos",
        [&](const std::string& k, const std::string& v) { cfg.n_background = to_int(k, v); });
    add("n_neg", [&](const std::string& k, const std::string& v) { cfg.n_rain = to_int(k, v); });
    add("rain_group",
        [&](const std::string& k, const std::string& v) { cfg.rain_group = to_int(k, v); });
    add("pos_strategy", [&](const std::string& k, const std::string& v) {
        cfg.pos_strategy = to_patch_strategy(k, v);
    });
    add("neg_strategy", [&](const std::string& k, const std::string& v) {
        cfg.neg_strategy = to_patch_strategy(k, v);
    });
    add("loc_negatives", [&](const std::string& k, const std::string& v) {
        cfg.loc_negatives = to_loc_negatives(k, v);
    });
    add("layer_encoder", [&](const std::string& k, const std::string& v) {
        cfg.layer_encoder = to_layer_encoder(k, v);
    });
    add("gan_mode",
        [&](const std::string& k, const std::string& v) { cfg.gan_mode = to_gan_mode(k, v); });
    add("contrast_mode", [&](const std::string& k, const std::string& v) {
        cfg.contrast_mode = to_contrast_mode(k, v);
    });
    add("lambda_sparse", [&](const std::string& k, const std::string& v) {
        cfg.weights.lambda_sparse = to_double(k, v);
    });
    add("delta_adv", [&](const std::string& k, const std::string& v) {
        cfg.weights.delta_adv = to_double(k, v);
    });
    add("mu_layer", [&](const std::string& k, const std::string& v) {
        cfg.weights.mu_layer = to_double(k, v);
    });
    add("sigma_loc", [&](const std::string& k, const std::string& v) {
        cfg.weights.sigma_loc = to_double(k, v);
    });
    add("tau",
        [&](const std::string& k, const std::string& v) { cfg.weights.tau = to_double(k, v); });

    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                        std::to_string(line_no));
        }
        if (!seen.insert(key).second) {
            throw std::invalid_argument("config: duplicate key '" + key + "' on line " +
                                        std::to_string(line_no));
        }
        it->second(key, value);
    }
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_config: cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "seed=" << cfg.seed << "\n";
    out << "iters=" << cfg.iters << "\n";
    out << "batch=" << cfg.batch << "\n";
    out << "crop=" << cfg.crop << "\n";
    out << "checkpoint_every=" << cfg.checkpoint_every << "\n";
    out << "deterministic=" << (cfg.deterministic ? "true" : "false") << "\n";
    out << "lr=" << format_double(cfg.lr) << "\n";
    out << "adam_beta1=" << format_double(cfg.adam_beta1) << "\n";
    out << "adam_beta2=" << format_double(cfg.adam_beta2) << "\n";
    out << "momentum=" << format_double(cfg.momentum) << "\n";
    out << "base_width=" << cfg.base_width << "\n";
    out << "res_blocks=" << cfg.res_blocks << "\n";
    out << "patch=" << cfg.patch << "\n";
    out << "stride=" << cfg.stride << "\n";
    out << "n_loc=" << cfg.n_location << "\n";
    out << "n_pos=" << cfg.n_background << "\n";
    out << "n_neg=" << cfg.n_rain << "\n";
    out << "rain_group=" << cfg.rain_group << "\n";
    out << "pos_strategy=" << to_string(cfg.pos_strategy) << "\n";
    out << "neg_strategy=" << to_string(cfg.neg_strategy) << "\n";
    out << "loc_negatives=" << to_string(cfg.loc_negatives) << "\n";
    out << "layer_encoder=" << to_string(cfg.layer_encoder) << "\n";
    out << "gan_mode=" << to_string(cfg.gan_mode) << "\n";
    out << "contrast_mode=" << to_string(cfg.contrast_mode) << "\n";
    out << "lambda_sparse=" << format_double(cfg.weights.lambda_sparse) << "\n";
    out << "delta_adv=" << format_double(cfg.weights.delta_adv) << "\n";
    out << "mu_layer=" << format_double(cfg.weights.mu_layer) << "\n";
    out << "sigma_loc=" << format_double(cfg.weights.sigma_loc) << "\n";
    out << "tau=" << format_double(cfg.weights.tau) << "\n";
    return out.str();
}

std::string config_hash(const TrainConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<AblationCell> ablation_grid(const std::string& axis, const TrainConfig& base) {
    std::vector<AblationCell> cells;
    if (axis == "sampling") {
        const std::pair<PatchStrategy, PatchStrategy> combos[] = {
            {PatchStrategy::Random, PatchStrategy::Random},
            {PatchStrategy::Neighbour, PatchStrategy::Random},
            {PatchStrategy::Neighbour, PatchStrategy::Neighbour},
            {PatchStrategy::NonLocal, PatchStrategy::Random},
            {PatchStrategy::Random, PatchStrategy::NonLocal},
            {PatchStrategy::NonLocal, PatchStrategy::NonLocal},
        };
        for (const auto& [pos, neg] : combos) {
            AblationCell cell;
            cell.config = base;
            cell.config.pos_strategy = pos;
            cell.config.neg_strategy = neg;
            cell.name = "pos_" + to_string(pos) + "_neg_" + to_string(neg);
            cells.push_back(std::move(cell));
        }
    } else if (axis == "encoder") {
        for (LayerEncoder enc : {LayerEncoder::ImageGenerator, LayerEncoder::ImageRainGenerator,
                                 LayerEncoder::Discriminator}) {
            AblationCell cell;
            cell.config = base;
            cell.config.layer_encoder = enc;
            cell.name = to_string(enc);
            cells.push_back(std::move(cell));
        }
    } else if (axis == "counts") {
        for (int n_pos : {4, 8, 16, 32}) {
            for (int n_neg : {64, 128, 256, 512}) {
                AblationCell cell;
                cell.config = base;
                cell.config.n_background = n_pos;
                cell.config.n_rain = n_neg;
                cell.name = "pos" + std::to_string(n_pos) + "_neg" + std::to_string(n_neg);
                cells.push_back(std::move(cell));
            }
        }
    } else if (axis == "losses") {
        const std::pair<const char*, double LossWeights::*> knockouts[] = {
            {"no_adversarial", &LossWeights::delta_adv},
            {"no_sparsity", &LossWeights::lambda_sparse},
            {"no_location_contrast", &LossWeights::sigma_loc},
            {"no_layer_contrast", &LossWeights::mu_layer},
        };
        for (const auto& [name, member] : knockouts) {
            AblationCell cell;
            cell.config = base;
            cell.config.weights.*member = 0.0;
            cell.name = name;
            cells.push_back(std::move(cell));
        }
    } else {
        throw std::invalid_argument(
            "ablation_grid: axis must be one of sampling|encoder|counts|losses, got '" + axis +
            "'");
    }
    return cells;
}

}  // namespace nlcl
