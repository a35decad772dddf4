#include "nlcl/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nlcl {

std::vector<int> sample_distinct(int n, int k, std::mt19937& rng, int exclude) {
    const int available = n - (exclude >= 0 && exclude < n ? 1 : 0);
    if (k < 0 || k > available) {
        throw std::invalid_argument("sample_distinct: cannot draw " + std::to_string(k) +
                                    " distinct values from " + std::to_string(available));
    }
    std::vector<int> pool;
    pool.reserve(available);
    for (int i = 0; i < n; ++i) {
        if (i != exclude) {
            pool.push_back(i);
        }
    }
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

std::vector<int> ring_neighbours(const PatchGrid& grid, int anchor, int k) {
    const auto [ar, ac] = grid.grid_coord(anchor);
    std::vector<int> out;
    out.reserve(k);
    const int max_ring = std::max(std::max(ar, grid.rows - 1 - ar), std::max(ac, grid.cols - 1 - ac));
    for (int ring = 1; ring <= max_ring && static_cast<int>(out.size()) < k; ++ring) {
        for (int r = ar - ring; r <= ar + ring && static_cast<int>(out.size()) < k; ++r) {
            if (r < 0 || r >= grid.rows) {
                continue;
            }
            for (int c = ac - ring; c <= ac + ring && static_cast<int>(out.size()) < k; ++c) {
                if (c < 0 || c >= grid.cols) {
                    continue;
                }
                if (std::max(std::abs(r - ar), std::abs(c - ac)) != ring) {
                    continue;
                }
                out.push_back(r * grid.cols + c);
            }
        }
    }
    if (static_cast<int>(out.size()) < k) {
        throw std::invalid_argument("ring_neighbours: grid too small for " + std::to_string(k) +
                                    " neighbours");
    }
    return out;
}

namespace {

// Anchor plus k companions chosen by the given strategy. The anchor is always
// members.front(); `pair_distances` collects anchor->companion block distances.
PatchGroup make_group(const PatchGrid& grid, PatchStrategy strategy, int anchor, int companions,
                      std::mt19937& rng, std::vector<double>* pair_distances) {
    PatchGroup group;
    group.members.push_back(anchor);
    std::vector<int> rest;
    switch (strategy) {
        case PatchStrategy::Random:
            rest = sample_distinct(grid.count(), companions, rng, anchor);
            break;
        case PatchStrategy::Neighbour:
            rest = ring_neighbours(grid, anchor, companions);
            break;
        case PatchStrategy::NonLocal:
            rest = topk_similar(grid, anchor, companions).indices;
            break;
    }
    for (int idx : rest) {
        if (pair_distances) {
            pair_distances->push_back(patch_distance(grid, anchor, idx));
        }
        group.members.push_back(idx);
    }
    return group;
}

}  // namespace

LayerSamples sample_layer_contrast(const PatchGrid& background_grid, const PatchGrid& rain_grid,
                                   const LayerSampleConfig& cfg, std::mt19937& rng) {
    if (cfg.n_background < 2) {
        throw std::invalid_argument("sample_layer_contrast: need at least 2 background patches");
    }
    if (cfg.n_rain < 1 || cfg.rain_group < 2) {
        throw std::invalid_argument("sample_layer_contrast: need n_rain >= 1 and rain_group >= 2");
    }
    if (cfg.n_background > background_grid.count()) {
        throw std::invalid_argument("sample_layer_contrast: n_background exceeds grid size");
    }
    if (cfg.rain_group > rain_grid.count()) {
        throw std::invalid_argument("sample_layer_contrast: rain_group exceeds grid size");
    }

    LayerSamples out;
    std::vector<double> pos_distances;

    std::uniform_int_distribution<int> b_pick(0, background_grid.count() - 1);
    const PatchGroup b_group = make_group(background_grid, cfg.background, b_pick(rng),
                                          cfg.n_background - 1, rng, &pos_distances);
    out.background = b_group.members;

    std::uniform_int_distribution<int> r_pick(0, rain_grid.count() - 1);
    int remaining = cfg.n_rain;
    while (remaining > 0) {
        const int take = std::min(cfg.rain_group, remaining);
        PatchGroup g;
        if (take == 1) {
            g.members.push_back(r_pick(rng));
        } else {
            g = make_group(rain_grid, cfg.rain, r_pick(rng), take - 1, rng, &pos_distances);
        }
        remaining -= take;
        out.rain_groups.push_back(std::move(g));
    }

    if (!pos_distances.empty()) {
        double acc = 0.0;
        for (double d : pos_distances) {
            acc += d;
        }
        out.mean_positive_distance = acc / static_cast<double>(pos_distances.size());
    }
    return out;
}

LocationSamples sample_location_contrast(const PatchGrid& grid, int n_queries, int n_negatives,
                                         LocationNegatives strategy, std::mt19937& rng) {
    if (n_queries < 1 || n_queries > grid.count()) {
        throw std::invalid_argument("sample_location_contrast: n_queries outside [1, grid count]");
    }
    if (n_negatives < 1 || n_negatives > grid.count() - 1) {
        throw std::invalid_argument("sample_location_contrast: n_negatives outside [1, count-1]");
    }

    LocationSamples out;
    out.queries = sample_distinct(grid.count(), n_queries, rng);
    out.negatives.reserve(n_queries);
    for (int q : out.queries) {
        if (strategy == LocationNegatives::ReverseNonLocal) {
            out.negatives.push_back(topk_dissimilar(grid, q, n_negatives).indices);
        } else {
            out.negatives.push_back(sample_distinct(grid.count(), n_negatives, rng, q));
        }
    }
    return out;
}

}  // namespace nlcl
