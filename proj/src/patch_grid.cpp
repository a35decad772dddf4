#include "nlcl/patch_grid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nlcl {

double patch_distance(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double patch_distance(const PatchGrid& grid, int i, int j) {
    if (i < 0 || j < 0 || i >= grid.count() || j >= grid.count()) {
        throw std::out_of_range("patch_distance: index outside grid");
    }
    return patch_distance(grid.patch_ptr(i), grid.patch_ptr(j), grid.dim());
}

PatchGrid build_grid(const Image& img, int patch, int stride) {
    if (patch <= 0 || stride <= 0) {
        throw std::invalid_argument("build_grid: patch and stride must be positive");
    }
    if (patch > img.height || patch > img.width) {
        throw std::invalid_argument("build_grid: patch " + std::to_string(patch) +
                                    " larger than image " + std::to_string(img.height) + "x" +
                                    std::to_string(img.width));
    }

    PatchGrid grid;
    grid.image_height = img.height;
    grid.image_width = img.width;
    grid.channels = img.channels;
    grid.patch = patch;
    grid.stride = stride;
    grid.rows = (img.height - patch) / stride + 1;
    grid.cols = (img.width - patch) / stride + 1;

    grid.positions.reserve(grid.count());
    grid.patch_matrix.resize(static_cast<size_t>(grid.count()) * grid.dim());

    float* dst = grid.patch_matrix.data();
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const int top = r * stride;
            const int left = c * stride;
            grid.positions.emplace_back(top, left);
            for (int y = 0; y < patch; ++y) {
                const float* src = &img.at(top + y, left, 0);
                dst = std::copy(src, src + static_cast<size_t>(patch) * img.channels, dst);
            }
        }
    }
    return grid;
}

std::vector<double> all_distances(const PatchGrid& grid, int query) {
    if (query < 0 || query >= grid.count()) {
        throw std::out_of_range("all_distances: query outside grid");
    }
    std::vector<double> out(grid.count());
    const float* q = grid.patch_ptr(query);
    const int dim = grid.dim();
    for (int i = 0; i < grid.count(); ++i) {
        out[i] = patch_distance(q, grid.patch_ptr(i), dim);
    }
    return out;
}

namespace {

MatchResult ranked_matches(const PatchGrid& grid, int query, int k, bool ascending) {
    if (k <= 0 || k > grid.count() - 1) {
        throw std::invalid_argument("ranked_matches: k must be in [1, count-1], got " +
                                    std::to_string(k) + " for " + std::to_string(grid.count()) +
                                    " patches");
    }
    const std::vector<double> dist = all_distances(grid, query);

    std::vector<int> order;
    order.reserve(grid.count() - 1);
    for (int i = 0; i < grid.count(); ++i) {
        if (i != query) {
            order.push_back(i);
        }
    }
    const auto better = [&](int a, int b) {
        if (dist[a] != dist[b]) {
            return ascending ? dist[a] < dist[b] : dist[a] > dist[b];
        }
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), better);

    MatchResult result;
    result.query = query;
    result.indices.assign(order.begin(), order.begin() + k);
    result.distances.reserve(k);
    for (int idx : result.indices) {
        result.distances.push_back(dist[idx]);
    }
    return result;
}

}  // namespace

MatchResult topk_similar(const PatchGrid& grid, int query, int k) {
    return ranked_matches(grid, query, k, /*ascending=*/true);
}

MatchResult topk_dissimilar(const PatchGrid& grid, int query, int k) {
    return ranked_matches(grid, query, k, /*ascending=*/false);
}

}  // namespace nlcl
