#pragma once

#include <utility>
#include <vector>

#include "nlcl/image.hpp"

namespace nlcl {

// Regular grid of square patches over an image. Patch pixels are copied into
// a row of `patch_matrix` in (row, col, channel) order so that distance
// evaluation is a single contiguous pass; `positions` stores the top-left
// pixel of each patch in grid row-major order.
struct PatchGrid {
    int image_height = 0;
    int image_width = 0;
    int channels = 0;
    int patch = 0;
    int stride = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::pair<int, int>> positions;
    std::vector<float> patch_matrix;

    int count() const { return rows * cols; }
    int dim() const { return patch * patch * channels; }
    const float* patch_ptr(int index) const {
        return patch_matrix.data() + static_cast<size_t>(index) * dim();
    }
    std::pair<int, int> grid_coord(int index) const { return {index / cols, index % cols}; }
};

// One query's ranked matches. `indices` and `distances` run best-first for
// similarity queries and worst-first for dissimilarity queries.
struct MatchResult {
    int query = -1;
    std::vector<int> indices;
    std::vector<double> distances;
};

// Squared L2 distance between two flattened patches, accumulated in double
// over the float samples in storage order. Both callers and tests rely on the
// accumulation order being exactly this one.
double patch_distance(const float* a, const float* b, int dim);
double patch_distance(const PatchGrid& grid, int i, int j);

PatchGrid build_grid(const Image& img, int patch, int stride);

// Distances from `query` to every patch on the grid, self included.
std::vector<double> all_distances(const PatchGrid& grid, int query);

// Top-k nearest (excluding the query itself), ascending distance. Ties are
// broken towards the smaller patch index so results are total-ordered.
MatchResult topk_similar(const PatchGrid& grid, int query, int k);

// Top-k farthest (excluding the query itself), descending distance, ties
// again broken towards the smaller patch index.
MatchResult topk_dissimilar(const PatchGrid& grid, int query, int k);

}  // namespace nlcl
