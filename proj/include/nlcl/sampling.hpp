#pragma once

#include <random>
#include <vector>

#include "nlcl/patch_grid.hpp"

namespace nlcl {

// How the patch sets feeding the layer contrast are picked on a grid:
//  Random    - uniform patches without replacement
//  Neighbour - a random anchor plus its nearest grid neighbours (ring order)
//  NonLocal  - a random anchor plus its most similar patches by block matching
enum class PatchStrategy { Random, Neighbour, NonLocal };

// How negative locations for the location contrast are picked:
//  Random          - uniform locations distinct from the query
//  ReverseNonLocal - the locations most dissimilar to the query patch
enum class LocationNegatives { Random, ReverseNonLocal };

struct LayerSampleConfig {
    int n_background = 8;                                  // size of the mutually similar set
    int n_rain = 256;                                      // total rain patches across groups
    int rain_group = 8;                                    // patches per rain group (anchor + similars)
    PatchStrategy background = PatchStrategy::NonLocal;
    PatchStrategy rain = PatchStrategy::NonLocal;
};

// One mutually associated patch set: under NonLocal the members beyond the
// first are the anchor's best matches, under Neighbour its grid neighbours,
// under Random just distinct uniform picks.
struct PatchGroup {
    std::vector<int> members;
};

struct LayerSamples {
    std::vector<int> background;         // n_background indices on the background grid
    std::vector<PatchGroup> rain_groups; // groups covering n_rain indices on the rain grid
    double mean_positive_distance = 0.0; // mean block distance anchor -> selected positives
};

struct LocationSamples {
    std::vector<int> queries;                // n_queries indices on the composed-image grid
    std::vector<std::vector<int>> negatives; // per query, n_negatives distinct other indices
};

LayerSamples sample_layer_contrast(const PatchGrid& background_grid, const PatchGrid& rain_grid,
                                   const LayerSampleConfig& cfg, std::mt19937& rng);

LocationSamples sample_location_contrast(const PatchGrid& grid, int n_queries, int n_negatives,
                                         LocationNegatives strategy, std::mt19937& rng);

// k distinct ints drawn uniformly from [0, n), optionally excluding one value.
std::vector<int> sample_distinct(int n, int k, std::mt19937& rng, int exclude = -1);

// Grid indices ordered by Chebyshev ring around `anchor` (ring 1 first, i.e.
// the 8-connected neighbours), row-major within a ring; at most k entries.
std::vector<int> ring_neighbours(const PatchGrid& grid, int anchor, int k);

}  // namespace nlcl
