#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nlcl/image.hpp"

namespace nlcl {

// In-memory copy of the on-disk dataset layout (see rain.hpp). Training pools
// are unpaired; the held-out test split pairs rainy and gt by filename.
struct Dataset {
    std::vector<Image> rainy;
    std::vector<Image> clean;
    std::vector<Image> test_rainy;
    std::vector<Image> test_gt;
    std::vector<std::string> test_names;
};

// Reads <root>/rainy and <root>/clean (both required) plus test/{rainy,gt}
// when present. Files are taken in sorted order for reproducibility.
Dataset load_dataset(const std::filesystem::path& root, bool require_test = false);

Image random_crop(const Image& img, int size, std::mt19937& rng);

// Convenience loader: `count` random square crops drawn from the rainy pool,
// permutation over images, seeded crop positions.
std::vector<Image> load_crops(const std::filesystem::path& root, int crop, int count,
                              std::uint32_t seed);

// Epoch-permutation cursor over a pool of images: every image is visited once
// per epoch, the order reshuffles when the pool is exhausted.
class PoolSampler {
public:
    PoolSampler(size_t pool_size, std::mt19937& rng);
    size_t next(std::mt19937& rng);

private:
    std::vector<size_t> order_;
    size_t cursor_ = 0;
};

}  // namespace nlcl
