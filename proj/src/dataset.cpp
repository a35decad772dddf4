#include "nlcl/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlcl {

namespace {

std::vector<std::filesystem::path> sorted_pngs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("load_dataset: missing directory " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::runtime_error("load_dataset: no .png files in " + dir.string());
    }
    return files;
}

std::vector<Image> load_dir(const std::filesystem::path& dir) {
    std::vector<Image> out;
    for (const auto& f : sorted_pngs(dir)) {
        out.push_back(load_png(f));
    }
    return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root, bool require_test) {
    Dataset ds;
    ds.rainy = load_dir(root / "rainy");
    ds.clean = load_dir(root / "clean");

    const auto test_rainy_dir = root / "test" / "rainy";
    const auto test_gt_dir = root / "test" / "gt";
    if (std::filesystem::is_directory(test_rainy_dir) || require_test) {
        const auto rainy_files = sorted_pngs(test_rainy_dir);
        const auto gt_files = sorted_pngs(test_gt_dir);
        if (rainy_files.size() != gt_files.size()) {
            throw std::runtime_error("load_dataset: test/rainy and test/gt sizes differ");
        }
        for (size_t i = 0; i < rainy_files.size(); ++i) {
            if (rainy_files[i].filename() != gt_files[i].filename()) {
                throw std::runtime_error("load_dataset: unpaired test file " +
                                         rainy_files[i].filename().string());
            }
            ds.test_rainy.push_back(load_png(rainy_files[i]));
            ds.test_gt.push_back(load_png(gt_files[i]));
            ds.test_names.push_back(rainy_files[i].filename().string());
        }
    }
    return ds;
}

Image random_crop(const Image& img, int size, std::mt19937& rng) {
    if (size > img.height || size > img.width) {
        throw std::invalid_argument("random_crop: crop " + std::to_string(size) +
                                    " exceeds image " + std::to_string(img.height) + "x" +
                                    std::to_string(img.width));
    }
    std::uniform_int_distribution<int> top_dist(0, img.height - size);
    std::uniform_int_distribution<int> left_dist(0, img.width - size);
    const int top = top_dist(rng);
    const int left = left_dist(rng);
    return crop(img, top, left, size, size);
}

std::vector<Image> load_crops(const std::filesystem::path& root, int crop, int count,
                              std::uint32_t seed) {
    Dataset ds = load_dataset(root);
    std::mt19937 rng(seed);
    PoolSampler sampler(ds.rainy.size(), rng);
    std::vector<Image> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        out.push_back(random_crop(ds.rainy[sampler.next(rng)], crop, rng));
    }
    return out;
}

PoolSampler::PoolSampler(size_t pool_size, std::mt19937& rng) {
    if (pool_size == 0) {
        throw std::invalid_argument("PoolSampler: empty pool");
    }
    order_.resize(pool_size);
    for (size_t i = 0; i < pool_size; ++i) {
        order_[i] = i;
    }
    std::shuffle(order_.begin(), order_.end(), rng);
}

size_t PoolSampler::next(std::mt19937& rng) {
    if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng);
        cursor_ = 0;
    }
    return order_[cursor_++];
}

}  // namespace nlcl
