#pragma once

#include <cstdint>
#include <filesystem>

#include "nlcl/image.hpp"

namespace nlcl {

// Synthetic rain streak model: a seeded sparse impulse field is smeared along
// an oriented line kernel (normalised to unit mass), scaled by `intensity`,
// and lifted by a uniform `veiling` haze. Impulse sites are drawn without
// replacement, exactly floor(density * H * W) of them, so the layer mean is
// bounded by density * intensity + veiling regardless of the seed.
struct StreakParams {
    double density = 0.05;    // fraction of pixels seeded, in [0, 0.2]
    double length = 12.0;     // streak extent in pixels, >= 1
    double angle_deg = 10.0;  // tilt from vertical, in (-45, 45)
    double intensity = 0.8;   // streak brightness scale, in [0, 1]
    double veiling = 0.1;     // additive haze, in [0, 0.5]
    std::uint64_t seed = 0;
};

// Returns an achromatic rain layer (all channels equal) with values in [0, 1].
Image synthesize_streaks(int height, int width, int channels, const StreakParams& params);

// Deterministic smooth test-card texture: low-frequency sinusoid mixture over
// a gentle gradient with a few soft blobs, normalised into [0.08, 0.92]. The
// integer sinusoid frequencies tile the image, so patches repeat non-locally.
Image make_clean_texture(int height, int width, int channels, std::uint64_t seed);

// On-disk layout produced by write_dataset:
//   <root>/rainy/NNN.png        composed rainy training images
//   <root>/clean/NNN.png        unpaired clean pool (bases disjoint from rainy)
//   <root>/test/rainy/NNN.png   held-out rainy images
//   <root>/test/gt/NNN.png      their clean ground truth, paired by filename
struct DatasetSpec {
    int n_rainy = 16;
    int n_clean = 16;
    int n_test = 4;
    int height = 96;
    int width = 96;
    int channels = 3;
    StreakParams streaks;
    std::uint64_t seed = 0;
};

void write_dataset(const std::filesystem::path& root, const DatasetSpec& spec);

}  // namespace nlcl
