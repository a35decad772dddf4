#pragma once

#include <filesystem>
#include <vector>

#include "nlcl/image.hpp"
#include "nlcl/patch_grid.hpp"

namespace nlcl {

// Renders every numeric column of a training CSV (first column = step) as a
// labelled polyline chart.
void render_loss_curves(const std::filesystem::path& csv_path,
                        const std::filesystem::path& out_png);

// One JSON object per line: {"query": i, "indices": [...], "distances": [...]}.
void write_matches_jsonl(const std::vector<MatchResult>& matches,
                         const std::filesystem::path& out_path);

// Query patch followed by its matches in rank order, upscaled, with thin
// separators; handy for eyeballing what the block matcher found.
void write_match_montage(const Image& source, const PatchGrid& grid, const MatchResult& match,
                         const std::filesystem::path& out_png);

}  // namespace nlcl
