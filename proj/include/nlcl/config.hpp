#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlcl/trainer.hpp"

namespace nlcl {

// Flat key=value config text. '#' starts a comment, blank lines are skipped,
// unknown and duplicate keys are errors. Every TrainConfig field has a key;
// serialize-parse round trips exactly.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const TrainConfig& cfg);

// FNV-1a over the canonical serialisation, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

std::string to_string(PatchStrategy s);
std::string to_string(LocationNegatives s);
std::string to_string(LayerEncoder e);
std::string to_string(GanMode m);
std::string to_string(ContrastMode m);

struct AblationCell {
    std::string name;
    TrainConfig config;
};

// The four study axes:
//   sampling - 6 positive/negative strategy pairings
//   encoder  - 3 feature trunk choices for the layer contrast
//   counts   - 4 background set sizes x 4 rain set sizes
//   losses   - 4 single-term removals
std::vector<AblationCell> ablation_grid(const std::string& axis, const TrainConfig& base);

}  // namespace nlcl
