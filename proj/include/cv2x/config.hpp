#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cv2x/sim_engine.hpp"

namespace cv2x {

/// Parses a JSON scenario document. Missing keys take their defaults; an
/// empty document yields the default scenario. Unknown keys and invariant
/// violations throw std::invalid_argument naming the key.
SimConfig parse_config_text(const std::string& text);
/// Throws std::runtime_error when the file cannot be read.
SimConfig parse_config(const std::filesystem::path& path);

/// Canonical JSON with every field filled in.
std::string dump_config(const SimConfig& config);
/// FNV-1a over dump_config with the seed zeroed.
std::uint64_t config_hash(const SimConfig& config);

/// "x-y" legend: x is the one-shot counter range (OFF, 26, 515, ...), y the
/// bandwidth in MHz.
std::string scenario_label(const SimConfig& config);

}  // namespace cv2x
