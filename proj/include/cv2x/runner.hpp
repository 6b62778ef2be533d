#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cv2x/sim_engine.hpp"

namespace cv2x {

struct RunManifest {
    std::filesystem::path config_path;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir = "out";
    /// Defaults to scenario_label() of the parsed config.
    std::string label;
    std::optional<std::string> baseline;
    /// Worker threads; 0 picks min(hardware threads, seeds).
    unsigned workers = 0;
};

struct ExecuteResult {
    std::filesystem::path run_dir;
    MetricsStore merged;
    RunSummary summary;
    bool compared = false;
};

/// Runs every seed of config, merges the stores in seed order and writes the
/// result tables under out_dir/label. Warnings go to log.
ExecuteResult execute(const RunManifest& manifest, const SimConfig& config, std::ostream& log);
/// Writes the tables for runs already made, one per manifest seed.
ExecuteResult write_results(const RunManifest& manifest, const SimConfig& config, const std::vector<RunResult>& runs,
                            std::ostream& log);
/// Parses manifest.config_path first.
ExecuteResult execute(const RunManifest& manifest, std::ostream& log);

/// Runs the seeds without writing anything.
std::vector<RunResult> run_seeds(const SimConfig& config, const std::vector<std::uint64_t>& seeds,
                                 unsigned workers = 0);
RunSummary merge_summaries(const std::vector<RunResult>& runs);
MetricsStore merge_stores(const std::vector<RunResult>& runs);

/// File-name fragment for a bin center: 200 -> "200", 12.5 -> "12p5".
std::string bin_tag(double center_m);

/// Comparison of a variant's CCDF tables against a baseline directory:
/// metric,bin_center_m,delta_mean,points_used,points_excluded. Bins whose
/// tables are missing or whose baseline tail vanishes report NA.
void write_comparison(std::ostream& os, const std::filesystem::path& baseline_dir, const MetricsStore& variant);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace cv2x
