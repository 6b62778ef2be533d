#include "cv2x/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cv2x/config.hpp"

namespace cv2x {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

template <class F>
std::string render(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string resolve_label(const RunManifest& manifest, const SimConfig& config) {
    const std::string label = manifest.label.empty() ? scenario_label(config) : manifest.label;
    if (label.empty() || label.find('/') != std::string::npos || label == "." || label == "..") {
        throw std::invalid_argument("label must be a plain name, got '" + label + "'");
    }
    return label;
}

}  // namespace

std::vector<RunResult> run_seeds(const SimConfig& config, const std::vector<std::uint64_t>& seeds, unsigned workers) {
    std::vector<std::optional<RunResult>> slots(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < seeds.size();) {
            try {
                SimConfig c = config;
                c.scenario.seed = seeds[i];
                slots[i] = run(c);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<RunResult> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

RunSummary merge_summaries(const std::vector<RunResult>& runs) {
    RunSummary m;
    for (const auto& r : runs) {
        m.generated += r.summary.generated;
        m.transmissions += r.summary.transmissions;
        m.one_shots += r.summary.one_shots;
        m.reselections += r.summary.reselections;
        m.receptions += r.summary.receptions;
        m.mean_interval_ms += r.summary.mean_interval_ms;
    }
    if (!runs.empty()) m.mean_interval_ms /= static_cast<double>(runs.size());
    return m;
}

MetricsStore merge_stores(const std::vector<RunResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("merge_stores: no runs");
    MetricsStore m = runs.front().store;
    for (std::size_t i = 1; i < runs.size(); ++i) m.merge(runs[i].store);
    return m;
}

std::string bin_tag(double center_m) {
    if (center_m == std::floor(center_m)) return std::to_string(static_cast<long long>(center_m));
    std::ostringstream os;
    os << center_m;
    std::string s = os.str();
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

void write_comparison(std::ostream& os, const std::filesystem::path& baseline_dir, const MetricsStore& variant) {
    os << "metric,bin_center_m,delta_mean,points_used,points_excluded\n";
    for (const char* metric : {"ipg", "ia"}) {
        const auto& hists = std::string(metric) == "ipg" ? variant.ipg : variant.ia;
        for (std::size_t b = 0; b < hists.size(); ++b) {
            const double center = variant.bin_centers_m[b];
            os << metric << ',' << bin_tag(center) << ',';
            std::ifstream in(baseline_dir / (std::string(metric) + "_ccdf_" + bin_tag(center) + ".csv"));
            if (!in || hists[b].empty()) {
                os << "NA,0,0\n";
                continue;
            }
            try {
                const auto t = tail_improvement(read_ccdf_table(in), Ccdf::from_histogram(hists[b]));
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6f", t.mean);
                os << buf << ',' << t.points_used << ',' << t.points_excluded << '\n';
            } catch (const std::domain_error&) {
                os << "NA,0,0\n";
            }
        }
    }
}

ExecuteResult execute(const RunManifest& manifest, const SimConfig& config, std::ostream& log) {
    std::vector<std::uint64_t> seeds = manifest.seeds;
    if (seeds.empty()) seeds.push_back(config.scenario.seed);
    resolve_label(manifest, config);  // reject bad labels before running
    return write_results(manifest, config, run_seeds(config, seeds, manifest.workers), log);
}

ExecuteResult write_results(const RunManifest& manifest, const SimConfig& config, const std::vector<RunResult>& runs,
                            std::ostream& log) {
    std::vector<std::uint64_t> seeds = manifest.seeds;
    if (seeds.empty()) seeds.push_back(config.scenario.seed);
    if (seeds.size() != runs.size()) throw std::invalid_argument("write_results: one run per seed required");
    const std::string label = resolve_label(manifest, config);
    ExecuteResult result;
    result.merged = merge_stores(runs);
    result.summary = merge_summaries(runs);
    result.run_dir = manifest.out_dir / label;
    std::filesystem::create_directories(result.run_dir);
    const auto& dir = result.run_dir;
    const auto& store = result.merged;

    for (std::size_t b = 0; b < store.bin_centers_m.size(); ++b) {
        const std::string tag = bin_tag(store.bin_centers_m[b]);
        for (bool ia : {false, true}) {
            const Histogram& h = ia ? store.ia[b] : store.ipg[b];
            const std::string name = std::string(ia ? "ia" : "ipg") + "_ccdf_" + tag + ".csv";
            write_file(dir / name, render([&](std::ostream& os) {
                           if (h.empty()) {
                               os << "value_ms,ccdf\n";
                           } else {
                               write_ccdf_table(os, Ccdf::from_histogram(h));
                           }
                       }));
        }
    }
    write_file(dir / "ipg_p999.csv", render([&](std::ostream& os) { write_percentile_table(os, store, false); }));
    write_file(dir / "ia_p999.csv", render([&](std::ostream& os) { write_percentile_table(os, store, true); }));
    write_file(dir / "prr_vs_distance.csv", render([&](std::ostream& os) { write_prr_table(os, store); }));
    write_file(dir / "cbr_summary.csv", render([&](std::ostream& os) { write_cbr_table(os, store); }));
    if (config.scenario.trace) {
        for (std::size_t i = 0; i < runs.size(); ++i) {
            write_file(dir / ("trace_" + std::to_string(seeds[i]) + ".csv"),
                       render([&](std::ostream& os) { write_trace(os, runs[i].trace); }));
        }
    }

    if (manifest.baseline) {
        const auto base_dir = manifest.out_dir / *manifest.baseline;
        if (!std::filesystem::is_directory(base_dir)) {
            log << "warning: baseline '" << *manifest.baseline << "' not found under " << manifest.out_dir.string()
                << "; comparison skipped\n";
        } else {
            write_file(dir / ("comparison_vs_" + *manifest.baseline + ".csv"),
                       render([&](std::ostream& os) { write_comparison(os, base_dir, store); }));
            result.compared = true;
        }
    }

    nlohmann::ordered_json m;
    m["label"] = label;
    m["config_path"] = manifest.config_path.string();
    m["config_hash"] = hex64(config_hash(config));
    m["version"] = CV2X_VERSION;
    m["seeds"] = seeds;
    m["baseline"] = manifest.baseline ? nlohmann::ordered_json(*manifest.baseline) : nlohmann::ordered_json();
    m["one_shot"] = config.sps.co_range.has_value();
    m["harq"] = config.sps.harq_enabled;
    m["congestion_control"] = config.congestion.enabled;
    m["bandwidth_mhz"] = config.pool.bandwidth_mhz;
    const auto& s = result.summary;
    m["summary"] = {{"generated", s.generated},       {"transmissions", s.transmissions},
                    {"one_shots", s.one_shots},       {"reselections", s.reselections},
                    {"receptions", s.receptions},     {"mean_interval_ms", s.mean_interval_ms}};
    m["silent_pairs"] = store.silent_pairs;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    return result;
}

ExecuteResult execute(const RunManifest& manifest, std::ostream& log) {
    return execute(manifest, parse_config(manifest.config_path), log);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
            throw std::invalid_argument("--seeds expects a comma-separated list of non-negative integers, got '" +
                                        text + "'");
        }
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw std::invalid_argument("--seeds is empty");
    return seeds;
}

}  // namespace cv2x
