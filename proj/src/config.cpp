#include "cv2x/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cv2x {

using json = nlohmann::json;

namespace {

// Reads keys out of one JSON object and remembers which were consumed.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw std::invalid_argument(path_or_root() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument(name(key) + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) throw std::invalid_argument("unknown key " + name(key));
        }
    }

private:
    std::string path_or_root() const { return path_.empty() ? "config" : path_; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

std::optional<CounterRange> parse_one_shot(const std::string& s) {
    if (s == "off") return std::nullopt;
    if (s == "2-6") return CounterRange{2, 6};
    if (s == "5-15") return CounterRange{5, 15};
    throw std::invalid_argument("sps.one_shot must be \"off\", \"2-6\" or \"5-15\", got \"" + s + "\"");
}

std::string one_shot_name(const std::optional<CounterRange>& r) {
    if (!r) return "off";
    return std::to_string(r->lo) + "-" + std::to_string(r->hi);
}

BlerTable parse_bler(const json& node, const std::string& name) {
    BlerTable t;
    if (!node.is_array()) throw std::invalid_argument(name + " must be a list of [sinr_db, bler] pairs");
    for (const auto& p : node) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw std::invalid_argument(name + " must be a list of [sinr_db, bler] pairs");
        }
        t.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return t;
}

void parse_scenario(const json& node, Scenario& s) {
    Section sec(node, "scenario");
    sec.get("highway_length_m", s.highway_length_m);
    sec.get("density_vue_per_km", s.density_vue_per_km);
    sec.get("sim_duration_s", s.sim_duration_s);
    sec.get("warmup_s", s.warmup_s);
    sec.get("seed", s.seed);
    sec.get("link_cutoff_m", s.link_cutoff_m);
    sec.get("ccdf_bins_m", s.ccdf_bins_m);
    sec.get("ccdf_half_width_m", s.ccdf_half_width_m);
    sec.get("prr_max_distance_m", s.prr_max_distance_m);
    sec.get("cbr_center_radius_m", s.cbr_center_radius_m);
    sec.get("trace", s.trace);
    sec.finish();
}

void parse_pool(const json& node, PoolConfig& p) {
    Section sec(node, "pool");
    sec.get("bandwidth_mhz", p.bandwidth_mhz);
    // Sub-channel count follows the bandwidth unless given explicitly.
    if (p.bandwidth_mhz == 10 || p.bandwidth_mhz == 20) p.subchannels_per_subframe = subchannels_for_bandwidth(p.bandwidth_mhz);
    sec.get("subchannels_per_subframe", p.subchannels_per_subframe);
    sec.get("prbs_per_subchannel", p.prbs_per_subchannel);
    sec.get("sensing_history_len", p.sensing_history_len);
    sec.finish();
}

void parse_sps(const json& node, SchedulerConfig& c) {
    Section sec(node, "sps");
    sec.get("cs_min", c.cs_range.lo);
    sec.get("cs_max", c.cs_range.hi);
    std::string one_shot = one_shot_name(c.co_range);
    sec.get("one_shot", one_shot);
    c.co_range = parse_one_shot(one_shot);
    sec.get("p_keep", c.p_keep);
    sec.get("harq", c.harq_enabled);
    sec.get("rsrp_threshold_dbm", c.rsrp_threshold_dbm);
    sec.get("t1", c.t1);
    sec.get("pdb_ms", c.pdb_ms);
    sec.finish();
}

void parse_congestion(const json& node, CongestionConfig& c) {
    Section sec(node, "congestion");
    sec.get("enabled", c.enabled);
    sec.get("range_m", c.range_m);
    sec.get("lambda", c.lambda);
    sec.get("b_coeff", c.b_coeff);
    sec.get("i_max_ms", c.i_max_ms);
    sec.get("w_t_ms", c.w_t_ms);
    sec.get("w_k_ms", c.w_k_ms);
    sec.finish();
}

void parse_channel(const json& node, ChannelConfig& c) {
    Section sec(node, "channel");
    sec.get("tx_power_dbm", c.tx_power_dbm);
    sec.get("noise_figure_db", c.noise_figure_db);
    sec.get("thermal_noise_dbm_per_hz", c.thermal_noise_dbm_per_hz);
    sec.get("pscch_boost_db", c.pscch_boost_db);
    sec.get("n_tx_antennas", c.n_tx_antennas);
    sec.get("n_rx_antennas", c.n_rx_antennas);
    sec.get("fading", c.fading);
    sec.get("pssch_sinr_threshold_db", c.pssch_sinr_threshold_db);
    sec.get("pscch_sinr_threshold_db", c.pscch_sinr_threshold_db);
    sec.get("ibe_mask_db", c.ibe.attenuation_db);
    if (const json* pl = sec.child("path_loss")) {
        Section p(*pl, "channel.path_loss");
        std::string kind = c.path_loss.kind == PathLossKind::dual_slope ? "dual_slope" : "log_distance";
        p.get("kind", kind);
        if (kind == "dual_slope") {
            c.path_loss.kind = PathLossKind::dual_slope;
        } else if (kind == "log_distance") {
            c.path_loss.kind = PathLossKind::log_distance;
        } else {
            throw std::invalid_argument("channel.path_loss.kind must be \"dual_slope\" or \"log_distance\"");
        }
        p.get("pl0_db", c.path_loss.pl0_db);
        p.get("d0_m", c.path_loss.d0_m);
        p.get("gamma1", c.path_loss.gamma1);
        p.get("gamma2", c.path_loss.gamma2);
        p.get("breakpoint_m", c.path_loss.breakpoint_m);
        p.finish();
    }
    std::string mode = c.decode_mode == DecodeMode::step ? "step" : "table";
    sec.get("decode", mode);
    if (mode == "step") {
        c.decode_mode = DecodeMode::step;
    } else if (mode == "table") {
        c.decode_mode = DecodeMode::table;
    } else {
        throw std::invalid_argument("channel.decode must be \"step\" or \"table\"");
    }
    if (const json* b = sec.child("bler")) {
        Section t(*b, "channel.bler");
        if (const json* n = t.child("pssch")) c.pssch_bler = parse_bler(*n, "channel.bler.pssch");
        if (const json* n = t.child("pscch")) c.pscch_bler = parse_bler(*n, "channel.bler.pscch");
        t.finish();
    }
    sec.finish();
}

}  // namespace

SimConfig parse_config_text(const std::string& text) {
    json doc;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
        }
    }
    SimConfig cfg;
    Section root(doc, "");
    if (const json* n = root.child("scenario")) parse_scenario(*n, cfg.scenario);
    if (const json* n = root.child("pool")) parse_pool(*n, cfg.pool);
    if (const json* n = root.child("sps")) parse_sps(*n, cfg.sps);
    if (const json* n = root.child("congestion")) parse_congestion(*n, cfg.congestion);
    if (const json* n = root.child("channel")) parse_channel(*n, cfg.channel);
    root.finish();
    cfg.validate();
    return cfg;
}

SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string dump_config(const SimConfig& c) {
    const auto& s = c.scenario;
    const auto& ch = c.channel;
    json bler = json::object();
    auto table = [](const BlerTable& t) {
        json a = json::array();
        for (const auto& [x, y] : t.points) a.push_back({x, y});
        return a;
    };
    bler["pssch"] = table(ch.pssch_bler);
    bler["pscch"] = table(ch.pscch_bler);
    json doc = {
        {"scenario",
         {{"highway_length_m", s.highway_length_m},
          {"density_vue_per_km", s.density_vue_per_km},
          {"sim_duration_s", s.sim_duration_s},
          {"warmup_s", s.warmup_s},
          {"seed", s.seed},
          {"link_cutoff_m", s.link_cutoff_m},
          {"ccdf_bins_m", s.ccdf_bins_m},
          {"ccdf_half_width_m", s.ccdf_half_width_m},
          {"prr_max_distance_m", s.prr_max_distance_m},
          {"cbr_center_radius_m", s.cbr_center_radius_m},
          {"trace", s.trace}}},
        {"pool",
         {{"bandwidth_mhz", c.pool.bandwidth_mhz},
          {"subchannels_per_subframe", c.pool.subchannels_per_subframe},
          {"prbs_per_subchannel", c.pool.prbs_per_subchannel},
          {"sensing_history_len", c.pool.sensing_history_len}}},
        {"sps",
         {{"cs_min", c.sps.cs_range.lo},
          {"cs_max", c.sps.cs_range.hi},
          {"one_shot", one_shot_name(c.sps.co_range)},
          {"p_keep", c.sps.p_keep},
          {"harq", c.sps.harq_enabled},
          {"rsrp_threshold_dbm", c.sps.rsrp_threshold_dbm},
          {"t1", c.sps.t1},
          {"pdb_ms", c.sps.pdb_ms}}},
        {"congestion",
         {{"enabled", c.congestion.enabled},
          {"range_m", c.congestion.range_m},
          {"lambda", c.congestion.lambda},
          {"b_coeff", c.congestion.b_coeff},
          {"i_max_ms", c.congestion.i_max_ms},
          {"w_t_ms", c.congestion.w_t_ms},
          {"w_k_ms", c.congestion.w_k_ms}}},
        {"channel",
         {{"tx_power_dbm", ch.tx_power_dbm},
          {"noise_figure_db", ch.noise_figure_db},
          {"thermal_noise_dbm_per_hz", ch.thermal_noise_dbm_per_hz},
          {"pscch_boost_db", ch.pscch_boost_db},
          {"n_tx_antennas", ch.n_tx_antennas},
          {"n_rx_antennas", ch.n_rx_antennas},
          {"fading", ch.fading},
          {"pssch_sinr_threshold_db", ch.pssch_sinr_threshold_db},
          {"pscch_sinr_threshold_db", ch.pscch_sinr_threshold_db},
          {"ibe_mask_db", ch.ibe.attenuation_db},
          {"path_loss",
           {{"kind", ch.path_loss.kind == PathLossKind::dual_slope ? "dual_slope" : "log_distance"},
            {"pl0_db", ch.path_loss.pl0_db},
            {"d0_m", ch.path_loss.d0_m},
            {"gamma1", ch.path_loss.gamma1},
            {"gamma2", ch.path_loss.gamma2},
            {"breakpoint_m", ch.path_loss.breakpoint_m}}},
          {"decode", ch.decode_mode == DecodeMode::step ? "step" : "table"},
          {"bler", bler}}},
    };
    return doc.dump(2);
}

std::uint64_t config_hash(const SimConfig& config) {
    SimConfig c = config;
    c.scenario.seed = 0;
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump_config(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string scenario_label(const SimConfig& config) {
    std::string x = "OFF";
    if (config.sps.co_range) x = std::to_string(config.sps.co_range->lo) + std::to_string(config.sps.co_range->hi);
    return x + "-" + std::to_string(config.pool.bandwidth_mhz);
}

}  // namespace cv2x
