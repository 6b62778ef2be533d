#include "cv2x/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cv2x {

namespace {

constexpr int kResourceElementsPerPrb = kSubcarriersPerPrb * 1;

Rng seeded(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

enum Stream : std::uint64_t { kScenarioStream = 1, kChannelStream = 2, kVehicleStream = 3 };

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

int Scenario::vehicle_count() const {
    return static_cast<int>(std::llround(highway_length_m * density_vue_per_km / 1000.0));
}

Subframe Scenario::duration_subframes() const { return static_cast<Subframe>(std::llround(sim_duration_s * 1000.0)); }

Subframe Scenario::warmup_subframes() const { return static_cast<Subframe>(std::llround(warmup_s * 1000.0)); }

void Scenario::validate() const {
    if (!(highway_length_m > 0.0)) throw std::invalid_argument("scenario.highway_length_m must be positive");
    if (!(density_vue_per_km > 0.0)) throw std::invalid_argument("scenario.density_vue_per_km must be positive");
    if (vehicle_count() < 2) throw std::invalid_argument("scenario must contain at least two vehicles");
    if (!(sim_duration_s > 0.0)) throw std::invalid_argument("scenario.sim_duration_s must be positive");
    if (!(warmup_s >= 0.0) || warmup_s >= sim_duration_s) {
        throw std::invalid_argument("scenario.warmup_s must lie in [0, sim_duration_s)");
    }
    if (!(link_cutoff_m > 0.0)) throw std::invalid_argument("scenario.link_cutoff_m must be positive");
    if (!(ccdf_half_width_m > 0.0)) throw std::invalid_argument("scenario.ccdf_half_width_m must be positive");
    for (double c : ccdf_bins_m) {
        if (!(c > 0.0)) throw std::invalid_argument("scenario.ccdf_bins_m entries must be positive");
    }
    if (prr_max_distance_m < 1) throw std::invalid_argument("scenario.prr_max_distance_m must be >= 1");
    if (prr_max_distance_m > link_cutoff_m) {
        throw std::invalid_argument("scenario.prr_max_distance_m must not exceed scenario.link_cutoff_m");
    }
    if (!(cbr_center_radius_m >= 0.0)) throw std::invalid_argument("scenario.cbr_center_radius_m must be >= 0");
}

void SimConfig::validate() const {
    scenario.validate();
    pool.validate();
    channel.validate();
    sps.validate();
    congestion.validate();
}

Subframe ArmedBsm::first_tx() const {
    Subframe t = copies[0]->subframe;
    if (copies[1]) t = std::min(t, copies[1]->subframe);
    return t;
}

Subframe ArmedBsm::last_tx() const {
    Subframe t = copies[0]->subframe;
    if (copies[1]) t = std::max(t, copies[1]->subframe);
    return t;
}

// ---------------------------------------------------------------------------
// Construction

Simulator::Simulator(SimConfig config, Validation validation) : config_(std::move(config)) {
    if (validation == Validation::strict) {
        config_.validate();
    } else {
        SimConfig probe = config_;
        if (!(probe.sps.p_keep >= 0.0 && probe.sps.p_keep <= 1.0)) {
            throw std::invalid_argument("sps.p_keep must lie in [0, 1]");
        }
        probe.sps.p_keep = 0.8;
        probe.validate();
    }

    const auto& sc = config_.scenario;
    const auto& ch = config_.channel;
    path_loss_ = make_path_loss(ch.path_loss);
    channel_rng_ = seeded(sc.seed, kChannelStream, 0);
    duration_ = sc.duration_subframes();
    window_ = {sc.warmup_subframes(), duration_};

    noise_vrb_mw_ = db_to_linear(noise_power_dbm(config_.pool.prbs_per_subchannel, ch));
    noise_pscch_mw_ = db_to_linear(noise_power_dbm(kSciPrbs, ch));
    noise_pssch_mw_ = db_to_linear(noise_power_dbm(config_.pool.pssch_prbs(), ch));
    boost_ = db_to_linear(ch.pscch_boost_db);
    const int span = config_.pool.subchannels_per_subframe;
    ibe_by_offset_.resize(static_cast<std::size_t>(2 * span + 1));
    for (int o = -span; o <= span; ++o) ibe_by_offset_[static_cast<std::size_t>(o + span)] = ch.ibe.factor(o);

    const int n = sc.vehicle_count();
    const double spacing = sc.spacing_m();
    const double tx_mw = db_to_linear(ch.tx_power_dbm);
    mean_power_by_gap_.assign(static_cast<std::size_t>(n), 0.0);
    for (int gap = 1; gap < n; ++gap) {
        mean_power_by_gap_[static_cast<std::size_t>(gap)] = tx_mw * db_to_linear(-path_loss_->loss_db(gap * spacing));
    }

    Rng scenario_rng = seeded(sc.seed, kScenarioStream, 0);
    std::uniform_int_distribution<int> phase(0, static_cast<int>(kBaseIntervalMs) - 1);
    vehicles_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vehicle v{i,
                  i * spacing,
                  {},
                  SensingDatabase(config_.pool.subchannels_per_subframe, config_.pool.sensing_history_len),
                  {},
                  seeded(sc.seed, kVehicleStream, static_cast<std::uint64_t>(i)),
                  std::nullopt,
                  0};
        EngineRandom r(v.rng);
        v.scheduler = SchedulerState::initial(config_.sps, r);
        v.congestion.first_generation = phase(scenario_rng);
        vehicles_.push_back(std::move(v));
    }

    transmitting_.assign(vehicles_.size(), 0);
    stats_slot_.assign(vehicles_.size(), -1);
    const double lo = sc.highway_length_m / 3.0;
    const double hi = 2.0 * sc.highway_length_m / 3.0;
    const double center = sc.highway_length_m / 2.0;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const double x = vehicles_[i].position_m;
        if (x >= lo && x < hi) {
            stats_slot_[i] = static_cast<int>(stats_rx_.size());
            stats_rx_.push_back(i);
        }
        if (std::abs(x - center) <= sc.cbr_center_radius_m) cbr_vehicles_.push_back(i);
    }

    store_ = MetricsStore(sc.ccdf_bins_m, sc.ccdf_half_width_m, sc.prr_max_distance_m);
    pair_bin_.assign(vehicles_.size(), -1);
    for (std::size_t gap = 1; gap < vehicles_.size(); ++gap) {
        if (auto b = store_.bin_index(static_cast<double>(gap) * spacing)) pair_bin_[gap] = static_cast<int>(*b);
    }
    pairs_.assign(stats_rx_.size() * vehicles_.size(), PairState{});
    if (config_.sps.harq_enabled) last_decoded_.assign(vehicles_.size() * vehicles_.size(), 0);
}

Simulator::~Simulator() = default;

double Simulator::distance(std::size_t a, std::size_t b) const {
    return std::abs(vehicles_[a].position_m - vehicles_[b].position_m);
}

double Simulator::mean_power_mw(std::size_t a, std::size_t b) const {
    return mean_power_by_gap_[a > b ? a - b : b - a];
}

void Simulator::force_grant(std::size_t vehicle, const Grant& grant) {
    auto& s = vehicles_.at(vehicle).scheduler;
    s.current = grant;
    s.saved_sps.reset();
    s.one_shot_active = false;
}

void Simulator::force_first_generation(std::size_t vehicle, Subframe t) {
    vehicles_.at(vehicle).congestion.first_generation = t;
}

// ---------------------------------------------------------------------------
// Sub-frame loop

void Simulator::run_to_end() {
    while (!done()) step();
}

void Simulator::step() {
    if (finished_) throw std::logic_error("Simulator: stepped after finish()");
    for (std::size_t v = 0; v < vehicles_.size(); ++v) {
        if (should_generate(vehicles_[v].congestion, now_)) generate(v);
    }
    transmit_phase();
    receive_phase();
    metrics_phase();
    congestion_phase();
    ++now_;
}

void Simulator::generate(std::size_t index) {
    Vehicle& v = vehicles_[index];
    const auto window = window_for_generation(now_, config_.sps.pdb_ms, config_.sps.t1);
    EngineRandom r(v.rng);
    const Opportunity op =
        on_transmission_opportunity(v.scheduler, config_.sps, v.sensing, window, config_.pool, r);

    ArmedBsm bsm;
    bsm.seq = v.next_seq++;
    bsm.t_gen = now_;
    bsm.copies[0] = anchor(op.grant.slot, now_);
    if (config_.sps.harq_enabled && op.grant.harq_slot) bsm.copies[1] = anchor(*op.grant.harq_slot, now_);
    bsm.reserves = op.grant.kind == GrantKind::sps;
    bsm.period_ms = static_cast<int>(std::llround(v.congestion.interval_ms));
    v.armed = bsm;

    ++summary_.generated;
    if (op.decision == Decision::one_shot) ++summary_.one_shots;
    if (op.decision == Decision::reselect_sps) ++summary_.reselections;
}

void Simulator::transmit_phase() {
    transmitters_.clear();
    tx_start_.clear();
    std::fill(transmitting_.begin(), transmitting_.end(), 0);
    const int prr_max = config_.scenario.prr_max_distance_m;
    for (std::size_t v = 0; v < vehicles_.size(); ++v) {
        auto& armed = vehicles_[v].armed;
        if (!armed) continue;
        for (const auto& copy : armed->copies) {
            if (!copy || copy->subframe != now_) continue;
            transmitters_.push_back(v);
            tx_start_.push_back(copy->start_subchannel);
            transmitting_[v] = 1;
            ++summary_.transmissions;
        }
        if (transmitting_[v] && now_ == armed->first_tx() && window_.contains(now_)) {
            armed->counted = true;
            for (std::size_t rx : stats_rx_) {
                if (rx == v) continue;
                const double d = distance(v, rx);
                if (d <= prr_max) count_transmission(store_, d);
            }
        }
    }
}

LinkOutcome Simulator::evaluate_reception(std::size_t k, std::size_t rx, std::span<const ActiveTx> on_air) {
    const auto& ch = config_.channel;
    const int antennas = ch.n_rx_antennas;
    const ActiveTx& s = on_air[k];
    const double prbs = config_.pool.prbs_per_bsm();
    const double data_share = static_cast<double>(config_.pool.pssch_prbs()) / kSubchannelsPerBsm;
    LinkOutcome out;

    auto& interferers = interferers_;
    const IbeMask flat;  // leakage is folded into the interferer powers below
    std::array<double, kMaxRxAntennas> signal{};

    // Control channel: first two PRBs of the first sub-channel, boosted.
    interferers.clear();
    for (int a = 0; a < antennas; ++a) signal[a] = s.power_mw[a] / prbs * kSciPrbs * boost_;
    for (std::size_t j = 0; j < on_air.size(); ++j) {
        if (j == k) continue;
        for (int v = 0; v < kSubchannelsPerBsm; ++v) {
            const double leak = ibe_factor(on_air[j].start_subchannel + v - s.start_subchannel);
            if (leak == 0.0) continue;
            Interferer e;
            const double scale = leak * kSciPrbs * (v == 0 ? boost_ : 1.0) / prbs;
            for (int a = 0; a < antennas; ++a) e.power[a] = on_air[j].power_mw[a] * scale;
            interferers.push_back(e);
        }
    }
    const double sci_sinr =
        post_mrc_sinr_db(std::span<const double>(signal.data(), antennas), interferers, flat, noise_pscch_mw_);
    out.sci_decoded = decode(sci_sinr, PhyChannel::pscch, ch, channel_rng_);
    if (!out.sci_decoded) return out;

    double mean = 0.0;
    for (int a = 0; a < antennas; ++a) mean += s.power_mw[a];
    out.rsrp_mw = mean / antennas / (prbs * kResourceElementsPerPrb);

    // Shared channel: remaining PRBs of both sub-channels.
    interferers.clear();
    for (int a = 0; a < antennas; ++a) signal[a] = s.power_mw[a] / prbs * config_.pool.pssch_prbs();
    for (std::size_t j = 0; j < on_air.size(); ++j) {
        if (j == k) continue;
        double leak = 0.0;
        for (int vj = 0; vj < kSubchannelsPerBsm; ++vj) {
            for (int vk = 0; vk < kSubchannelsPerBsm; ++vk) {
                leak += ibe_factor((on_air[j].start_subchannel + vj) - (s.start_subchannel + vk));
            }
        }
        if (leak == 0.0) continue;
        Interferer e;
        const double scale = leak * data_share / prbs;
        for (int a = 0; a < antennas; ++a) e.power[a] = on_air[j].power_mw[a] * scale;
        interferers.push_back(e);
    }
    const double data_sinr =
        post_mrc_sinr_db(std::span<const double>(signal.data(), antennas), interferers, flat, noise_pssch_mw_);
    if (!decode(data_sinr, PhyChannel::pssch, ch, channel_rng_)) return out;

    const Vehicle& tx = vehicles_[s.vehicle];
    ReceptionRecord rec;
    rec.tx = tx.id;
    rec.rx = vehicles_[rx].id;
    rec.t_gen = tx.armed->t_gen;
    rec.t_rx = now_;
    rec.distance_m = s.distance_m;
    rec.eta_ms = static_cast<int>(now_ - tx.armed->t_gen);
    rec.start_subchannel = s.start_subchannel;
    out.record = rec;
    return out;
}

void Simulator::receive_phase() {
    const int subchannels = config_.pool.subchannels_per_subframe;
    const int antennas = config_.channel.n_rx_antennas;
    const double cutoff = config_.scenario.link_cutoff_m;
    const bool fading = config_.channel.fading;
    thread_local std::vector<double> rssi;
    thread_local std::vector<SciObservation> scis;
    thread_local std::vector<ActiveTx> on_air;
    rssi.assign(static_cast<std::size_t>(subchannels), noise_vrb_mw_);

    if (transmitters_.empty()) {
        for (auto& v : vehicles_) v.sensing.record_subframe(now_, rssi, {}, false);
        return;
    }

    on_air.resize(transmitters_.size());
    for (std::size_t rx = 0; rx < vehicles_.size(); ++rx) {
        Vehicle& r = vehicles_[rx];
        if (transmitting_[rx]) {
            r.sensing.record_subframe(now_, {}, {}, true);
            continue;
        }
        std::fill(rssi.begin(), rssi.end(), noise_vrb_mw_);
        for (std::size_t k = 0; k < transmitters_.size(); ++k) {
            ActiveTx& e = on_air[k];
            e.vehicle = transmitters_[k];
            e.start_subchannel = tx_start_[k];
            e.distance_m = distance(e.vehicle, rx);
            e.decodable = e.distance_m <= cutoff;
            const double mean = mean_power_mw(e.vehicle, rx);
            double avg = 0.0;
            for (int a = 0; a < antennas; ++a) {
                e.power_mw[a] = e.decodable && fading ? mean * fading_.unit_gain(e.distance_m, channel_rng_) : mean;
                avg += e.power_mw[a];
            }
            avg /= antennas;
            for (int v = 0; v < kSubchannelsPerBsm; ++v) {
                rssi[static_cast<std::size_t>(e.start_subchannel + v)] += avg / kSubchannelsPerBsm;
            }
        }

        scis.clear();
        for (std::size_t k = 0; k < on_air.size(); ++k) {
            if (!on_air[k].decodable) continue;
            const LinkOutcome outcome = evaluate_reception(k, rx, on_air);
            if (!outcome.sci_decoded) continue;
            const Vehicle& tx = vehicles_[on_air[k].vehicle];
            scis.push_back({tx.id, on_air[k].start_subchannel, outcome.rsrp_mw, tx.armed->reserves,
                            tx.armed->period_ms});
            if (outcome.record) on_bsm_decoded(on_air[k].vehicle, rx, *tx.armed, on_air[k].distance_m);
        }
        r.sensing.record_subframe(now_, rssi, scis, false);
    }
}

void Simulator::on_bsm_decoded(std::size_t tx, std::size_t rx, const ArmedBsm& bsm, double d) {
    if (!last_decoded_.empty()) {
        auto& last = last_decoded_[rx * vehicles_.size() + tx];
        if (last == bsm.seq + 1) return;
        last = bsm.seq + 1;
    }
    ++summary_.receptions;
    register_reception(vehicles_[rx].congestion, config_.congestion, vehicles_[tx].id, d, now_);

    const int slot = stats_slot_[rx];
    if (slot < 0) return;
    if (bsm.counted && d <= config_.scenario.prr_max_distance_m) count_reception(store_, d);
    const int bin = pair_bin_[tx > rx ? tx - rx : rx - tx];
    if (bin < 0) return;
    const int eta = static_cast<int>(now_ - bsm.t_gen);
    observe_reception(store_, pairs_[static_cast<std::size_t>(slot) * vehicles_.size() + tx],
                      static_cast<std::size_t>(bin), now_, eta, window_);
    if (config_.scenario.trace && window_.contains(now_)) {
        trace_.push_back({vehicles_[tx].id, vehicles_[rx].id, bsm.t_gen, now_, d, eta, 0});
        for (const auto& c : bsm.copies) {
            if (c && c->subframe == now_) trace_.back().start_subchannel = c->start_subchannel;
        }
    }
}

void Simulator::metrics_phase() {
    if (!window_.contains(now_)) return;
    for (std::size_t v : cbr_vehicles_) {
        record_cbr(store_, vehicles_[v].id, vehicles_[v].position_m, update_cbr(vehicles_[v].sensing));
    }
}

void Simulator::congestion_phase() {
    const auto& cc = config_.congestion;
    if ((now_ + 1) % cc.w_k_ms != 0) return;
    for (auto& v : vehicles_) update_smoothed(v.congestion, cc, now_);
    if (window_.contains(now_)) {
        for (std::size_t rx : stats_rx_) interval_sum_ += vehicles_[rx].congestion.interval_ms;
        interval_samples_ += stats_rx_.size();
    }
}

RunResult Simulator::finish() {
    if (finished_) throw std::logic_error("Simulator: finish() called twice");
    finished_ = true;
    const StatsWindow closing{window_.start, std::min(now_, window_.end)};
    for (std::size_t slot = 0; slot < stats_rx_.size(); ++slot) {
        const std::size_t rx = stats_rx_[slot];
        for (std::size_t tx = 0; tx < vehicles_.size(); ++tx) {
            if (tx == rx) continue;
            const int bin = pair_bin_[tx > rx ? tx - rx : rx - tx];
            if (bin < 0) continue;
            close_pair(store_, pairs_[slot * vehicles_.size() + tx], static_cast<std::size_t>(bin), closing);
        }
    }
    summary_.mean_interval_ms = interval_samples_ ? interval_sum_ / static_cast<double>(interval_samples_) : 0.0;
    return {std::move(store_), summary_, std::move(trace_)};
}

RunResult run(const SimConfig& config) {
    Simulator sim(config);
    sim.run_to_end();
    return sim.finish();
}

void write_trace(std::ostream& os, const std::vector<ReceptionRecord>& trace) {
    os << "tx_id,rx_id,t_gen,t_tx,t_rx,distance_m,slot\n";
    for (const auto& r : trace) {
        os << r.tx << ',' << r.rx << ',' << r.t_gen << ',' << r.t_rx << ',' << r.t_rx << ',' << r.distance_m << ','
           << r.start_subchannel << '\n';
    }
}

}  // namespace cv2x
