#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/congestion_control.hpp"
#include "cv2x/metrics.hpp"
#include "cv2x/resource_grid.hpp"
#include "cv2x/sensing.hpp"
#include "cv2x/sps_scheduler.hpp"

namespace cv2x {

/// Static single-lane highway with regularly spaced vehicles.
struct Scenario {
    double highway_length_m = 5000.0;
    double density_vue_per_km = 400.0;
    double sim_duration_s = 500.0;
    double warmup_s = 10.0;
    std::uint64_t seed = 1;
    /// Links beyond this distance are not decoded but still interfere.
    double link_cutoff_m = 1000.0;
    std::vector<double> ccdf_bins_m{100, 150, 200, 250, 300, 350, 400, 450, 500};
    double ccdf_half_width_m = 25.0;
    int prr_max_distance_m = 1000;
    double cbr_center_radius_m = 25.0;
    bool trace = false;

    int vehicle_count() const;
    double spacing_m() const { return 1000.0 / density_vue_per_km; }
    Subframe duration_subframes() const;
    Subframe warmup_subframes() const;
    void validate() const;
};

struct SimConfig {
    Scenario scenario;
    PoolConfig pool;
    ChannelConfig channel;
    SchedulerConfig sps;
    CongestionConfig congestion;

    /// Cross-checks every section; throws std::invalid_argument.
    void validate() const;
};

/// relaxed skips the keep-probability grid so test harnesses can pin grants
/// with p_keep = 1.
enum class Validation { strict, relaxed };

struct RunSummary {
    std::uint64_t generated = 0;
    std::uint64_t transmissions = 0;
    std::uint64_t one_shots = 0;
    std::uint64_t reselections = 0;
    std::uint64_t receptions = 0;
    /// Generation interval averaged over middle-third vehicles at every
    /// 100 ms update after warm-up.
    double mean_interval_ms = 0.0;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct RunResult {
    MetricsStore store;
    RunSummary summary;
    std::vector<ReceptionRecord> trace;
};

/// A BSM armed for transmission: the initial copy and an optional HARQ copy,
/// in absolute sub-frames.
struct ArmedBsm {
    std::uint64_t seq = 0;
    Subframe t_gen = 0;
    std::array<std::optional<SlotCoord>, 2> copies;
    bool reserves = true;
    int period_ms = 100;
    bool counted = false;

    Subframe first_tx() const;
    Subframe last_tx() const;
};

struct Vehicle {
    VehicleId id = 0;
    double position_m = 0.0;
    SchedulerState scheduler;
    SensingDatabase sensing;
    DensityState congestion;
    Rng rng;
    std::optional<ArmedBsm> armed;
    std::uint64_t next_seq = 0;
};

/// Transmission happening in the current sub-frame.
struct ActiveTx {
    std::size_t vehicle = 0;
    int start_subchannel = 0;
    double distance_m = 0.0;                          // to the receiver being evaluated
    std::array<double, kMaxRxAntennas> power_mw{};    // received over the BSM's 20 PRBs
    bool decodable = false;                           // within link cutoff
};

struct LinkOutcome {
    bool sci_decoded = false;
    double rsrp_mw = 0.0;  // per resource element, averaged over antennas
    std::optional<ReceptionRecord> record;
};

/// Per-sub-frame discrete-event loop: generation, transmission, propagation
/// and decoding, sensing, metrics, and congestion-control updates.
class Simulator {
public:
    explicit Simulator(SimConfig config, Validation validation = Validation::strict);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;
    ~Simulator();

    void step();
    void run_to_end();
    bool done() const { return now_ >= duration_; }
    Subframe now() const { return now_; }

    /// Closes open statistics and returns the accumulated result. The
    /// simulator must not be stepped afterwards.
    RunResult finish();

    std::size_t vehicle_count() const { return vehicles_.size(); }
    const Vehicle& vehicle(std::size_t i) const { return vehicles_.at(i); }
    const SimConfig& config() const { return config_; }
    const RunSummary& summary() const { return summary_; }

    /// Test hooks: pin a vehicle's SPS grant and first generation sub-frame.
    void force_grant(std::size_t vehicle, const Grant& grant);
    void force_first_generation(std::size_t vehicle, Subframe t);

    /// Decodes on_air[tx_index] at receiver rx with every other entry of
    /// on_air interfering. The BSM needs its SCI to decode first.
    LinkOutcome evaluate_reception(std::size_t tx_index, std::size_t rx, std::span<const ActiveTx> on_air);

private:
    void generate(std::size_t v);
    void transmit_phase();
    void receive_phase();
    void metrics_phase();
    void congestion_phase();
    void on_bsm_decoded(std::size_t tx, std::size_t rx, const ArmedBsm& bsm, double distance);
    double distance(std::size_t a, std::size_t b) const;
    double mean_power_mw(std::size_t a, std::size_t b) const;

    SimConfig config_;
    std::unique_ptr<PathLossModel> path_loss_;
    FadingSampler fading_;
    Rng channel_rng_;
    std::vector<Vehicle> vehicles_;
    std::vector<double> mean_power_by_gap_;
    Subframe now_ = 0;
    Subframe duration_ = 0;
    StatsWindow window_;

    double noise_vrb_mw_ = 0.0;
    double noise_pscch_mw_ = 0.0;
    double noise_pssch_mw_ = 0.0;
    double boost_ = 1.0;
    std::vector<double> ibe_by_offset_;  // offset + subchannels
    std::vector<Interferer> interferers_;

    double ibe_factor(int offset) const {
        return ibe_by_offset_[static_cast<std::size_t>(offset + config_.pool.subchannels_per_subframe)];
    }

    std::vector<std::size_t> transmitters_;
    std::vector<int> tx_start_;
    std::vector<char> transmitting_;

    // Statistics receivers are the middle third of the highway.
    std::vector<std::size_t> stats_rx_;
    std::vector<int> stats_slot_;  // vehicle -> index in stats_rx_, or -1
    std::vector<PairState> pairs_;  // stats_rx_.size() x vehicles
    std::vector<int> pair_bin_;      // by vehicle gap, -1 when outside all bins
    std::vector<std::size_t> cbr_vehicles_;
    std::vector<std::uint64_t> last_decoded_;  // rx x tx, HARQ de-duplication

    MetricsStore store_;
    RunSummary summary_;
    double interval_sum_ = 0.0;
    std::uint64_t interval_samples_ = 0;
    std::vector<ReceptionRecord> trace_;
    bool finished_ = false;
};

RunResult run(const SimConfig& config);

/// tx_id,rx_id,t_gen,t_tx,t_rx,distance_m,slot
void write_trace(std::ostream& os, const std::vector<ReceptionRecord>& trace);

}  // namespace cv2x
