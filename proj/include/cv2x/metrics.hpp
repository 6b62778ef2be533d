#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cv2x/resource_grid.hpp"
#include "cv2x/sensing.hpp"

namespace cv2x {

struct ReceptionRecord {
    VehicleId tx = 0;
    VehicleId rx = 0;
    Subframe t_gen = 0;
    Subframe t_rx = 0;
    double distance_m = 0.0;
    /// Generation to transmission latency of the copy that decoded.
    int eta_ms = 0;
    int start_subchannel = 0;

    friend bool operator==(const ReceptionRecord&, const ReceptionRecord&) = default;
};

/// Pairs separated by zeta with center - half_width <= zeta < center + half_width.
struct DistanceBin {
    double center_m = 0.0;
    double half_width_m = 25.0;

    bool contains(double zeta) const { return zeta >= center_m - half_width_m && zeta < center_m + half_width_m; }
};

/// Counts of non-negative integer samples (milliseconds). Supports adding a
/// contiguous run of values in O(1), which is how uniformly sampled age
/// sawtooth segments are accumulated.
class Histogram {
public:
    void add(std::int64_t value, std::uint64_t count = 1);
    /// Adds each value in [lo, hi) once.
    void add_range(std::int64_t lo, std::int64_t hi);
    void merge(const Histogram& other);

    /// counts()[v] is the number of samples equal to v.
    std::vector<std::uint64_t> counts() const;
    std::uint64_t total() const { return total_; }
    bool empty() const { return total_ == 0; }
    /// Expanded sorted sample list; for tests and small histograms.
    std::vector<std::int64_t> samples() const;

    friend bool operator==(const Histogram& a, const Histogram& b) {
        return a.total_ == b.total_ && a.counts() == b.counts();
    }

private:
    void grow(std::size_t size);

    std::vector<std::uint64_t> point_;
    std::vector<std::int64_t> diff_;
    std::uint64_t total_ = 0;
};

/// Empirical CCDF at 1 ms resolution: at(i) is the fraction of samples
/// strictly greater than i.
class Ccdf {
public:
    static Ccdf from_histogram(const Histogram& h);
    /// From a table of F(0..max) values, as written by write_ccdf_table.
    static Ccdf from_fractions(std::vector<double> fractions);

    double at(std::int64_t i) const;
    /// Largest i with F(i) possibly nonzero; F is 0 from max_value() on.
    std::int64_t max_value() const { return static_cast<std::int64_t>(fractions_.size()) - 1; }
    const std::vector<double>& fractions() const { return fractions_; }

private:
    std::vector<double> fractions_;  // F(i) for i = 0 .. max sample
};

/// Throws std::invalid_argument on an empty or negative sample set.
Ccdf ccdf(std::span<const std::int64_t> samples);

struct TailImprovement {
    double mean = 0.0;
    int points_used = 0;
    int points_excluded = 0;
};

/// Mean of (F_base(i) - F_variant(i)) / F_base(i) over i = lo..hi ms, skipping
/// points where the baseline is zero. Throws std::domain_error when the
/// baseline vanishes on the whole range.
TailImprovement tail_improvement(const Ccdf& base, const Ccdf& variant, std::int64_t lo_ms = 3000,
                                 std::int64_t hi_ms = 10000);

/// Nearest rank: the ceil(permille / 1000 * N)-th smallest sample.
std::int64_t percentile_permille(std::span<const std::int64_t> samples, int permille);
std::int64_t percentile_permille(const Histogram& h, int permille);
inline std::int64_t percentile_999(std::span<const std::int64_t> samples) { return percentile_permille(samples, 999); }
inline std::int64_t percentile_999(const Histogram& h) { return percentile_permille(h, 999); }

struct PrrCounter {
    std::uint64_t transmitted = 0;
    std::uint64_t received = 0;
    friend bool operator==(const PrrCounter&, const PrrCounter&) = default;
};

struct CbrAccumulator {
    double position_m = 0.0;
    double sum = 0.0;
    std::uint64_t samples = 0;

    double mean() const { return samples ? sum / static_cast<double>(samples) : 0.0; }
    friend bool operator==(const CbrAccumulator&, const CbrAccumulator&) = default;
};

/// Per-bin accumulators for one or more runs. Merging two stores adds every
/// counter, so disjoint runs combine in any grouping.
struct MetricsStore {
    MetricsStore() = default;
    MetricsStore(std::vector<double> bin_centers_m, double bin_half_width_m, int prr_max_distance_m);

    std::vector<double> bin_centers_m;
    double bin_half_width_m = 25.0;
    std::vector<Histogram> ipg;
    std::vector<Histogram> ia;
    /// Tracked pairs that never decoded a BSM, per CCDF bin.
    std::vector<std::uint64_t> silent_pairs;
    /// Indexed by distance in whole metres.
    std::vector<PrrCounter> prr;
    std::map<VehicleId, CbrAccumulator> cbr;

    DistanceBin bin(std::size_t i) const { return {bin_centers_m[i], bin_half_width_m}; }
    std::optional<std::size_t> bin_index(double distance_m) const;
    /// Throws std::invalid_argument when the layouts differ.
    void merge(const MetricsStore& other);

    friend bool operator==(const MetricsStore&, const MetricsStore&) = default;
};

/// 1 m PRR bin of a distance: round to nearest metre.
std::int64_t prr_bin(double distance_m);

/// Per ordered (tx, rx) link: the last decoded BSM.
struct PairState {
    std::optional<Subframe> last_rx;
    int last_eta = 0;
    bool ever_received = false;
};

/// Half-open statistics period [start, end).
struct StatsWindow {
    Subframe start = 0;
    Subframe end = 0;
    bool contains(Subframe t) const { return t >= start && t < end; }
};

/// Appends t_rx - last_rx to the bin's IPG histogram; the first reception of
/// a pair records nothing. Does not update the pair.
void record_ipg(MetricsStore& store, const PairState& pair, Subframe t_rx, std::size_t bin);

struct TrackedPair {
    PairState state;
    std::size_t bin = 0;
};

/// Reference uniform sampler: for every pair with a reception, appends
/// t_now - t_s + eta to its bin.
void sample_ia(MetricsStore& store, Subframe t_now, std::span<const TrackedPair> pairs);

/// Streaming path used by the simulator: records the IPG, adds the age
/// sawtooth since the previous reception clipped to the window (equivalent to
/// calling sample_ia every sub-frame), and updates the pair.
void observe_reception(MetricsStore& store, PairState& pair, std::size_t bin, Subframe t_rx, int eta_ms,
                       const StatsWindow& window);
/// Flushes the open sawtooth segment at the end of the window.
void close_pair(MetricsStore& store, const PairState& pair, std::size_t bin, const StatsWindow& window);

void count_transmission(MetricsStore& store, double distance_m);
void count_reception(MetricsStore& store, double distance_m);
/// R / T for a 1 m bin; nullopt when nothing was transmitted.
std::optional<double> prr(const MetricsStore& store, std::int64_t distance_bin_m);
/// Pooled R / T over all 1 m bins in [lo, hi).
std::optional<double> prr_range(const MetricsStore& store, std::int64_t lo_m, std::int64_t hi_m);

inline constexpr double kCbrThresholdDbm = -94.0;

/// Fraction of sub-channel cells in the last 100 ms whose S-RSSI averaged
/// over the sensing history exceeds the threshold.
double update_cbr(const SensingDatabase& db, double threshold_dbm = kCbrThresholdDbm);
void record_cbr(MetricsStore& store, VehicleId vehicle, double position_m, double cbr);

// Columnar exports, one header row each.
void write_ccdf_table(std::ostream& os, const Ccdf& ccdf);
Ccdf read_ccdf_table(std::istream& is);
void write_percentile_table(std::ostream& os, const MetricsStore& store, bool ia);
void write_prr_table(std::ostream& os, const MetricsStore& store);
void write_cbr_table(std::ostream& os, const MetricsStore& store);

}  // namespace cv2x
