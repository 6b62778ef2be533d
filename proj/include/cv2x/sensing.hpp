#pragma once

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "cv2x/resource_grid.hpp"

namespace cv2x {

/// Sensing history maps onto candidate sub-frames through this periodicity:
/// an entry recorded at sub-frame h informs candidates congruent to h mod 100.
inline constexpr int kSensingPeriodMs = 100;

/// Decoded SCI as seen by a receiver.
struct SciObservation {
    VehicleId tx = 0;
    int start_subchannel = 0;
    double rsrp_mw = 0.0;
    /// False for one-shot transmissions, which reserve nothing ahead.
    bool reserves = true;
    /// Reservation interval announced by the transmitter.
    int period_ms = kSensingPeriodMs;
};

struct SciRecord {
    Subframe heard_at = 0;
    SciObservation sci;
};

/// Per-vehicle rolling record of the last history_len sub-frames: S-RSSI per
/// sub-channel, decoded SCIs, and which sub-frames the vehicle spent
/// transmitting (unmonitored).
class SensingDatabase {
public:
    explicit SensingDatabase(int subchannels, int history_len = 1000);

    /// Must be called once per sub-frame with strictly consecutive t.
    /// Throws std::logic_error on a repeated or skipped sub-frame. When own_tx
    /// is set the observations are discarded and the sub-frame is marked
    /// unmonitored.
    void record_subframe(Subframe t, std::span<const double> rssi_mw, std::span<const SciObservation> scis,
                         bool own_tx);

    int subchannels() const { return subchannels_; }
    int history_len() const { return history_len_; }
    /// Number of sub-frames currently held (<= history_len).
    int depth() const;
    std::optional<Subframe> latest() const { return latest_; }
    bool holds(Subframe t) const;
    /// False for own-transmission sub-frames. Requires holds(t).
    bool monitored(Subframe t) const;
    /// S-RSSI stored for a held, monitored sub-frame.
    double rssi_mw(Subframe t, int subchannel) const;

    /// Mean S-RSSI over the held monitored entries congruent to residue
    /// (mod 100) on the sub-channel; nullopt when none exist.
    std::optional<double> average_rssi_mw(int residue, int subchannel) const;
    /// Number of monitored entries congruent to residue mod 100.
    int residue_samples(int residue) const;

    const std::deque<SciRecord>& scis() const { return scis_; }
    std::vector<Subframe> unmonitored_subframes() const;

private:
    std::size_t row(Subframe t) const;
    // Residue sums are recomputed from the ring on first use after a write.
    void refresh_residue(int residue) const;

    int subchannels_;
    int history_len_;
    std::optional<Subframe> latest_;
    Subframe first_ = 0;
    std::vector<float> rssi_;        // history_len x subchannels
    std::vector<unsigned char> own_;  // history_len
    mutable std::vector<double> residue_sum_;  // 100 x subchannels
    mutable std::vector<int> residue_count_;   // 100
    mutable std::vector<unsigned char> dirty_;  // 100
    std::deque<SciRecord> scis_;
};

}  // namespace cv2x
