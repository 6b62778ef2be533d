#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

namespace cv2x {

/// Absolute sub-frame number. One sub-frame is one millisecond.
using Subframe = std::int64_t;
using VehicleId = std::int32_t;

/// Number of sub-channels (VRBs) occupied by one BSM.
inline constexpr int kSubchannelsPerBsm = 2;
inline constexpr int kPrbBandwidthHz = 180'000;
inline constexpr int kSciPrbs = 2;
inline constexpr int kSubcarriersPerPrb = 12;

/// Geometry of the sidelink resource pool.
struct PoolConfig {
    int bandwidth_mhz = 20;
    int subchannels_per_subframe = 10;
    int prbs_per_subchannel = 10;
    int subframe_ms = 1;
    int sensing_history_len = 1000;

    /// Pool with the sub-channel count implied by the carrier bandwidth.
    static PoolConfig for_bandwidth(int bandwidth_mhz);

    int pair_positions() const { return subchannels_per_subframe - 1; }
    int prbs_per_bsm() const { return kSubchannelsPerBsm * prbs_per_subchannel; }
    int pssch_prbs() const { return prbs_per_bsm() - kSciPrbs; }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// 5 sub-channels at 10 MHz, 10 at 20 MHz. Throws for any other bandwidth.
int subchannels_for_bandwidth(int bandwidth_mhz);

/// A BSM-sized allocation: two contiguous sub-channels starting at
/// start_subchannel inside one sub-frame.
struct SlotCoord {
    Subframe subframe = 0;
    int start_subchannel = 0;

    friend auto operator<=>(const SlotCoord&, const SlotCoord&) = default;
};

bool fits_pool(const SlotCoord& slot, const PoolConfig& pool);

enum class GrantKind { sps, one_shot };

/// A resource grant. Slot sub-frames are offsets from the generation
/// sub-frame n of the BSM they serve, so a kept SPS grant re-anchors to
/// each new selection window.
struct Grant {
    SlotCoord slot;
    std::optional<SlotCoord> harq_slot;
    GrantKind kind = GrantKind::sps;

    friend bool operator==(const Grant&, const Grant&) = default;
};

/// Maximum sub-frame distance between an initial transmission and its
/// HARQ retransmission.
inline constexpr int kHarqMaxGap = 15;

/// Absolute slot for a relative grant position and generation sub-frame.
inline SlotCoord anchor(const SlotCoord& relative, Subframe n) {
    return {n + relative.subframe, relative.start_subchannel};
}

/// Candidate region [n + t1, n + t2] following generation at n.
class SelectionWindow {
public:
    /// Throws std::invalid_argument unless 0 <= t1 <= 4, t1 <= t2 and pdb_ms > 0.
    SelectionWindow(Subframe n, int t1, int t2, int pdb_ms);

    Subframe n() const { return n_; }
    int t1() const { return t1_; }
    int t2() const { return t2_; }
    int pdb_ms() const { return pdb_ms_; }
    Subframe first() const { return n_ + t1_; }
    Subframe last() const { return n_ + t2_; }
    int length() const { return t2_ - t1_ + 1; }
    bool contains(Subframe s) const { return s >= first() && s <= last(); }

private:
    Subframe n_;
    int t1_;
    int t2_;
    int pdb_ms_;
};

inline constexpr int kMaxT1 = 4;

/// t2 = max(pdb - 10, 20).
int t2_for_pdb(int pdb_ms);

SelectionWindow window_for_generation(Subframe n, int pdb_ms, int t1 = kMaxT1);

/// Every BSM-sized slot in the window, sub-frame major then sub-channel.
std::vector<SlotCoord> enumerate_candidates(const SelectionWindow& window, const PoolConfig& pool);

inline int candidate_count(const SelectionWindow& window, const PoolConfig& pool) {
    return window.length() * pool.pair_positions();
}

}  // namespace cv2x
