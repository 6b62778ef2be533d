#include "cv2x/resource_grid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cv2x {

int subchannels_for_bandwidth(int bandwidth_mhz) {
    switch (bandwidth_mhz) {
        case 10: return 5;
        case 20: return 10;
        default:
            throw std::invalid_argument("bandwidth_mhz must be 10 or 20, got " +
                                        std::to_string(bandwidth_mhz));
    }
}

PoolConfig PoolConfig::for_bandwidth(int bandwidth_mhz) {
    PoolConfig pool;
    pool.bandwidth_mhz = bandwidth_mhz;
    pool.subchannels_per_subframe = subchannels_for_bandwidth(bandwidth_mhz);
    return pool;
}

void PoolConfig::validate() const {
    const int expected = subchannels_for_bandwidth(bandwidth_mhz);
    if (subchannels_per_subframe != expected) {
        throw std::invalid_argument("subchannels_per_subframe = " + std::to_string(subchannels_per_subframe) +
                                    " does not match bandwidth_mhz = " + std::to_string(bandwidth_mhz) +
                                    " (expected " + std::to_string(expected) + ")");
    }
    if (prbs_per_subchannel != 10) {
        throw std::invalid_argument("prbs_per_subchannel must be 10");
    }
    if (subframe_ms != 1) {
        throw std::invalid_argument("subframe_ms must be 1");
    }
    if (sensing_history_len < 100) {
        throw std::invalid_argument("sensing_history_len must be at least 100 sub-frames");
    }
}

bool fits_pool(const SlotCoord& slot, const PoolConfig& pool) {
    return slot.start_subchannel >= 0 && slot.start_subchannel <= pool.subchannels_per_subframe - kSubchannelsPerBsm;
}

SelectionWindow::SelectionWindow(Subframe n, int t1, int t2, int pdb_ms)
    : n_(n), t1_(t1), t2_(t2), pdb_ms_(pdb_ms) {
    if (pdb_ms <= 0) throw std::invalid_argument("pdb_ms must be positive");
    if (t1 < 0 || t1 > kMaxT1) throw std::invalid_argument("t1 must lie in [0, 4]");
    if (t2 < t1) throw std::invalid_argument("t2 must not precede t1");
}

int t2_for_pdb(int pdb_ms) { return std::max(pdb_ms - 10, 20); }

SelectionWindow window_for_generation(Subframe n, int pdb_ms, int t1) {
    if (pdb_ms <= 0) throw std::invalid_argument("pdb_ms must be positive");
    return SelectionWindow(n, t1, t2_for_pdb(pdb_ms), pdb_ms);
}

std::vector<SlotCoord> enumerate_candidates(const SelectionWindow& window, const PoolConfig& pool) {
    std::vector<SlotCoord> out;
    out.reserve(static_cast<std::size_t>(candidate_count(window, pool)));
    for (Subframe s = window.first(); s <= window.last(); ++s) {
        for (int c = 0; c < pool.pair_positions(); ++c) out.push_back({s, c});
    }
    return out;
}

}  // namespace cv2x
