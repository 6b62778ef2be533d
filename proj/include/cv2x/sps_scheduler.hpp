#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/resource_grid.hpp"
#include "cv2x/sensing.hpp"

namespace cv2x {

/// Counter range [lo, hi], both inclusive.
struct CounterRange {
    int lo = 0;
    int hi = 0;
    friend bool operator==(const CounterRange&, const CounterRange&) = default;
};

struct SchedulerConfig {
    CounterRange cs_range{5, 15};
    /// Absent when one-shot transmissions are off.
    std::optional<CounterRange> co_range;
    double p_keep = 0.8;
    bool harq_enabled = false;
    double rsrp_threshold_dbm = -128.0;
    int t1 = kMaxT1;
    int pdb_ms = 100;

    double p_reselect() const { return 1.0 - p_keep; }
    /// Rejects p_keep outside {0, 0.2, 0.4, 0.6, 0.8} and malformed ranges.
    void validate() const;
};

/// Source of the scheduler's random decisions. The simulator wraps a
/// seeded engine; tests script the draws.
class SchedulerRandom {
public:
    virtual ~SchedulerRandom() = default;
    /// Uniform in [0, 1).
    virtual double uniform01() = 0;
    /// Uniform integer in [lo, hi].
    virtual int uniform_int(int lo, int hi) = 0;
};

class EngineRandom final : public SchedulerRandom {
public:
    explicit EngineRandom(Rng& rng) : rng_(&rng) {}
    double uniform01() override;
    int uniform_int(int lo, int hi) override;

private:
    Rng* rng_;
};

/// Sensing-based candidate list: RSRP exclusion with the 3 dB relaxation
/// loop, then the lowest-average-S-RSSI 20% of what remains. Always returns
/// exactly ceil(0.2 * |window candidates|) slots in absolute coordinates.
std::vector<SlotCoord> build_candidate_list(const SensingDatabase& db, const SelectionWindow& window,
                                            const PoolConfig& pool, double rsrp_threshold_init_dbm);

/// ceil(0.2 * total).
inline int candidate_target(int total) { return (total + 4) / 5; }

/// Uniform choice. Throws std::invalid_argument when empty.
SlotCoord select_grant(const std::vector<SlotCoord>& candidates, SchedulerRandom& rng);

/// Uniform choice among candidates in a different sub-frame no more than 15
/// sub-frames from the initial slot.
std::optional<SlotCoord> select_harq_slot(const std::vector<SlotCoord>& candidates, const SlotCoord& initial,
                                          SchedulerRandom& rng);

enum class Decision { use_current_sps, reselect_sps, one_shot };

struct SchedulerState {
    int cs = 0;
    int co = 0;
    std::optional<Grant> current;
    std::optional<Grant> saved_sps;
    bool one_shot_active = false;

    /// Counters drawn as at a reselection; no grant yet.
    static SchedulerState initial(const SchedulerConfig& config, SchedulerRandom& rng);
};

struct Opportunity {
    Decision decision = Decision::use_current_sps;
    /// Grant to transmit on, slot offsets relative to the window's n.
    Grant grant;
};

/// Candidate lists are built lazily; the scheduler asks at most once per
/// opportunity.
class CandidateSource {
public:
    virtual ~CandidateSource() = default;
    virtual std::vector<SlotCoord> candidates() = 0;
};

class SensingCandidates final : public CandidateSource {
public:
    SensingCandidates(const SensingDatabase& db, const SelectionWindow& window, const PoolConfig& pool,
                      double rsrp_threshold_dbm)
        : db_(&db), window_(&window), pool_(&pool), threshold_(rsrp_threshold_dbm) {}
    std::vector<SlotCoord> candidates() override {
        return build_candidate_list(*db_, *window_, *pool_, threshold_);
    }

private:
    const SensingDatabase* db_;
    const SelectionWindow* window_;
    const PoolConfig* pool_;
    double threshold_;
};

/// One step of the interleaved SPS / one-shot state machine, run once per
/// generated BSM.
Opportunity on_transmission_opportunity(SchedulerState& state, const SchedulerConfig& config,
                                        const SelectionWindow& window, CandidateSource& source,
                                        SchedulerRandom& rng);

/// Convenience overload building candidates from the sensing database.
Opportunity on_transmission_opportunity(SchedulerState& state, const SchedulerConfig& config,
                                        const SensingDatabase& db, const SelectionWindow& window,
                                        const PoolConfig& pool, SchedulerRandom& rng);

}  // namespace cv2x
