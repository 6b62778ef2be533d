#include "cv2x/sps_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace cv2x {

void SchedulerConfig::validate() const {
    auto check_range = [](const CounterRange& r, const char* name) {
        if (r.lo < 1 || r.hi < r.lo) {
            throw std::invalid_argument(std::string(name) + " must satisfy 0 < lo <= hi");
        }
    };
    check_range(cs_range, "sps.cs_range");
    if (co_range) check_range(*co_range, "sps.one_shot");
    bool on_grid = false;
    for (double allowed : {0.0, 0.2, 0.4, 0.6, 0.8}) on_grid |= std::abs(p_keep - allowed) < 1e-9;
    if (!on_grid) throw std::invalid_argument("sps.p_keep must be one of 0, 0.2, 0.4, 0.6, 0.8");
    if (t1 < 0 || t1 > kMaxT1) throw std::invalid_argument("sps.t1 must lie in [0, 4]");
    if (pdb_ms <= 0) throw std::invalid_argument("sps.pdb_ms must be positive");
    if (!std::isfinite(rsrp_threshold_dbm)) throw std::invalid_argument("sps.rsrp_threshold_dbm must be finite");
}

double EngineRandom::uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(*rng_); }

int EngineRandom::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(*rng_); }

namespace {

struct TransmitterView {
    double rsrp_sum_mw = 0.0;
    int rsrp_samples = 0;
    const SciRecord* reservation = nullptr;
};

int residue_of(Subframe t) { return static_cast<int>(((t % kSensingPeriodMs) + kSensingPeriodMs) % kSensingPeriodMs); }

}  // namespace

std::vector<SlotCoord> build_candidate_list(const SensingDatabase& db, const SelectionWindow& window,
                                            const PoolConfig& pool, double rsrp_threshold_init_dbm) {
    const std::vector<SlotCoord> all = enumerate_candidates(window, pool);
    const int target = candidate_target(static_cast<int>(all.size()));
    constexpr double kNone = -std::numeric_limits<double>::infinity();

    // Per transmitter: mean RSRP over every decoded SCI, latest reservation.
    std::map<VehicleId, TransmitterView> heard;
    for (const auto& rec : db.scis()) {
        auto& v = heard[rec.sci.tx];
        v.rsrp_sum_mw += rec.sci.rsrp_mw;
        ++v.rsrp_samples;
        if (rec.sci.reserves) v.reservation = &rec;
    }

    std::vector<bool> own_residue(kSensingPeriodMs, false);
    for (Subframe t : db.unmonitored_subframes()) own_residue[static_cast<std::size_t>(residue_of(t))] = true;

    // Strongest reservation covering each candidate, and the residue
    // exclusion for sub-frames the vehicle could not sense.
    std::vector<double> blocking(all.size(), kNone);
    std::vector<bool> unmonitored(all.size(), false);
    const int positions = pool.pair_positions();
    auto index_of = [&](Subframe sf, int start) {
        return static_cast<std::size_t>((sf - window.first()) * positions + start);
    };
    for (std::size_t i = 0; i < all.size(); ++i) {
        unmonitored[i] = own_residue[static_cast<std::size_t>(residue_of(all[i].subframe))];
    }
    for (const auto& [tx, v] : heard) {
        if (v.reservation == nullptr) continue;
        const SciRecord& rec = *v.reservation;
        const int period = rec.sci.period_ms;
        if (period <= 0) continue;
        const double rsrp_dbm = linear_to_db(v.rsrp_sum_mw / v.rsrp_samples);
        // First reserved sub-frame at or after the window start.
        Subframe sf = rec.heard_at + period;
        if (sf < window.first()) sf += ((window.first() - sf + period - 1) / period) * period;
        for (; sf <= window.last(); sf += period) {
            for (int start = rec.sci.start_subchannel - kSubchannelsPerBsm + 1;
                 start < rec.sci.start_subchannel + kSubchannelsPerBsm; ++start) {
                if (start < 0 || start >= positions) continue;
                const std::size_t i = index_of(sf, start);
                blocking[i] = std::max(blocking[i], rsrp_dbm);
            }
        }
    }

    double max_blocking = kNone;
    for (double b : blocking) max_blocking = std::max(max_blocking, b);

    double threshold = rsrp_threshold_init_dbm;
    bool admit_unmonitored = false;
    auto admitted = [&](std::size_t i) {
        return blocking[i] <= threshold && (admit_unmonitored || !unmonitored[i]);
    };
    auto remaining = [&] {
        int n = 0;
        for (std::size_t i = 0; i < all.size(); ++i) n += admitted(i) ? 1 : 0;
        return n;
    };
    while (remaining() < target) {
        if (threshold >= max_blocking) {
            // RSRP no longer excludes anything; fall back to unsensed slots.
            admit_unmonitored = true;
            break;
        }
        threshold += 3.0;
    }

    struct Ranked {
        double rssi;
        std::size_t index;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!admitted(i)) continue;
        const int r = residue_of(all[i].subframe);
        double sum = 0.0;
        for (int k = 0; k < kSubchannelsPerBsm; ++k) {
            sum += db.average_rssi_mw(r, all[i].start_subchannel + k).value_or(0.0);
        }
        ranked.push_back({sum / kSubchannelsPerBsm, i});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.rssi < b.rssi; });

    std::vector<SlotCoord> out;
    out.reserve(static_cast<std::size_t>(target));
    for (int k = 0; k < target; ++k) out.push_back(all[ranked[static_cast<std::size_t>(k)].index]);
    return out;
}

SlotCoord select_grant(const std::vector<SlotCoord>& candidates, SchedulerRandom& rng) {
    if (candidates.empty()) throw std::invalid_argument("select_grant: empty candidate list");
    const int k = rng.uniform_int(0, static_cast<int>(candidates.size()) - 1);
    return candidates[static_cast<std::size_t>(k)];
}

std::optional<SlotCoord> select_harq_slot(const std::vector<SlotCoord>& candidates, const SlotCoord& initial,
                                          SchedulerRandom& rng) {
    std::vector<SlotCoord> eligible;
    for (const auto& c : candidates) {
        const Subframe gap = c.subframe > initial.subframe ? c.subframe - initial.subframe : initial.subframe - c.subframe;
        if (gap != 0 && gap <= kHarqMaxGap) eligible.push_back(c);
    }
    if (eligible.empty()) return std::nullopt;
    return select_grant(eligible, rng);
}

SchedulerState SchedulerState::initial(const SchedulerConfig& config, SchedulerRandom& rng) {
    SchedulerState s;
    s.cs = rng.uniform_int(config.cs_range.lo, config.cs_range.hi);
    if (config.co_range) s.co = rng.uniform_int(config.co_range->lo, config.co_range->hi);
    return s;
}

Opportunity on_transmission_opportunity(SchedulerState& state, const SchedulerConfig& config,
                                        const SelectionWindow& window, CandidateSource& source,
                                        SchedulerRandom& rng) {
    if (state.one_shot_active) {
        state.current = state.saved_sps;
        state.saved_sps.reset();
        state.one_shot_active = false;
    }

    std::optional<std::vector<SlotCoord>> cached;
    auto fresh_grant = [&](GrantKind kind) {
        if (!cached) cached = source.candidates();
        const SlotCoord initial = select_grant(*cached, rng);
        Grant g;
        g.kind = kind;
        g.slot = {initial.subframe - window.n(), initial.start_subchannel};
        if (config.harq_enabled) {
            if (auto h = select_harq_slot(*cached, initial, rng)) {
                g.harq_slot = SlotCoord{h->subframe - window.n(), h->start_subchannel};
            }
        }
        return g;
    };
    auto draw_cs = [&] { return rng.uniform_int(config.cs_range.lo, config.cs_range.hi); };
    auto draw_co = [&] { return rng.uniform_int(config.co_range->lo, config.co_range->hi); };

    Decision decision = Decision::use_current_sps;
    if (!state.current) {
        state.current = fresh_grant(GrantKind::sps);
        decision = Decision::reselect_sps;
    }

    if (!config.co_range) {
        if (state.cs > 0) {
            --state.cs;
        } else {
            if (rng.uniform01() < config.p_reselect()) {
                state.current = fresh_grant(GrantKind::sps);
                decision = Decision::reselect_sps;
            }
            state.cs = draw_cs() - 1;
        }
        return {decision, *state.current};
    }

    if (state.cs > 0 && state.co > 0) {
        --state.cs;
        --state.co;
        return {decision, *state.current};
    }

    if (state.cs == 0 && state.co > 0) {
        const bool reselect = rng.uniform01() < config.p_reselect();
        state.cs = draw_cs() - 1;
        if (reselect) {
            state.co = draw_co() - 1;
            state.current = fresh_grant(GrantKind::sps);
            decision = Decision::reselect_sps;
        } else {
            --state.co;
        }
        return {decision, *state.current};
    }

    if (state.cs > 0) {  // co == 0: one-shot for this opportunity only
        state.co = draw_co() - 1;
        --state.cs;
        const Grant one_shot = fresh_grant(GrantKind::one_shot);
        state.saved_sps = state.current;
        state.one_shot_active = true;
        return {Decision::one_shot, one_shot};
    }

    // Both counters expired.
    const bool reselect = rng.uniform01() < config.p_reselect();
    state.cs = draw_cs() - 1;
    state.co = draw_co() - 1;
    if (reselect) {
        state.current = fresh_grant(GrantKind::sps);
        return {Decision::reselect_sps, *state.current};
    }
    const Grant one_shot = fresh_grant(GrantKind::one_shot);
    state.saved_sps = state.current;
    state.one_shot_active = true;
    return {Decision::one_shot, one_shot};
}

Opportunity on_transmission_opportunity(SchedulerState& state, const SchedulerConfig& config,
                                        const SensingDatabase& db, const SelectionWindow& window,
                                        const PoolConfig& pool, SchedulerRandom& rng) {
    SensingCandidates source(db, window, pool, config.rsrp_threshold_dbm);
    return on_transmission_opportunity(state, config, window, source, rng);
}

}  // namespace cv2x
