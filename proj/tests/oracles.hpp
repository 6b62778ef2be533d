// Independent reference implementations shared by the unit tests and the
// acceptance binary. Written directly from the definitions, favouring
// obviousness over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "cv2x/metrics.hpp"
#include "cv2x/resource_grid.hpp"
#include "cv2x/sensing.hpp"
#include "cv2x/sps_scheduler.hpp"

namespace oracle {

using namespace cv2x;

inline int mod100(Subframe t) { return static_cast<int>(((t % 100) + 100) % 100); }

/// Brute-force candidate list: every rule evaluated per candidate.
inline std::vector<SlotCoord> candidate_list(const SensingDatabase& db, const SelectionWindow& w, const PoolConfig& pool,
                                             double threshold_dbm) {
    std::vector<SlotCoord> all;
    for (Subframe sf = w.n() + w.t1(); sf <= w.n() + w.t2(); ++sf) {
        for (int c = 0; c + 1 < pool.subchannels_per_subframe; ++c) all.push_back({sf, c});
    }
    const std::size_t target = (all.size() * 20 + 99) / 100;

    std::vector<Subframe> held;
    if (db.latest()) {
        for (Subframe t = *db.latest(); db.holds(t); --t) held.push_back(t);  // newest first
    }

    // RSRP of the strongest reservation overlapping a candidate, if any.
    auto blocking_rsrp = [&](const SlotCoord& c) -> std::optional<double> {
        std::optional<double> best;
        std::map<VehicleId, std::vector<SciRecord>> by_tx;
        for (const auto& r : db.scis()) by_tx[r.sci.tx].push_back(r);
        for (const auto& [tx, recs] : by_tx) {
            double sum = 0;
            for (const auto& r : recs) sum += r.sci.rsrp_mw;
            const double rsrp = 10 * std::log10(sum / static_cast<double>(recs.size()));
            const SciRecord* latest_reserving = nullptr;
            for (const auto& r : recs) {
                if (r.sci.reserves) latest_reserving = &r;
            }
            if (!latest_reserving) continue;
            const auto& r = *latest_reserving;
            const bool same_time = c.subframe > r.heard_at && (c.subframe - r.heard_at) % r.sci.period_ms == 0;
            const bool overlaps = std::abs(c.start_subchannel - r.sci.start_subchannel) <= 1;
            if (same_time && overlaps && (!best || rsrp > *best)) best = rsrp;
        }
        return best;
    };
    auto unmonitored = [&](const SlotCoord& c) {
        for (Subframe h : held) {
            if (!db.monitored(h) && mod100(h) == mod100(c.subframe)) return true;
        }
        return false;
    };

    std::vector<std::optional<double>> block(all.size());
    std::vector<bool> unmon(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        block[i] = blocking_rsrp(all[i]);
        unmon[i] = unmonitored(all[i]);
    }
    double th = threshold_dbm;
    bool with_unmonitored = false;
    auto survivors = [&] {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const bool rsrp_ok = !block[i] || *block[i] <= th;
            if (rsrp_ok && (with_unmonitored || !unmon[i])) s.push_back(i);
        }
        return s;
    };
    for (;;) {
        if (survivors().size() >= target) break;
        bool any_rsrp_excluded = false;
        for (std::size_t i = 0; i < all.size(); ++i) any_rsrp_excluded |= block[i] && *block[i] > th;
        if (!any_rsrp_excluded) {
            with_unmonitored = true;
            break;
        }
        th += 3.0;
    }

    auto avg_rssi = [&](int residue, int sub) {
        double sum = 0;
        int n = 0;
        for (Subframe h : held) {
            if (mod100(h) != residue || !db.monitored(h)) continue;
            sum += static_cast<double>(static_cast<float>(db.rssi_mw(h, sub)));
            ++n;
        }
        return n ? sum / n : 0.0;
    };
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i : survivors()) {
        const int r = mod100(all[i].subframe);
        ranked.push_back({(avg_rssi(r, all[i].start_subchannel) + avg_rssi(r, all[i].start_subchannel + 1)) / 2, i});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<SlotCoord> out;
    for (std::size_t k = 0; k < target; ++k) out.push_back(all[ranked[k].second]);
    return out;
}

/// Random sensing database over a small pool, with own-tx sub-frames and
/// SCIs of varying strength and period.
struct RandomDb {
    SensingDatabase db;
    SelectionWindow window;
    PoolConfig pool;
};

inline RandomDb random_db(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> sub_d(3, 5);
    PoolConfig pool;
    pool.subchannels_per_subframe = sub_d(rng);
    // At most 20 slots: window length * pair positions <= 20.
    const int positions = pool.pair_positions();
    const int max_len = 20 / positions;
    const int len = std::uniform_int_distribution<int>(1, max_len)(rng);
    const int t1 = std::uniform_int_distribution<int>(0, 4)(rng);

    const int history = 100 * std::uniform_int_distribution<int>(1, 3)(rng);
    SensingDatabase db(pool.subchannels_per_subframe, history);
    const Subframe start = std::uniform_int_distribution<int>(0, 500)(rng);
    const int fill = std::uniform_int_distribution<int>(0, history + 150)(rng);
    std::uniform_real_distribution<double> rssi_dbm(-110, -80);
    std::uniform_real_distribution<double> rsrp_dbm(-140, -90);
    std::bernoulli_distribution own(0.02), sci_here(0.15), reserves(0.85);
    std::uniform_int_distribution<int> tx_d(0, 6), period_d(0, 3);
    const int periods[] = {100, 100, 200, 300};
    std::vector<double> row(static_cast<std::size_t>(pool.subchannels_per_subframe));
    for (int k = 0; k < fill; ++k) {
        const Subframe t = start + k;
        for (auto& v : row) v = std::pow(10.0, rssi_dbm(rng) / 10);
        std::vector<SciObservation> scis;
        while (sci_here(rng) && scis.size() < 3) {
            SciObservation s;
            s.tx = tx_d(rng);
            s.start_subchannel = std::uniform_int_distribution<int>(0, positions - 1)(rng);
            s.rsrp_mw = std::pow(10.0, rsrp_dbm(rng) / 10);
            s.reserves = reserves(rng);
            s.period_ms = periods[period_d(rng)];
            scis.push_back(s);
        }
        db.record_subframe(t, row, scis, own(rng));
    }
    const Subframe n = start + fill + std::uniform_int_distribution<int>(0, 30)(rng);
    return {std::move(db), SelectionWindow(n, t1, t1 + len - 1, 100), pool};
}

// ---------------------------------------------------------------------------
// Metrics

struct Rx {
    int pair = 0;
    Subframe t_rx = 0;
    int eta = 0;
};

struct Tx {
    double distance_m = 0;
    bool received = false;
};

struct Trace {
    int pairs = 0;
    std::vector<std::size_t> pair_bin;
    std::vector<Rx> receptions;  // time order
    std::vector<Tx> bsms;
    StatsWindow window;
};

inline Trace random_trace(std::mt19937_64& rng, std::size_t bins) {
    Trace tr;
    tr.pairs = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int p = 0; p < tr.pairs; ++p) tr.pair_bin.push_back(std::uniform_int_distribution<std::size_t>(0, bins - 1)(rng));
    const Subframe horizon = std::uniform_int_distribution<int>(200, 3000)(rng);
    tr.window.start = std::uniform_int_distribution<Subframe>(0, horizon / 3)(rng);
    tr.window.end = std::uniform_int_distribution<Subframe>(tr.window.start + 1, horizon)(rng);
    std::bernoulli_distribution hit(std::uniform_real_distribution<double>(0.0, 0.1)(rng));
    std::uniform_int_distribution<int> eta_d(4, 90);
    for (Subframe t = 0; t < horizon; ++t) {
        for (int p = 0; p < tr.pairs; ++p) {
            if (hit(rng)) tr.receptions.push_back({p, t, eta_d(rng)});
        }
    }
    std::uniform_real_distribution<double> d(0.0, 30.0);
    std::bernoulli_distribution ok(0.7);
    const int bsms = std::uniform_int_distribution<int>(0, 400)(rng);
    for (int i = 0; i < bsms; ++i) tr.bsms.push_back({d(rng), ok(rng)});
    return tr;
}

struct Expected {
    std::vector<std::vector<std::int64_t>> ipg, ia;  // per bin, sorted
    std::vector<std::uint64_t> silent;
    std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> prr;  // metre -> (T, R)
};

/// Single pass over the trace; IA sampled at every millisecond of the window.
inline Expected recompute(const Trace& tr, std::size_t bins) {
    Expected e;
    e.ipg.resize(bins);
    e.ia.resize(bins);
    e.silent.assign(bins, 0);
    for (int p = 0; p < tr.pairs; ++p) {
        std::vector<Rx> mine;
        for (const auto& r : tr.receptions) {
            if (r.pair == p) mine.push_back(r);
        }
        const std::size_t b = tr.pair_bin[static_cast<std::size_t>(p)];
        if (mine.empty()) ++e.silent[b];
        for (std::size_t k = 1; k < mine.size(); ++k) {
            if (mine[k].t_rx >= tr.window.start && mine[k].t_rx < tr.window.end) {
                e.ipg[b].push_back(mine[k].t_rx - mine[k - 1].t_rx);
            }
        }
        for (Subframe t = tr.window.start; t < tr.window.end; ++t) {
            const Rx* last = nullptr;
            for (const auto& r : mine) {
                if (r.t_rx <= t) last = &r;
            }
            if (last) e.ia[b].push_back(t - last->t_rx + last->eta);
        }
    }
    for (auto& v : e.ipg) std::sort(v.begin(), v.end());
    for (auto& v : e.ia) std::sort(v.begin(), v.end());
    for (const auto& b : tr.bsms) {
        const auto m = static_cast<std::int64_t>(std::floor(b.distance_m + 0.5));
        auto& c = e.prr[m];
        ++c.first;
        if (b.received) ++c.second;
    }
    return e;
}

/// Feeds the trace through the streaming accumulators.
inline MetricsStore stream(const Trace& tr, std::size_t bins) {
    std::vector<double> centers;
    for (std::size_t b = 0; b < bins; ++b) centers.push_back(100.0 + 50.0 * static_cast<double>(b));
    MetricsStore store(centers, 25.0, 40);
    std::vector<PairState> state(static_cast<std::size_t>(tr.pairs));
    for (const auto& r : tr.receptions) {
        observe_reception(store, state[static_cast<std::size_t>(r.pair)], tr.pair_bin[static_cast<std::size_t>(r.pair)],
                          r.t_rx, r.eta, tr.window);
    }
    for (int p = 0; p < tr.pairs; ++p) {
        close_pair(store, state[static_cast<std::size_t>(p)], tr.pair_bin[static_cast<std::size_t>(p)], tr.window);
    }
    for (const auto& b : tr.bsms) {
        count_transmission(store, b.distance_m);
        if (b.received) count_reception(store, b.distance_m);
    }
    return store;
}

inline bool matches(const MetricsStore& s, const Expected& e) {
    for (std::size_t b = 0; b < e.ipg.size(); ++b) {
        if (s.ipg[b].samples() != e.ipg[b] || s.ia[b].samples() != e.ia[b]) return false;
        if (s.silent_pairs[b] != e.silent[b]) return false;
    }
    for (std::size_t m = 0; m < s.prr.size(); ++m) {
        auto it = e.prr.find(static_cast<std::int64_t>(m));
        const std::uint64_t t = it == e.prr.end() ? 0 : it->second.first;
        const std::uint64_t r = it == e.prr.end() ? 0 : it->second.second;
        if (s.prr[m].transmitted != t || s.prr[m].received != r) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// One-shot state machine truth table

/// Scripted randomness: the reselection draw, counter redraws keyed by
/// range, and candidate picks all come from fixed values.
class Script final : public SchedulerRandom {
public:
    Script(double u, int cs_redraw, int co_redraw, CounterRange cs, CounterRange co)
        : u_(u), cs_redraw_(cs_redraw), co_redraw_(co_redraw), cs_(cs), co_(co) {}
    double uniform01() override {
        ++u_calls;
        return u_;
    }
    int uniform_int(int lo, int hi) override {
        if (lo == cs_.lo && hi == cs_.hi) return cs_redraw_;
        if (lo == co_.lo && hi == co_.hi) return co_redraw_;
        return lo;  // candidate pick
    }
    int u_calls = 0;

private:
    double u_;
    int cs_redraw_, co_redraw_;
    CounterRange cs_, co_;
};

/// Each call hands out a distinct single-slot list so grants can be told apart.
class FreshSlots final : public CandidateSource {
public:
    explicit FreshSlots(int first_subchannel = 0) : next_(first_subchannel) {}
    std::vector<SlotCoord> candidates() override {
        ++calls;
        return {SlotCoord{10, next_++}};
    }
    int calls = 0;

private:
    int next_;
};

struct Outcome {
    Decision decision;
    int cs, co;
    bool fresh;      // transmits on a newly drawn grant
    GrantKind kind;  // of the transmitted grant
    bool one_shot_active;
    bool new_sps;    // the SPS grant carried forward changed
};

/// Transition rules written out case by case from the protocol description.
inline Outcome expected_transition(int cs, int co, bool reselect_draw, int cs_redraw, int co_redraw) {
    if (cs > 0 && co > 0) return {Decision::use_current_sps, cs - 1, co - 1, false, GrantKind::sps, false, false};
    if (cs == 0 && co > 0) {
        if (reselect_draw) return {Decision::reselect_sps, cs_redraw - 1, co_redraw - 1, true, GrantKind::sps, false, true};
        return {Decision::use_current_sps, cs_redraw - 1, co - 1, false, GrantKind::sps, false, false};
    }
    if (cs > 0 && co == 0) return {Decision::one_shot, cs - 1, co_redraw - 1, true, GrantKind::one_shot, true, false};
    if (reselect_draw) return {Decision::reselect_sps, cs_redraw - 1, co_redraw - 1, true, GrantKind::sps, false, true};
    return {Decision::one_shot, cs_redraw - 1, co_redraw - 1, true, GrantKind::one_shot, true, false};
}

}  // namespace oracle
