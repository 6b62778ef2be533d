#include "cv2x/congestion_control.hpp"

#include <cmath>
#include <stdexcept>

namespace cv2x {

void CongestionConfig::validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("congestion.lambda must lie in (0, 1]");
    if (!(b_coeff > 0.0)) throw std::invalid_argument("congestion.b_coeff must be positive");
    if (!(i_max_ms >= kBaseIntervalMs)) throw std::invalid_argument("congestion.i_max_ms must be >= 100");
    if (!(range_m > 0.0)) throw std::invalid_argument("congestion.range_m must be positive");
    if (w_t_ms <= 0 || w_k_ms <= 0) throw std::invalid_argument("congestion windows must be positive");
}

void register_reception(DensityState& state, const CongestionConfig& config, VehicleId tx, double distance_m,
                        Subframe time_ms) {
    if (distance_m > config.range_m) return;
    auto [it, inserted] = state.neighbor_last_seen.try_emplace(tx, time_ms);
    if (!inserted && it->second < time_ms) it->second = time_ms;
}

int count_neighbors(const DensityState& state, const CongestionConfig& config, Subframe t) {
    int n = 0;
    for (const auto& [id, seen] : state.neighbor_last_seen) {
        if (seen <= t && t - seen < config.w_t_ms) ++n;
    }
    return n;
}

double update_smoothed(DensityState& state, const CongestionConfig& config, Subframe t) {
    std::erase_if(state.neighbor_last_seen, [&](const auto& kv) { return t - kv.second >= config.w_t_ms; });
    state.n_current = count_neighbors(state, config, t);
    state.n_smoothed = config.lambda * state.n_current + (1.0 - config.lambda) * state.n_smoothed;
    state.interval_ms = config.enabled ? bsm_interval_ms(state.n_smoothed, config) : kBaseIntervalMs;
    return state.n_smoothed;
}

double bsm_interval_ms(double n_s, const CongestionConfig& config) {
    if (n_s < config.b_coeff) return kBaseIntervalMs;
    if (n_s < config.i_max_ms / kBaseIntervalMs * config.b_coeff) return kBaseIntervalMs * n_s / config.b_coeff;
    return config.i_max_ms;
}

bool should_generate(DensityState& state, Subframe time_ms) {
    if (!state.last_generation_ms) {
        if (time_ms < state.first_generation) return false;
        state.last_generation_ms = static_cast<double>(time_ms);
        return true;
    }
    const double due = *state.last_generation_ms + state.interval_ms;
    const auto due_subframe = static_cast<Subframe>(std::llround(due));
    if (time_ms < due_subframe) return false;
    // A shrinking interval can leave the due time in the past; restart from now.
    state.last_generation_ms = time_ms > due_subframe ? static_cast<double>(time_ms) : due;
    return true;
}

}  // namespace cv2x
