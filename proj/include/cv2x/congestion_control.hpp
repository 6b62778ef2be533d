#pragma once

#include <optional>
#include <unordered_map>

#include "cv2x/resource_grid.hpp"

namespace cv2x {

/// Application-layer rate control: vehicles count unique neighbours heard in
/// the last second, smooth the count every 100 ms, and stretch the BSM
/// generation interval once the smoothed density passes B.
struct CongestionConfig {
    bool enabled = true;
    double range_m = 100.0;
    double lambda = 0.05;
    double b_coeff = 25.0;
    double i_max_ms = 600.0;
    int w_t_ms = 1000;
    int w_k_ms = 100;

    void validate() const;
};

inline constexpr double kBaseIntervalMs = 100.0;

struct DensityState {
    int n_current = 0;
    double n_smoothed = 0.0;
    double interval_ms = kBaseIntervalMs;
    std::unordered_map<VehicleId, Subframe> neighbor_last_seen;

    /// Sub-frame of the first BSM; later generations follow the interval.
    Subframe first_generation = 0;
    /// Real-valued time of the last generation.
    std::optional<double> last_generation_ms;
};

void register_reception(DensityState& state, const CongestionConfig& config, VehicleId tx, double distance_m,
                        Subframe time_ms);

/// Unique neighbours heard in (t - w_t, t].
int count_neighbors(const DensityState& state, const CongestionConfig& config, Subframe t);

/// N_s(k) = lambda N_c(t) + (1 - lambda) N_s(k-1); also refreshes
/// n_current, drops expired sightings and recomputes interval_ms.
double update_smoothed(DensityState& state, const CongestionConfig& config, Subframe t);

/// 100 below B, 100 n_s / B up to (I_max / 100) B, I_max beyond.
double bsm_interval_ms(double n_s, const CongestionConfig& config);

/// True when a BSM is due at sub-frame t; stamps the generation. Due times
/// accumulate in real milliseconds and are rounded to the nearest sub-frame.
bool should_generate(DensityState& state, Subframe time_ms);

}  // namespace cv2x
