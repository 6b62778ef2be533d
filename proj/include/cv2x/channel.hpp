#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cv2x/resource_grid.hpp"

namespace cv2x {

using Rng = std::mt19937_64;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear);

// ---------------------------------------------------------------------------
// Path loss

enum class PathLossKind { dual_slope, log_distance };

/// Dual-slope log-distance model:
///   PL(d) = pl0 + 10 g1 log10(d / d0)                        for d <= d_bp
///   PL(d) = PL(d_bp) + 10 g2 log10(d / d_bp)                 for d >  d_bp
/// log_distance ignores the breakpoint and uses g1 everywhere.
/// Distances below d0 are clamped to d0.
struct PathLossParams {
    PathLossKind kind = PathLossKind::dual_slope;
    double pl0_db = 47.86;  // free space at 1 m, 5.9 GHz
    double d0_m = 1.0;
    double gamma1 = 2.0;
    double gamma2 = 4.0;
    double breakpoint_m = 100.0;

    void validate() const;
};

class PathLossModel {
public:
    virtual ~PathLossModel() = default;
    virtual double loss_db(double distance_m) const = 0;
};

class DualSlopePathLoss final : public PathLossModel {
public:
    explicit DualSlopePathLoss(PathLossParams params);
    double loss_db(double distance_m) const override;

private:
    PathLossParams p_;
};

std::unique_ptr<PathLossModel> make_path_loss(const PathLossParams& params);

// ---------------------------------------------------------------------------
// In-band emission and link-level tables

/// Attenuation applied to interference leaking from a sub-channel at a given
/// offset. Offset 0 (co-channel) is never attenuated. Entry k-1 holds the
/// attenuation for offset k; offsets past the end are fully suppressed, so an
/// empty mask disables in-band emission.
struct IbeMask {
    std::vector<double> attenuation_db;

    bool enabled() const { return !attenuation_db.empty(); }
    /// Linear power factor for the offset; 0 when suppressed.
    double factor(int offset) const;
};

/// Piecewise-linear BLER versus SINR (dB), clamped at both ends.
struct BlerTable {
    std::vector<std::pair<double, double>> points;

    double bler(double sinr_db) const;
    void validate(const char* name) const;
};

enum class DecodeMode { step, table };
enum class PhyChannel { pssch, pscch };

struct ChannelConfig {
    double tx_power_dbm = 20.0;
    double noise_figure_db = 6.0;
    double thermal_noise_dbm_per_hz = -174.0;
    double pscch_boost_db = 3.0;
    int n_tx_antennas = 1;
    int n_rx_antennas = 2;
    /// Off replaces every fading draw with unit gain; for deterministic tests.
    bool fading = true;
    double pssch_sinr_threshold_db = 3.7;
    double pscch_sinr_threshold_db = -1.3;
    PathLossParams path_loss;
    IbeMask ibe;
    DecodeMode decode_mode = DecodeMode::step;
    BlerTable pssch_bler;
    BlerTable pscch_bler;

    void validate() const;
};

inline constexpr int kMaxRxAntennas = 4;

// ---------------------------------------------------------------------------
// Fading

struct FadingParams {
    double m = 1.0;
    double omega = 1.0;
};

/// Nakagami shape for a V2V distance: 3 below 50 m, 1.5 below 150 m, 1 beyond.
double nakagami_shape(double distance_m);

/// Power gain of a Nakagami-m channel: Gamma(k = m, theta = omega / m).
double draw_fading_gain(const FadingParams& params, Rng& rng);

/// Pre-built Gamma samplers for the three shapes with unit mean. Reuses the
/// distribution objects across draws in the simulation loop.
class FadingSampler {
public:
    FadingSampler();
    /// Unit-mean power gain for the shape associated with the distance.
    double unit_gain(double distance_m, Rng& rng);

private:
    std::gamma_distribution<double> near_;
    std::gamma_distribution<double> mid_;
    std::exponential_distribution<double> far_;  // m = 1
};

// ---------------------------------------------------------------------------
// Link budget

/// tx + boost - PL(d) + 10 log10(gain). Throws for d <= 0.
double received_power_dbm(double tx_power_dbm, double distance_m, double fading_gain, double boost_db,
                          const PathLossModel& path_loss);

/// Thermal noise plus noise figure over a number of PRBs.
double noise_power_dbm(int prbs, const ChannelConfig& config);

struct Interferer {
    std::array<double, kMaxRxAntennas> power{};  // linear, per receive antenna
    int subchannel_offset = 0;
};

/// Maximal-ratio combined SINR in dB. Each branch sees its own interference
/// plus noise; branch SINRs add.
double post_mrc_sinr_db(std::span<const double> signal, std::span<const Interferer> interferers,
                        const IbeMask& ibe, double noise_linear);

/// Step mode: success iff SINR reaches the channel's threshold. Table mode:
/// success with probability 1 - BLER(sinr).
bool decode(double sinr_db, PhyChannel channel, const ChannelConfig& config, Rng& rng);

}  // namespace cv2x
