#include "cv2x/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cv2x {

double linear_to_db(double linear) {
    if (linear <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(linear);
}

void PathLossParams::validate() const {
    if (!std::isfinite(pl0_db)) throw std::invalid_argument("path_loss.pl0_db must be finite");
    if (!(d0_m > 0.0)) throw std::invalid_argument("path_loss.d0_m must be positive");
    if (!(gamma1 > 0.0)) throw std::invalid_argument("path_loss.gamma1 must be positive");
    if (!(gamma2 > 0.0)) throw std::invalid_argument("path_loss.gamma2 must be positive");
    if (kind == PathLossKind::dual_slope && !(breakpoint_m >= d0_m)) {
        throw std::invalid_argument("path_loss.breakpoint_m must not be below d0_m");
    }
}

DualSlopePathLoss::DualSlopePathLoss(PathLossParams params) : p_(params) { p_.validate(); }

double DualSlopePathLoss::loss_db(double distance_m) const {
    const double d = std::max(distance_m, p_.d0_m);
    if (p_.kind == PathLossKind::log_distance || d <= p_.breakpoint_m) {
        return p_.pl0_db + 10.0 * p_.gamma1 * std::log10(d / p_.d0_m);
    }
    const double at_bp = p_.pl0_db + 10.0 * p_.gamma1 * std::log10(p_.breakpoint_m / p_.d0_m);
    return at_bp + 10.0 * p_.gamma2 * std::log10(d / p_.breakpoint_m);
}

std::unique_ptr<PathLossModel> make_path_loss(const PathLossParams& params) {
    return std::make_unique<DualSlopePathLoss>(params);
}

double IbeMask::factor(int offset) const {
    if (offset == 0) return 1.0;
    const auto k = static_cast<std::size_t>(std::abs(offset));
    if (k > attenuation_db.size()) return 0.0;
    const double att = attenuation_db[k - 1];
    if (std::isinf(att)) return 0.0;
    return db_to_linear(-att);
}

double BlerTable::bler(double sinr_db) const {
    if (points.empty()) return 0.0;
    if (sinr_db <= points.front().first) return points.front().second;
    if (sinr_db >= points.back().first) return points.back().second;
    auto hi = std::upper_bound(points.begin(), points.end(), sinr_db,
                               [](double x, const auto& p) { return x < p.first; });
    auto lo = hi - 1;
    const double w = (sinr_db - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

void BlerTable::validate(const char* name) const {
    if (points.empty()) throw std::invalid_argument(std::string(name) + " must have at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].second < 0.0 || points[i].second > 1.0) {
            throw std::invalid_argument(std::string(name) + " BLER values must lie in [0, 1]");
        }
        if (i > 0 && !(points[i].first > points[i - 1].first)) {
            throw std::invalid_argument(std::string(name) + " SINR points must be strictly increasing");
        }
    }
}

void ChannelConfig::validate() const {
    for (double v : {tx_power_dbm, noise_figure_db, thermal_noise_dbm_per_hz, pscch_boost_db,
                     pssch_sinr_threshold_db, pscch_sinr_threshold_db}) {
        if (!std::isfinite(v)) throw std::invalid_argument("channel power settings must be finite");
    }
    if (n_tx_antennas != 1) throw std::invalid_argument("channel.n_tx_antennas must be 1");
    if (n_rx_antennas < 1 || n_rx_antennas > kMaxRxAntennas) {
        throw std::invalid_argument("channel.n_rx_antennas must lie in [1, 4]");
    }
    path_loss.validate();
    for (double a : ibe.attenuation_db) {
        if (std::isnan(a) || a < 0.0) throw std::invalid_argument("channel.ibe_mask_db entries must be >= 0");
    }
    if (decode_mode == DecodeMode::table) {
        pssch_bler.validate("channel.bler.pssch");
        pscch_bler.validate("channel.bler.pscch");
    }
}

double nakagami_shape(double distance_m) {
    if (distance_m < 50.0) return 3.0;
    if (distance_m < 150.0) return 1.5;
    return 1.0;
}

double draw_fading_gain(const FadingParams& params, Rng& rng) {
    std::gamma_distribution<double> gamma(params.m, params.omega / params.m);
    return gamma(rng);
}

FadingSampler::FadingSampler() : near_(3.0, 1.0 / 3.0), mid_(1.5, 1.0 / 1.5), far_(1.0) {}

double FadingSampler::unit_gain(double distance_m, Rng& rng) {
    if (distance_m < 50.0) return near_(rng);
    if (distance_m < 150.0) return mid_(rng);
    return far_(rng);
}

double received_power_dbm(double tx_power_dbm, double distance_m, double fading_gain, double boost_db,
                          const PathLossModel& path_loss) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("received_power_dbm: distance must be positive");
    return tx_power_dbm + boost_db - path_loss.loss_db(distance_m) + 10.0 * std::log10(fading_gain);
}

double noise_power_dbm(int prbs, const ChannelConfig& config) {
    if (prbs < 1) throw std::invalid_argument("noise_power_dbm: prbs must be >= 1");
    return config.thermal_noise_dbm_per_hz + 10.0 * std::log10(static_cast<double>(prbs) * kPrbBandwidthHz) +
           config.noise_figure_db;
}

double post_mrc_sinr_db(std::span<const double> signal, std::span<const Interferer> interferers,
                        const IbeMask& ibe, double noise_linear) {
    if (signal.empty() || signal.size() > static_cast<std::size_t>(kMaxRxAntennas)) {
        throw std::invalid_argument("post_mrc_sinr_db: antenna count out of range");
    }
    if (!(noise_linear > 0.0)) throw std::invalid_argument("post_mrc_sinr_db: noise must be positive");
    double combined = 0.0;
    for (std::size_t a = 0; a < signal.size(); ++a) {
        double denom = noise_linear;
        for (const auto& i : interferers) denom += i.power[a] * ibe.factor(i.subchannel_offset);
        combined += signal[a] / denom;
    }
    return linear_to_db(combined);
}

bool decode(double sinr_db, PhyChannel channel, const ChannelConfig& config, Rng& rng) {
    const BlerTable* table = nullptr;
    double threshold = 0.0;
    switch (channel) {
        case PhyChannel::pssch:
            threshold = config.pssch_sinr_threshold_db;
            table = &config.pssch_bler;
            break;
        case PhyChannel::pscch:
            threshold = config.pscch_sinr_threshold_db;
            table = &config.pscch_bler;
            break;
        default:
            throw std::invalid_argument("decode: unknown channel kind");
    }
    if (config.decode_mode == DecodeMode::step) return sinr_db >= threshold;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) >= table->bler(sinr_db);
}

}  // namespace cv2x
