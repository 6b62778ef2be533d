#include "cv2x/sensing.hpp"

#include <stdexcept>
#include <string>

namespace cv2x {

namespace {
int residue_of(Subframe t) { return static_cast<int>(((t % kSensingPeriodMs) + kSensingPeriodMs) % kSensingPeriodMs); }
}  // namespace

SensingDatabase::SensingDatabase(int subchannels, int history_len)
    : subchannels_(subchannels),
      history_len_(history_len),
      rssi_(static_cast<std::size_t>(history_len) * static_cast<std::size_t>(subchannels), 0.0f),
      own_(static_cast<std::size_t>(history_len), 0),
      residue_sum_(static_cast<std::size_t>(kSensingPeriodMs) * static_cast<std::size_t>(subchannels), 0.0),
      residue_count_(kSensingPeriodMs, 0),
      dirty_(kSensingPeriodMs, 0) {
    if (subchannels < 2) throw std::invalid_argument("SensingDatabase: need at least 2 sub-channels");
    if (history_len < kSensingPeriodMs) throw std::invalid_argument("SensingDatabase: history shorter than 100");
}

std::size_t SensingDatabase::row(Subframe t) const {
    return static_cast<std::size_t>(((t % history_len_) + history_len_) % history_len_);
}

int SensingDatabase::depth() const {
    if (!latest_) return 0;
    return static_cast<int>(std::min<Subframe>(*latest_ - first_ + 1, history_len_));
}

bool SensingDatabase::holds(Subframe t) const {
    if (!latest_) return false;
    return t <= *latest_ && t > *latest_ - history_len_ && t >= first_;
}

bool SensingDatabase::monitored(Subframe t) const {
    if (!holds(t)) throw std::out_of_range("SensingDatabase: sub-frame not held");
    return own_[row(t)] == 0;
}

double SensingDatabase::rssi_mw(Subframe t, int subchannel) const {
    if (!holds(t)) throw std::out_of_range("SensingDatabase: sub-frame not held");
    return rssi_[row(t) * static_cast<std::size_t>(subchannels_) + static_cast<std::size_t>(subchannel)];
}

void SensingDatabase::record_subframe(Subframe t, std::span<const double> rssi_mw,
                                      std::span<const SciObservation> scis, bool own_tx) {
    if (latest_ && t != *latest_ + 1) {
        throw std::logic_error("SensingDatabase: sub-frame " + std::to_string(t) + " recorded after " +
                               std::to_string(*latest_));
    }
    if (!own_tx && rssi_mw.size() != static_cast<std::size_t>(subchannels_)) {
        throw std::invalid_argument("SensingDatabase: one S-RSSI value per sub-channel required");
    }
    if (!latest_) first_ = t;
    const Subframe evicted = t - history_len_;
    latest_ = t;

    const std::size_t r = row(t);
    own_[r] = own_tx ? 1 : 0;
    float* dst = &rssi_[r * static_cast<std::size_t>(subchannels_)];
    for (int s = 0; s < subchannels_; ++s) dst[s] = own_tx ? 0.0f : static_cast<float>(rssi_mw[static_cast<std::size_t>(s)]);

    dirty_[static_cast<std::size_t>(residue_of(t))] = 1;
    if (evicted >= first_) dirty_[static_cast<std::size_t>(residue_of(evicted))] = 1;

    while (!scis_.empty() && scis_.front().heard_at <= evicted) scis_.pop_front();
    if (!own_tx) {
        for (const auto& sci : scis) scis_.push_back({t, sci});
    }
}

void SensingDatabase::refresh_residue(int residue) const {
    dirty_[static_cast<std::size_t>(residue)] = 0;
    double* sums = &residue_sum_[static_cast<std::size_t>(residue) * static_cast<std::size_t>(subchannels_)];
    for (int s = 0; s < subchannels_; ++s) sums[s] = 0.0;
    int count = 0;
    const Subframe newest = *latest_;
    Subframe h = newest - ((residue_of(newest) - residue + kSensingPeriodMs) % kSensingPeriodMs);
    for (; holds(h); h -= kSensingPeriodMs) {
        const std::size_t r = row(h);
        if (own_[r]) continue;
        ++count;
        const float* src = &rssi_[r * static_cast<std::size_t>(subchannels_)];
        for (int s = 0; s < subchannels_; ++s) sums[s] += src[s];
    }
    residue_count_[static_cast<std::size_t>(residue)] = count;
}

int SensingDatabase::residue_samples(int residue) const {
    if (dirty_[static_cast<std::size_t>(residue)]) refresh_residue(residue);
    return residue_count_[static_cast<std::size_t>(residue)];
}

std::optional<double> SensingDatabase::average_rssi_mw(int residue, int subchannel) const {
    if (dirty_[static_cast<std::size_t>(residue)]) refresh_residue(residue);
    const int n = residue_count_[static_cast<std::size_t>(residue)];
    if (n == 0) return std::nullopt;
    return residue_sum_[static_cast<std::size_t>(residue) * static_cast<std::size_t>(subchannels_) +
                        static_cast<std::size_t>(subchannel)] /
           n;
}

std::vector<Subframe> SensingDatabase::unmonitored_subframes() const {
    std::vector<Subframe> out;
    if (!latest_) return out;
    for (Subframe t = *latest_ - depth() + 1; t <= *latest_; ++t) {
        if (own_[row(t)]) out.push_back(t);
    }
    return out;
}

}  // namespace cv2x
