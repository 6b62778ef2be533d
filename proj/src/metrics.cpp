#include "cv2x/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cv2x/channel.hpp"

namespace cv2x {

// ---------------------------------------------------------------------------
// Histogram

void Histogram::grow(std::size_t size) {
    if (point_.size() < size) point_.resize(size, 0);
    if (diff_.size() < size + 1) diff_.resize(size + 1, 0);
}

void Histogram::add(std::int64_t value, std::uint64_t count) {
    if (value < 0) throw std::invalid_argument("Histogram: negative sample");
    grow(static_cast<std::size_t>(value) + 1);
    point_[static_cast<std::size_t>(value)] += count;
    total_ += count;
}

void Histogram::add_range(std::int64_t lo, std::int64_t hi) {
    if (lo < 0) throw std::invalid_argument("Histogram: negative sample");
    if (hi <= lo) return;
    grow(static_cast<std::size_t>(hi));
    diff_[static_cast<std::size_t>(lo)] += 1;
    diff_[static_cast<std::size_t>(hi)] -= 1;
    total_ += static_cast<std::uint64_t>(hi - lo);
}

void Histogram::merge(const Histogram& other) {
    grow(other.point_.size());
    for (std::size_t i = 0; i < other.point_.size(); ++i) point_[i] += other.point_[i];
    if (diff_.size() < other.diff_.size()) diff_.resize(other.diff_.size(), 0);
    for (std::size_t i = 0; i < other.diff_.size(); ++i) diff_[i] += other.diff_[i];
    total_ += other.total_;
}

std::vector<std::uint64_t> Histogram::counts() const {
    std::vector<std::uint64_t> out(point_);
    std::int64_t running = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        running += diff_[i];
        out[i] += static_cast<std::uint64_t>(running);
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return out;
}

std::vector<std::int64_t> Histogram::samples() const {
    std::vector<std::int64_t> out;
    out.reserve(total_);
    const auto c = counts();
    for (std::size_t v = 0; v < c.size(); ++v) out.insert(out.end(), c[v], static_cast<std::int64_t>(v));
    return out;
}

// ---------------------------------------------------------------------------
// CCDF, tail statistic, percentiles

Ccdf Ccdf::from_histogram(const Histogram& h) {
    if (h.empty()) throw std::invalid_argument("ccdf: no samples");
    const auto c = h.counts();
    const auto n = static_cast<double>(h.total());
    Ccdf out;
    out.fractions_.resize(c.size());
    std::uint64_t above = h.total();
    for (std::size_t i = 0; i < c.size(); ++i) {
        above -= c[i];
        out.fractions_[i] = static_cast<double>(above) / n;
    }
    return out;
}

Ccdf Ccdf::from_fractions(std::vector<double> fractions) {
    Ccdf out;
    out.fractions_ = std::move(fractions);
    return out;
}

double Ccdf::at(std::int64_t i) const {
    if (i < 0) return 1.0;
    if (i >= static_cast<std::int64_t>(fractions_.size())) return 0.0;
    return fractions_[static_cast<std::size_t>(i)];
}

Ccdf ccdf(std::span<const std::int64_t> samples) {
    if (samples.empty()) throw std::invalid_argument("ccdf: no samples");
    Histogram h;
    for (auto s : samples) h.add(s);
    return Ccdf::from_histogram(h);
}

TailImprovement tail_improvement(const Ccdf& base, const Ccdf& variant, std::int64_t lo_ms, std::int64_t hi_ms) {
    TailImprovement out;
    double sum = 0.0;
    for (std::int64_t i = lo_ms; i <= hi_ms; ++i) {
        const double fb = base.at(i);
        if (fb == 0.0) {
            ++out.points_excluded;
            continue;
        }
        sum += (fb - variant.at(i)) / fb;
        ++out.points_used;
    }
    if (out.points_used == 0) throw std::domain_error("tail_improvement: baseline CCDF is zero on the whole range");
    out.mean = sum / out.points_used;
    return out;
}

namespace {
std::uint64_t nearest_rank(std::uint64_t n, int permille) {
    if (permille <= 0 || permille > 1000) throw std::invalid_argument("percentile: permille out of range");
    const std::uint64_t rank = (static_cast<std::uint64_t>(permille) * n + 999) / 1000;
    return std::max<std::uint64_t>(rank, 1);
}
}  // namespace

std::int64_t percentile_permille(std::span<const std::int64_t> samples, int permille) {
    if (samples.empty()) throw std::invalid_argument("percentile: no samples");
    std::vector<std::int64_t> sorted(samples.begin(), samples.end());
    const auto rank = nearest_rank(sorted.size(), permille);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::int64_t percentile_permille(const Histogram& h, int permille) {
    if (h.empty()) throw std::invalid_argument("percentile: no samples");
    const auto rank = nearest_rank(h.total(), permille);
    const auto c = h.counts();
    std::uint64_t seen = 0;
    for (std::size_t v = 0; v < c.size(); ++v) {
        seen += c[v];
        if (seen >= rank) return static_cast<std::int64_t>(v);
    }
    return static_cast<std::int64_t>(c.size()) - 1;
}

// ---------------------------------------------------------------------------
// Store

MetricsStore::MetricsStore(std::vector<double> centers, double half_width, int prr_max_distance_m)
    : bin_centers_m(std::move(centers)),
      bin_half_width_m(half_width),
      ipg(bin_centers_m.size()),
      ia(bin_centers_m.size()),
      silent_pairs(bin_centers_m.size(), 0),
      prr(static_cast<std::size_t>(prr_max_distance_m) + 1) {}

std::optional<std::size_t> MetricsStore::bin_index(double distance_m) const {
    for (std::size_t i = 0; i < bin_centers_m.size(); ++i) {
        if (bin(i).contains(distance_m)) return i;
    }
    return std::nullopt;
}

void MetricsStore::merge(const MetricsStore& other) {
    if (bin_centers_m != other.bin_centers_m || bin_half_width_m != other.bin_half_width_m ||
        prr.size() != other.prr.size()) {
        throw std::invalid_argument("MetricsStore::merge: layouts differ");
    }
    for (std::size_t i = 0; i < ipg.size(); ++i) {
        ipg[i].merge(other.ipg[i]);
        ia[i].merge(other.ia[i]);
        silent_pairs[i] += other.silent_pairs[i];
    }
    for (std::size_t i = 0; i < prr.size(); ++i) {
        prr[i].transmitted += other.prr[i].transmitted;
        prr[i].received += other.prr[i].received;
    }
    for (const auto& [id, acc] : other.cbr) {
        auto& mine = cbr[id];
        mine.position_m = acc.position_m;
        mine.sum += acc.sum;
        mine.samples += acc.samples;
    }
}

std::int64_t prr_bin(double distance_m) { return static_cast<std::int64_t>(std::floor(distance_m + 0.5)); }

// ---------------------------------------------------------------------------
// IPG and IA

void record_ipg(MetricsStore& store, const PairState& pair, Subframe t_rx, std::size_t bin) {
    if (!pair.last_rx) return;
    if (t_rx < *pair.last_rx) throw std::invalid_argument("record_ipg: receptions out of order");
    store.ipg[bin].add(t_rx - *pair.last_rx);
}

void sample_ia(MetricsStore& store, Subframe t_now, std::span<const TrackedPair> pairs) {
    for (const auto& p : pairs) {
        if (!p.state.last_rx) continue;
        store.ia[p.bin].add(t_now - *p.state.last_rx + p.state.last_eta);
    }
}

namespace {
void flush_age(MetricsStore& store, const PairState& pair, std::size_t bin, Subframe until,
               const StatsWindow& window) {
    if (!pair.last_rx) return;
    const Subframe from = std::max(*pair.last_rx, window.start);
    const Subframe to = std::min(until, window.end);
    if (to <= from) return;
    const Subframe base = pair.last_eta - *pair.last_rx;
    store.ia[bin].add_range(from + base, to + base);
}
}  // namespace

void observe_reception(MetricsStore& store, PairState& pair, std::size_t bin, Subframe t_rx, int eta_ms,
                       const StatsWindow& window) {
    flush_age(store, pair, bin, t_rx, window);
    if (window.contains(t_rx)) record_ipg(store, pair, t_rx, bin);
    pair.last_rx = t_rx;
    pair.last_eta = eta_ms;
    pair.ever_received = true;
}

void close_pair(MetricsStore& store, const PairState& pair, std::size_t bin, const StatsWindow& window) {
    flush_age(store, pair, bin, window.end, window);
    if (!pair.ever_received) ++store.silent_pairs[bin];
}

// ---------------------------------------------------------------------------
// PRR and CBR

void count_transmission(MetricsStore& store, double distance_m) {
    const auto b = prr_bin(distance_m);
    if (b < 0 || b >= static_cast<std::int64_t>(store.prr.size())) return;
    ++store.prr[static_cast<std::size_t>(b)].transmitted;
}

void count_reception(MetricsStore& store, double distance_m) {
    const auto b = prr_bin(distance_m);
    if (b < 0 || b >= static_cast<std::int64_t>(store.prr.size())) return;
    ++store.prr[static_cast<std::size_t>(b)].received;
}

std::optional<double> prr(const MetricsStore& store, std::int64_t distance_bin_m) {
    if (distance_bin_m < 0 || distance_bin_m >= static_cast<std::int64_t>(store.prr.size())) return std::nullopt;
    const auto& c = store.prr[static_cast<std::size_t>(distance_bin_m)];
    if (c.transmitted == 0) return std::nullopt;
    return static_cast<double>(c.received) / static_cast<double>(c.transmitted);
}

std::optional<double> prr_range(const MetricsStore& store, std::int64_t lo_m, std::int64_t hi_m) {
    std::uint64_t t = 0;
    std::uint64_t r = 0;
    for (std::int64_t d = std::max<std::int64_t>(lo_m, 0); d < hi_m && d < static_cast<std::int64_t>(store.prr.size());
         ++d) {
        t += store.prr[static_cast<std::size_t>(d)].transmitted;
        r += store.prr[static_cast<std::size_t>(d)].received;
    }
    if (t == 0) return std::nullopt;
    return static_cast<double>(r) / static_cast<double>(t);
}

double update_cbr(const SensingDatabase& db, double threshold_dbm) {
    const double threshold_mw = db_to_linear(threshold_dbm);
    int busy = 0;
    for (int r = 0; r < kSensingPeriodMs; ++r) {
        if (db.residue_samples(r) == 0) continue;
        for (int s = 0; s < db.subchannels(); ++s) {
            if (*db.average_rssi_mw(r, s) > threshold_mw) ++busy;
        }
    }
    return static_cast<double>(busy) / static_cast<double>(kSensingPeriodMs * db.subchannels());
}

void record_cbr(MetricsStore& store, VehicleId vehicle, double position_m, double cbr) {
    auto& acc = store.cbr[vehicle];
    acc.position_m = position_m;
    acc.sum += cbr;
    ++acc.samples;
}

// ---------------------------------------------------------------------------
// Tables

namespace {
std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace

void write_ccdf_table(std::ostream& os, const Ccdf& c) {
    os << "value_ms,ccdf\n";
    for (std::size_t i = 0; i < c.fractions().size(); ++i) os << i << ',' << fmt_double(c.fractions()[i]) << '\n';
}

Ccdf read_ccdf_table(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "value_ms,ccdf") throw std::runtime_error("ccdf table: bad header");
    std::vector<double> fractions;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("ccdf table: malformed row '" + line + "'");
        const auto index = std::stoll(line.substr(0, comma));
        if (index != static_cast<long long>(fractions.size())) throw std::runtime_error("ccdf table: rows not contiguous");
        fractions.push_back(std::stod(line.substr(comma + 1)));
    }
    return Ccdf::from_fractions(std::move(fractions));
}

void write_percentile_table(std::ostream& os, const MetricsStore& store, bool ia) {
    os << "bin_center_m,samples,p999_ms\n";
    const auto& hists = ia ? store.ia : store.ipg;
    for (std::size_t i = 0; i < hists.size(); ++i) {
        os << fmt_double(store.bin_centers_m[i]) << ',' << hists[i].total() << ',';
        if (hists[i].empty()) {
            os << "NA\n";
        } else {
            os << percentile_999(hists[i]) << '\n';
        }
    }
}

void write_prr_table(std::ostream& os, const MetricsStore& store) {
    os << "distance_m,transmitted,received,prr\n";
    for (std::size_t d = 0; d < store.prr.size(); ++d) {
        const auto& c = store.prr[d];
        if (c.transmitted == 0) continue;
        os << d << ',' << c.transmitted << ',' << c.received << ','
           << fmt_double(static_cast<double>(c.received) / static_cast<double>(c.transmitted)) << '\n';
    }
}

void write_cbr_table(std::ostream& os, const MetricsStore& store) {
    os << "vehicle_id,position_m,samples,mean_cbr\n";
    double sum = 0.0;
    for (const auto& [id, acc] : store.cbr) {
        os << id << ',' << fmt_double(acc.position_m) << ',' << acc.samples << ',' << fmt_double(acc.mean()) << '\n';
        sum += acc.mean();
    }
    if (!store.cbr.empty()) os << "all,NA,NA," << fmt_double(sum / static_cast<double>(store.cbr.size())) << '\n';
}

}  // namespace cv2x
