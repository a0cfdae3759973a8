#include "stormbench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stormbench/error.hpp"
#include "stormbench/prng.hpp"

namespace stormbench {

AccessPreamble AccessPreamble::make(std::size_t length, Modulation modulation, std::uint64_t seed) {
    if (length < 16) fail(ErrorCode::ConfigError, "preamble needs at least 16 symbols");
    AccessPreamble p;
    p.constellation = Constellation(modulation);
    Prng prng(seed);
    p.symbols.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        p.symbols.push_back(p.constellation.point(static_cast<std::uint32_t>(prng.below(p.constellation.size()))));
    }
    return p;
}

Sample estimate_gain(std::span<const Sample> rx, std::span<const Sample> ref) {
    if (rx.size() != ref.size()) fail(ErrorCode::LengthError, "gain estimate needs equal-length sequences");
    Sample num{};
    double den = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += rx[i] * std::conj(ref[i]);
        den += std::norm(ref[i]);
    }
    return den > 0.0 ? num / den : Sample{};
}

std::size_t count_symbol_errors(std::span<const Sample> rx, const AccessPreamble& preamble) {
    if (rx.size() != preamble.symbols.size()) {
        fail(ErrorCode::LengthError, "received " + std::to_string(rx.size()) + " symbols for a preamble of " +
                                         std::to_string(preamble.symbols.size()));
    }
    const Sample h = estimate_gain(rx, preamble.symbols);
    if (h == Sample{}) return rx.size();
    const Sample inv = 1.0 / h;
    const auto& c = preamble.constellation;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (c.decide(rx[i] * inv) != c.decide(preamble.symbols[i])) ++errors;
    }
    return errors;
}

double compute_aser(std::span<const Sample> rx, const AccessPreamble& preamble) {
    if (preamble.symbols.empty()) fail(ErrorCode::LengthError, "empty preamble");
    return static_cast<double>(count_symbol_errors(rx, preamble)) / static_cast<double>(preamble.symbols.size());
}

namespace {

std::vector<double> histogram(std::span<const Sample> x, double r, std::size_t bins) {
    std::vector<double> h(bins * bins, 0.0);
    const double scale = static_cast<double>(bins) / (2.0 * r);
    const auto last = static_cast<double>(bins - 1);
    for (const auto& s : x) {
        const double bi = std::clamp(std::floor((s.real() + r) * scale), 0.0, last);
        const double bq = std::clamp(std::floor((s.imag() + r) * scale), 0.0, last);
        h[static_cast<std::size_t>(bi) * bins + static_cast<std::size_t>(bq)] += 1.0;
    }
    return h;
}

void smooth(std::vector<double>& h, double n, double eps) {
    const double norm = 1.0 + eps * static_cast<double>(h.size());
    for (auto& v : h) v = (v / n + eps) / norm;
}

}  // namespace

double compute_kld(std::span<const Sample> rx, std::span<const Sample> ref, const KldOptions& opt) {
    if (opt.bins_per_axis < 2) fail(ErrorCode::ConfigError, "KLD needs at least 2 bins per axis");
    if (!(opt.smoothing > 0.0)) fail(ErrorCode::ConfigError, "KLD smoothing must be positive");
    const std::size_t need = 10 * opt.bins_per_axis * opt.bins_per_axis;
    if (rx.size() < need || ref.size() < need) {
        fail(ErrorCode::InsufficientData, "KLD needs at least " + std::to_string(need) + " samples per input");
    }
    const double rms = std::sqrt(mean_power(ref));
    if (!(rms > 0.0)) fail(ErrorCode::InsufficientData, "reference has no power");
    const double r = 4.0 * rms;

    auto p = histogram(rx, r, opt.bins_per_axis);
    auto q = histogram(ref, r, opt.bins_per_axis);
    smooth(p, static_cast<double>(rx.size()), opt.smoothing);
    smooth(q, static_cast<double>(ref.size()), opt.smoothing);
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += p[i] * std::log(p[i] / q[i]);
    return std::max(0.0, d);
}

double compute_kld(const IqBuffer& rx, const IqBuffer& ref, const KldOptions& options) {
    return compute_kld(rx.samples(), ref.samples(), options);
}

double kld_upper_bound(const KldOptions& opt) {
    // P a point mass in a bin where the reference histogram is empty; every
    // other bin contributes a non-positive term.
    const double cells = static_cast<double>(opt.bins_per_axis * opt.bins_per_axis);
    const double eps = opt.smoothing;
    return (1.0 + eps) / (1.0 + cells * eps) * std::log((1.0 + eps) / eps);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qpsk_ser(double es_n0) {
    const double p = q_function(std::sqrt(es_n0));
    return 2.0 * p - p * p;
}

nlohmann::json to_json(const MetricsRecord& r) {
    nlohmann::json j{{"timestamp", r.timestamp},
                     {"window", r.window},
                     {"aser", r.aser},
                     {"kld", r.kld ? nlohmann::json(*r.kld) : nlohmann::json(nullptr)},
                     {"throughput", r.throughput},
                     {"frames_sent", r.frames_sent},
                     {"frames_delivered", r.frames_delivered},
                     {"interference_on", r.interference_on},
                     {"context", r.context}};
    return j;
}

MetricsRecord metrics_record_from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.timestamp = j.at("timestamp").get<double>();
    r.window = j.at("window").get<std::int64_t>();
    r.aser = j.at("aser").get<double>();
    if (!j.at("kld").is_null()) r.kld = j.at("kld").get<double>();
    r.throughput = j.at("throughput").get<double>();
    r.frames_sent = j.value("frames_sent", std::size_t{0});
    r.frames_delivered = j.value("frames_delivered", std::size_t{0});
    r.interference_on = j.value("interference_on", false);
    r.context = j.value("context", nlohmann::json::object());
    return r;
}

}  // namespace stormbench
