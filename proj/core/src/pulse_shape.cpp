#include "stormbench/pulse_shape.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "stormbench/error.hpp"

namespace stormbench {

namespace {

double rrc_value(double t, double beta) {
    constexpr double pi = std::numbers::pi;
    if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / pi;
    if (beta > 0.0 && std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-9) {
        return beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

// Solves the small dense system a x = b in place (partial pivoting).
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * b[c];
        b[i] = acc / a[i][i];
    }
    return true;
}

// Constraint residuals c_k = sum_n h[n] h[n + k*sps] - [k == 0], k = 0..K.
std::vector<double> residuals(const std::vector<double>& h, std::size_t sps, std::size_t lags) {
    std::vector<double> c(lags + 1, 0.0);
    for (std::size_t k = 0; k <= lags; ++k) {
        const std::size_t shift = k * sps;
        double acc = 0.0;
        for (std::size_t n = 0; n + shift < h.size(); ++n) acc += h[n] * h[n + shift];
        c[k] = acc;
    }
    c[0] -= 1.0;
    return c;
}

std::vector<double> refine_orthogonal(const std::vector<double>& prototype, std::size_t sps) {
    const std::size_t len = prototype.size();
    const std::size_t center = (len - 1) / 2;
    const std::size_t lags = (len - 1) / sps;
    std::vector<double> h = prototype;

    for (int iter = 0; iter < 60; ++iter) {
        const auto c = residuals(h, sps, lags);
        double worst = 0.0;
        for (double v : c) worst = std::max(worst, std::abs(v));
        if (worst < 1e-15) break;

        // Jacobian with respect to the free half h[0..center], mirrored taps
        // folded in.
        std::vector<std::vector<double>> jac(lags + 1, std::vector<double>(center + 1, 0.0));
        for (std::size_t k = 0; k <= lags; ++k) {
            const std::size_t shift = k * sps;
            for (std::size_t n = 0; n < len; ++n) {
                double d = 0.0;
                if (n + shift < len) d += h[n + shift];
                if (n >= shift) d += h[n - shift];
                const std::size_t p = n <= center ? n : len - 1 - n;
                jac[k][p] += d;
            }
        }
        std::vector<std::vector<double>> jjt(lags + 1, std::vector<double>(lags + 1, 0.0));
        for (std::size_t a = 0; a <= lags; ++a) {
            for (std::size_t b = 0; b <= lags; ++b) {
                double acc = 0.0;
                for (std::size_t p = 0; p <= center; ++p) acc += jac[a][p] * jac[b][p];
                jjt[a][b] = acc;
            }
        }
        std::vector<double> y = c;
        if (!solve_dense(jjt, y)) return {};
        for (std::size_t p = 0; p <= center; ++p) {
            double step = 0.0;
            for (std::size_t k = 0; k <= lags; ++k) step += jac[k][p] * y[k];
            h[p] -= step;
            h[len - 1 - p] = h[p];
        }
    }

    const auto c = residuals(h, sps, lags);
    double worst = 0.0;
    for (double v : c) worst = std::max(worst, std::abs(v));
    double dist = 0.0;
    for (std::size_t n = 0; n < len; ++n) dist += (h[n] - prototype[n]) * (h[n] - prototype[n]);
    if (worst > 1e-13 || std::sqrt(dist) > 0.25) return {};
    return h;
}

}  // namespace

void check(const PulseShape& shape) {
    if (shape.samples_per_symbol < 2) {
        fail(ErrorCode::ConfigError, "samples_per_symbol must be >= 2, got " + std::to_string(shape.samples_per_symbol));
    }
    if (!(shape.rolloff >= 0.0 && shape.rolloff <= 1.0)) {
        fail(ErrorCode::ConfigError, "rolloff must lie in [0, 1], got " + std::to_string(shape.rolloff));
    }
    if (shape.span_symbols <= 0 || shape.span_symbols % 2 != 0) {
        fail(ErrorCode::ConfigError, "span_symbols must be a positive even number");
    }
}

std::vector<double> rrc_prototype(const PulseShape& shape) {
    check(shape);
    const std::size_t len = shape.tap_count();
    const double mid = static_cast<double>(len - 1) / 2.0;
    std::vector<double> h(len);
    double e = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
        h[n] = rrc_value((static_cast<double>(n) - mid) / shape.samples_per_symbol, shape.rolloff);
        e += h[n] * h[n];
    }
    const double norm = 1.0 / std::sqrt(e);
    for (auto& v : h) v *= norm;
    return h;
}

std::shared_ptr<const std::vector<double>> pulse_taps(const PulseShape& shape) {
    check(shape);
    using Key = std::tuple<int, double, int>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const std::vector<double>>> cache;

    const Key key{shape.samples_per_symbol, shape.rolloff, shape.span_symbols};
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto proto = rrc_prototype(shape);
    auto refined = refine_orthogonal(proto, static_cast<std::size_t>(shape.samples_per_symbol));
    auto taps = std::make_shared<const std::vector<double>>(refined.empty() ? std::move(proto) : std::move(refined));
    cache.emplace(key, taps);
    return taps;
}

IqBuffer pulse_shape(std::span<const Sample> symbols, const PulseShape& shape, double sample_rate,
                     std::int64_t start_timestamp) {
    if (symbols.empty()) return IqBuffer({}, sample_rate, start_timestamp);
    const auto taps_ptr = pulse_taps(shape);
    const auto& taps = *taps_ptr;
    const std::size_t sps = static_cast<std::size_t>(shape.samples_per_symbol);
    const std::size_t len = taps.size();
    const std::size_t n_out = symbols.size() * sps + len - 1;
    const double scale = std::sqrt(static_cast<double>(sps));

    std::vector<Sample> out(n_out);
    for (std::size_t m = 0; m < n_out; ++m) {
        // Newest contributing symbol first; PulseShaper uses the same order.
        std::size_t j = std::min(m / sps, symbols.size() - 1);
        Sample acc{0.0, 0.0};
        for (;;) {
            const std::size_t d = m - j * sps;
            if (d >= len) break;
            acc += symbols[j] * taps[d];
            if (j == 0) break;
            --j;
        }
        out[m] = acc * scale;
    }
    return IqBuffer(std::move(out), sample_rate, start_timestamp);
}

Sample matched_filter_at(std::span<const Sample> samples, std::size_t center_index, std::span<const double> taps,
                         int samples_per_symbol) {
    // Output y[c] = sum_d x[c - d] h[d]; h is symmetric so this is the
    // matched filter.
    Sample acc{0.0, 0.0};
    for (std::size_t d = 0; d < taps.size(); ++d) {
        if (d > center_index) break;
        const std::size_t idx = center_index - d;
        if (idx < samples.size()) acc += samples[idx] * taps[d];
    }
    return acc / std::sqrt(static_cast<double>(samples_per_symbol));
}

std::vector<Sample> matched_filter(std::span<const Sample> samples, std::size_t n_symbols, const PulseShape& shape,
                                   std::size_t offset) {
    const auto taps = pulse_taps(shape);
    const std::size_t sps = static_cast<std::size_t>(shape.samples_per_symbol);
    std::vector<Sample> out(n_symbols);
    for (std::size_t k = 0; k < n_symbols; ++k) {
        out[k] = matched_filter_at(samples, k * sps + shape.loopback_delay() + offset, *taps, shape.samples_per_symbol);
    }
    return out;
}

PulseShaper::PulseShaper(const PulseShape& shape)
    : shape_(shape),
      taps_(pulse_taps(shape)),
      history_(static_cast<std::size_t>(shape.span_symbols) + 1),
      scale_(std::sqrt(static_cast<double>(shape.samples_per_symbol))) {}

void PulseShaper::push(Sample symbol, std::vector<Sample>& out) {
    const std::size_t depth = history_.size();
    const std::size_t k = pushed_;
    history_[k % depth] = symbol;
    ++pushed_;

    const auto& taps = *taps_;
    const std::size_t sps = static_cast<std::size_t>(shape_.samples_per_symbol);
    const std::size_t len = taps.size();
    for (std::size_t r = 0; r < sps; ++r) {
        const std::size_t m = k * sps + r;
        std::size_t j = k;
        Sample acc{0.0, 0.0};
        for (;;) {
            const std::size_t d = m - j * sps;
            if (d >= len) break;
            acc += history_[j % depth] * taps[d];
            if (j == 0) break;
            --j;
        }
        out.push_back(acc * scale_);
    }
}

}  // namespace stormbench
