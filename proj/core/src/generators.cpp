#include "stormbench/generators.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stormbench/error.hpp"
#include "stormbench/fft.hpp"
#include "stormbench/nco.hpp"

namespace stormbench {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_nyquist(double freq, double sample_rate, const char* what) {
    if (!std::isfinite(freq) || !(std::abs(freq) < sample_rate / 2.0)) {
        fail(ErrorCode::ConfigError, std::string(what) + " " + std::to_string(freq) + " Hz is beyond Nyquist (" +
                                         std::to_string(sample_rate / 2.0) + " Hz)");
    }
}

double amplitude_of(double gain_db) { return GainSetting(gain_db).amplitude(); }

// --- baseline, self-contained ----------------------------------------------

class BaselineDirect final : public BlockGenerator {
public:
    BaselineDirect(const BaselineConfig& cfg, double sample_rate)
        : BlockGenerator(sample_rate),
          shape_(baseline_pulse(cfg, sample_rate)),
          constellation_(cfg.modulation),
          prng_(cfg.seed),
          bits_(cfg.bits),
          taps_(pulse_taps(shape_)),
          history_(static_cast<std::size_t>(shape_.span_symbols) + 1),
          scale_(std::sqrt(static_cast<double>(shape_.samples_per_symbol))),
          amplitude_(amplitude_of(cfg.gain_db)) {}

    std::string_view name() const noexcept override { return "baseline"; }
    Category category() const noexcept override { return Category::Narrowband; }

protected:
    void next_block(std::vector<Sample>& out) override {
        const std::uint32_t label =
            bits_ == BitSource::Zeros ? 0u : static_cast<std::uint32_t>(prng_.next_bits(constellation_.bits_per_symbol()));
        const std::size_t depth = history_.size();
        const std::size_t k = symbols_++;
        history_[k % depth] = constellation_.point(label);

        const auto& taps = *taps_;
        const std::size_t sps = static_cast<std::size_t>(shape_.samples_per_symbol);
        for (std::size_t r = 0; r < sps; ++r) {
            const std::size_t m = k * sps + r;
            std::size_t j = k;
            Sample acc{0.0, 0.0};
            for (;;) {
                const std::size_t d = m - j * sps;
                if (d >= taps.size()) break;
                acc += history_[j % depth] * taps[d];
                if (j == 0) break;
                --j;
            }
            out.push_back((acc * scale_) * amplitude_);
        }
    }

private:
    PulseShape shape_;
    Constellation constellation_;
    Prng prng_;
    BitSource bits_;
    std::shared_ptr<const std::vector<double>> taps_;
    std::vector<Sample> history_;
    std::size_t symbols_ = 0;
    double scale_;
    double amplitude_;
};

// --- AM / FM / sweep: closed-form in the absolute sample index -------------

class AmGenerator final : public WaveformGenerator {
public:
    AmGenerator(const AmConfig& cfg, double sample_rate) : WaveformGenerator(sample_rate), cfg_(cfg) {
        if (!(cfg.mod_index >= 0.0 && cfg.mod_index <= 1.0)) {
            fail(ErrorCode::ConfigError, "mod_index must lie in [0, 1], got " + std::to_string(cfg.mod_index));
        }
        require_nyquist(cfg.tone_freq, sample_rate, "tone_freq");
        require_nyquist(cfg.carrier_offset, sample_rate, "carrier_offset");
        // Unit mean power: E[(1 + mu cos)^2] = 1 + mu^2 / 2.
        amplitude_ = amplitude_of(cfg.gain_db) / std::sqrt(1.0 + cfg.mod_index * cfg.mod_index / 2.0);
    }

    std::string_view name() const noexcept override { return "am"; }
    Category category() const noexcept override { return Category::Narrowband; }

protected:
    void produce(std::span<Sample> out, std::int64_t first) override {
        const double fs = sample_rate();
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::int64_t n = first + static_cast<std::int64_t>(i);
            const double envelope = 1.0 + cfg_.mod_index * std::cos(nco_phase(0.0, cfg_.tone_freq, n, fs));
            out[i] = std::polar(amplitude_ * envelope, nco_phase(0.0, cfg_.carrier_offset, n, fs));
        }
    }

private:
    AmConfig cfg_;
    double amplitude_;
};

class FmGenerator final : public WaveformGenerator {
public:
    FmGenerator(const FmConfig& cfg, double sample_rate) : WaveformGenerator(sample_rate), cfg_(cfg) {
        if (!(cfg.freq_deviation >= 0.0)) fail(ErrorCode::ConfigError, "freq_deviation must be non-negative");
        if (!(cfg.freq_deviation + std::abs(cfg.carrier_offset) < sample_rate / 2.0)) {
            fail(ErrorCode::ConfigError, "freq_deviation + |carrier_offset| must stay below Nyquist");
        }
        if (cfg.freq_deviation > 0.0 && !(cfg.tone_freq > 0.0)) {
            fail(ErrorCode::ConfigError, "tone_freq must be positive when freq_deviation > 0");
        }
        require_nyquist(cfg.tone_freq, sample_rate, "tone_freq");
        index_ = cfg.freq_deviation > 0.0 ? cfg.freq_deviation / cfg.tone_freq : 0.0;
        amplitude_ = amplitude_of(cfg.gain_db);
    }

    std::string_view name() const noexcept override { return "fm"; }
    Category category() const noexcept override { return Category::Narrowband; }

protected:
    void produce(std::span<Sample> out, std::int64_t first) override {
        const double fs = sample_rate();
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::int64_t n = first + static_cast<std::int64_t>(i);
            double phase = nco_phase(0.0, cfg_.carrier_offset, n, fs);
            if (index_ != 0.0) phase += index_ * std::sin(nco_phase(0.0, cfg_.tone_freq, n, fs));
            out[i] = std::polar(amplitude_, phase);
        }
    }

private:
    FmConfig cfg_;
    double index_ = 0.0;
    double amplitude_;
};

class SweepGenerator final : public WaveformGenerator {
public:
    SweepGenerator(const SweepConfig& cfg, double sample_rate) : WaveformGenerator(sample_rate), cfg_(cfg) {
        require_nyquist(cfg.f_start, sample_rate, "f_start");
        require_nyquist(cfg.f_end, sample_rate, "f_end");
        if (!(cfg.period > 0.0) || !std::isfinite(cfg.period)) fail(ErrorCode::ConfigError, "period must be positive");
        period_samples_ = cfg.period * sample_rate;
        cycles_per_period_ = cfg.period * (cfg.f_start + cfg.f_end) / 2.0;
        amplitude_ = amplitude_of(cfg.gain_db);
    }

    std::string_view name() const noexcept override { return "sweep"; }
    Category category() const noexcept override { return Category::Narrowband; }

protected:
    void produce(std::span<Sample> out, std::int64_t first) override {
        const double fs = sample_rate();
        const double slope = (cfg_.f_end - cfg_.f_start) / cfg_.period;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double n = static_cast<double>(first + static_cast<std::int64_t>(i));
            const double q = std::floor(n / period_samples_);
            const double tau = (n - q * period_samples_) / fs;
            double completed = q * cycles_per_period_;
            completed -= std::floor(completed);
            const double cycles = completed + cfg_.f_start * tau + 0.5 * slope * tau * tau;
            out[i] = std::polar(amplitude_, kTwoPi * (cycles - std::floor(cycles)));
        }
    }

private:
    SweepConfig cfg_;
    double period_samples_;
    double cycles_per_period_;
    double amplitude_;
};

// --- frequency hopping ------------------------------------------------------

class HopGenerator final : public WaveformGenerator {
public:
    HopGenerator(const HopPlan& plan, const BaselineConfig& inner, double sample_rate)
        : WaveformGenerator(sample_rate), plan_(plan), order_(plan.seed) {
        if (plan.channel_offsets.empty()) fail(ErrorCode::ConfigError, "hop plan has no channels");
        for (double f : plan.channel_offsets) require_nyquist(f, sample_rate, "hop channel offset");
        if (!(plan.dwell > 0.0)) fail(ErrorCode::ConfigError, "dwell must be positive");
        if (plan.dwell * inner.symbol_rate < 10.0 - 1e-9) {
            fail(ErrorCode::ConfigError, "dwell must cover at least 10 symbol periods");
        }
        dwell_samples_ = std::llround(plan.dwell * sample_rate);
        if (dwell_samples_ < 1) fail(ErrorCode::ConfigError, "dwell shorter than one sample");
        inner_ = make_baseline_direct(inner, sample_rate);
    }

    std::string_view name() const noexcept override { return "hop"; }
    Category category() const noexcept override { return Category::Narrowband; }

protected:
    void produce(std::span<Sample> out, std::int64_t first) override {
        inner_->generate_into(out);
        const double fs = sample_rate();
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::int64_t n = first + static_cast<std::int64_t>(i);
            if (n == next_boundary_) enter_dwell(n);
            const double f = plan_.channel_offsets[channel_];
            out[i] *= std::polar(1.0, nco_phase(segment_phase_, f, n - segment_start_, fs));
        }
    }

private:
    void enter_dwell(std::int64_t n) {
        const std::size_t next = static_cast<std::size_t>(order_.below(plan_.channel_offsets.size()));
        if (n == 0) {
            channel_ = next;
        } else if (next != channel_) {
            // Carry the oscillator phase across the hop.
            segment_phase_ = wrap_phase(
                nco_phase(segment_phase_, plan_.channel_offsets[channel_], n - segment_start_, sample_rate()));
            segment_start_ = n;
            channel_ = next;
        }
        next_boundary_ = n + dwell_samples_;
    }

    HopPlan plan_;
    Prng order_;
    std::unique_ptr<WaveformGenerator> inner_;
    std::int64_t dwell_samples_ = 1;
    std::int64_t next_boundary_ = 0;
    std::int64_t segment_start_ = 0;
    double segment_phase_ = 0.0;
    std::size_t channel_ = 0;
};

// --- OFDM / OTFS -------------------------------------------------------------

class OfdmGenerator final : public BlockGenerator {
public:
    OfdmGenerator(const OfdmWaveformConfig& cfg, double sample_rate)
        : BlockGenerator(sample_rate), cfg_(cfg), constellation_(cfg.modulation), prng_(cfg.seed) {
        check(cfg.ofdm);
        const std::size_t active = cfg.ofdm.active_count();
        if (active == 0) fail(ErrorCode::ConfigError, "OFDM configuration has no active subcarriers");
        // Unitary IDFT of K unit-power subcarriers out of N gives mean power K/N.
        scale_ = std::sqrt(static_cast<double>(cfg.ofdm.n_subcarriers) / static_cast<double>(active)) *
                 amplitude_of(cfg.gain_db);
        freq_.resize(cfg.ofdm.n_subcarriers);
        time_.resize(cfg.ofdm.n_subcarriers);
    }

    std::string_view name() const noexcept override { return "ofdm"; }
    Category category() const noexcept override { return Category::Wideband; }

protected:
    void next_block(std::vector<Sample>& out) override {
        const std::size_t n = cfg_.ofdm.n_subcarriers;
        for (std::size_t k = 0; k < n; ++k) {
            freq_[k] = cfg_.ofdm.is_active(k)
                           ? constellation_.point(static_cast<std::uint32_t>(
                                 prng_.next_bits(constellation_.bits_per_symbol())))
                           : Sample{0.0, 0.0};
        }
        idft_unitary(freq_, time_);
        const std::size_t cp = cfg_.ofdm.cp_length;
        for (std::size_t i = n - cp; i < n; ++i) out.push_back(time_[i] * scale_);
        for (std::size_t i = 0; i < n; ++i) out.push_back(time_[i] * scale_);
    }

private:
    OfdmWaveformConfig cfg_;
    Constellation constellation_;
    Prng prng_;
    double scale_;
    std::vector<Sample> freq_;
    std::vector<Sample> time_;
};

class OtfsGenerator final : public BlockGenerator {
public:
    OtfsGenerator(const OtfsWaveformConfig& cfg, double sample_rate)
        : BlockGenerator(sample_rate), cfg_(cfg), constellation_(cfg.modulation), prng_(cfg.seed) {
        check(cfg.otfs);
        amplitude_ = amplitude_of(cfg.gain_db);
    }

    std::string_view name() const noexcept override { return "otfs"; }
    Category category() const noexcept override { return Category::Wideband; }

protected:
    void next_block(std::vector<Sample>& out) override {
        ComplexGrid dd(cfg_.otfs.m_delay_bins, cfg_.otfs.n_doppler_bins);
        for (auto& v : dd.data()) {
            v = constellation_.point(static_cast<std::uint32_t>(prng_.next_bits(constellation_.bits_per_symbol())));
        }
        const IqBuffer frame = otfs_modulate(dd, cfg_.otfs, sample_rate());
        for (const auto& s : frame.samples()) out.push_back(s * amplitude_);
    }

private:
    OtfsWaveformConfig cfg_;
    Constellation constellation_;
    Prng prng_;
    double amplitude_;
};

}  // namespace

std::string_view to_string(Category c) noexcept { return c == Category::Narrowband ? "narrowband" : "wideband"; }

WaveformGenerator::WaveformGenerator(double sample_rate) : sample_rate_(sample_rate) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        fail(ErrorCode::ConfigError, "sample_rate must be positive");
    }
}

IqBuffer WaveformGenerator::generate(std::size_t n) {
    const std::int64_t start = position_;
    std::vector<Sample> out(n);
    generate_into(out);
    return IqBuffer(std::move(out), sample_rate_, start);
}

void WaveformGenerator::generate_into(std::span<Sample> out) {
    if (out.empty()) return;
    produce(out, position_);
    position_ += static_cast<std::int64_t>(out.size());
}

void BlockGenerator::produce(std::span<Sample> out, std::int64_t) {
    std::size_t filled = 0;
    while (filled < out.size()) {
        if (cursor_ == pending_.size()) {
            pending_.clear();
            cursor_ = 0;
            next_block(pending_);
        }
        const std::size_t take = std::min(out.size() - filled, pending_.size() - cursor_);
        std::copy_n(pending_.begin() + static_cast<std::ptrdiff_t>(cursor_), take, out.begin() + static_cast<std::ptrdiff_t>(filled));
        cursor_ += take;
        filled += take;
    }
}

PulseShape baseline_pulse(const BaselineConfig& cfg, double sample_rate) {
    if (!(cfg.symbol_rate > 0.0)) fail(ErrorCode::ConfigError, "symbol_rate must be positive");
    const double ratio = sample_rate / cfg.symbol_rate;
    const double sps = std::round(ratio);
    if (std::abs(ratio - sps) > 1e-9 * ratio || sps < 2.0) {
        fail(ErrorCode::ConfigError, "symbol_rate " + std::to_string(cfg.symbol_rate) +
                                         " Hz does not divide sample_rate " + std::to_string(sample_rate) +
                                         " Hz into an integer >= 2 samples per symbol");
    }
    PulseShape shape;
    shape.samples_per_symbol = static_cast<int>(sps);
    shape.rolloff = cfg.rolloff;
    shape.span_symbols = cfg.span_symbols;
    check(shape);
    return shape;
}

HopPlan HopPlan::evenly_spaced(std::size_t n, double spacing, double dwell, std::uint64_t seed) {
    HopPlan plan;
    plan.dwell = dwell;
    plan.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        plan.channel_offsets.push_back((static_cast<double>(i) - (static_cast<double>(n) - 1.0) / 2.0) * spacing);
    }
    return plan;
}

std::vector<std::size_t> hop_order(const HopPlan& plan, std::size_t count) {
    if (plan.channel_offsets.empty()) fail(ErrorCode::ConfigError, "hop plan has no channels");
    Prng prng(plan.seed);
    std::vector<std::size_t> order(count);
    for (auto& c : order) c = static_cast<std::size_t>(prng.below(plan.channel_offsets.size()));
    return order;
}

RandomSymbolSource::RandomSymbolSource(Modulation modulation, std::uint64_t seed, BitSource bits)
    : constellation_(modulation), prng_(seed), bits_(bits) {}

Sample RandomSymbolSource::next_symbol() {
    const std::uint32_t label =
        bits_ == BitSource::Zeros ? 0u : static_cast<std::uint32_t>(prng_.next_bits(constellation_.bits_per_symbol()));
    return constellation_.point(label);
}

SpreadChipSource::SpreadChipSource(Modulation modulation, const SpreadConfig& cfg, std::uint64_t seed)
    : constellation_(modulation), prng_(seed), code_(pn_code(cfg)) {}

Sample SpreadChipSource::next_symbol() {
    if (chip_ == 0) {
        current_ = constellation_.point(static_cast<std::uint32_t>(prng_.next_bits(constellation_.bits_per_symbol())));
    }
    const Sample chip = code_[chip_] > 0 ? current_ : -current_;
    chip_ = (chip_ + 1) % code_.size();
    return chip;
}

BaseChainGenerator::BaseChainGenerator(std::string_view name, Category category, std::unique_ptr<SymbolSource> source,
                                       const PulseShape& shape, double gain_db, double sample_rate)
    : BlockGenerator(sample_rate),
      name_(name),
      category_(category),
      source_(std::move(source)),
      shaper_(shape),
      amplitude_(amplitude_of(gain_db)) {}

void BaseChainGenerator::next_block(std::vector<Sample>& out) {
    const std::size_t first = out.size();
    shaper_.push(source_->next_symbol(), out);
    for (std::size_t i = first; i < out.size(); ++i) out[i] = out[i] * amplitude_;
}

std::unique_ptr<WaveformGenerator> make_baseline_direct(const BaselineConfig& cfg, double sample_rate) {
    return std::make_unique<BaselineDirect>(cfg, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_baseline_composed(const BaselineConfig& cfg, double sample_rate) {
    const PulseShape shape = baseline_pulse(cfg, sample_rate);
    return std::make_unique<BaseChainGenerator>(
        "baseline", Category::Narrowband, std::make_unique<RandomSymbolSource>(cfg.modulation, cfg.seed, cfg.bits),
        shape, cfg.gain_db, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_am(const AmConfig& cfg, double sample_rate) {
    return std::make_unique<AmGenerator>(cfg, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_fm(const FmConfig& cfg, double sample_rate) {
    return std::make_unique<FmGenerator>(cfg, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_hop(const HopPlan& plan, const BaselineConfig& inner, double sample_rate) {
    return std::make_unique<HopGenerator>(plan, inner, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_sweep(const SweepConfig& cfg, double sample_rate) {
    return std::make_unique<SweepGenerator>(cfg, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_spread(const SpreadWaveformConfig& cfg, double sample_rate) {
    check(cfg.spread);
    PulseShape shape;
    shape.samples_per_symbol = cfg.samples_per_chip;
    shape.rolloff = cfg.rolloff;
    check(shape);
    return std::make_unique<BaseChainGenerator>(
        "spread", Category::Wideband, std::make_unique<SpreadChipSource>(cfg.modulation, cfg.spread, cfg.seed), shape,
        cfg.gain_db, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_ofdm(const OfdmWaveformConfig& cfg, double sample_rate) {
    return std::make_unique<OfdmGenerator>(cfg, sample_rate);
}

std::unique_ptr<WaveformGenerator> make_otfs(const OtfsWaveformConfig& cfg, double sample_rate) {
    return std::make_unique<OtfsGenerator>(cfg, sample_rate);
}

IqBuffer gen_baseline(const BaselineConfig& cfg, double sample_rate, std::size_t n) {
    return make_baseline_direct(cfg, sample_rate)->generate(n);
}

IqBuffer gen_am(const AmConfig& cfg, double sample_rate, std::size_t n) { return make_am(cfg, sample_rate)->generate(n); }

IqBuffer gen_fm(const FmConfig& cfg, double sample_rate, std::size_t n) { return make_fm(cfg, sample_rate)->generate(n); }

IqBuffer gen_hop(const HopPlan& plan, const BaselineConfig& inner, double sample_rate, std::size_t n) {
    return make_hop(plan, inner, sample_rate)->generate(n);
}

IqBuffer gen_sweep(const SweepConfig& cfg, double sample_rate, std::size_t n) {
    return make_sweep(cfg, sample_rate)->generate(n);
}

}  // namespace stormbench
