#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "stormbench/constellation.hpp"
#include "stormbench/iq_buffer.hpp"
#include "stormbench/ofdm.hpp"
#include "stormbench/otfs.hpp"
#include "stormbench/prng.hpp"
#include "stormbench/pulse_shape.hpp"
#include "stormbench/spread.hpp"

namespace stormbench {

enum class Category { Narrowband, Wideband };

std::string_view to_string(Category c) noexcept;

// A resumable waveform source. All state needed to continue a stream (PRNG
// position, oscillator phase, filter history, partially consumed blocks)
// lives in the handle, so generate(n) followed by generate(m) is
// bit-identical to generate(n + m). Handles are single-owner; they may move
// between threads but must not be shared.
class WaveformGenerator {
public:
    explicit WaveformGenerator(double sample_rate);
    virtual ~WaveformGenerator() = default;

    WaveformGenerator(const WaveformGenerator&) = delete;
    WaveformGenerator& operator=(const WaveformGenerator&) = delete;

    virtual std::string_view name() const noexcept = 0;
    virtual Category category() const noexcept = 0;

    double sample_rate() const noexcept { return sample_rate_; }
    // Samples emitted so far; also the next buffer's start timestamp.
    std::int64_t position() const noexcept { return position_; }

    IqBuffer generate(std::size_t n);
    void generate_into(std::span<Sample> out);

protected:
    // Fills `out` with samples position() .. position() + out.size() - 1.
    virtual void produce(std::span<Sample> out, std::int64_t first_index) = 0;

private:
    double sample_rate_;
    std::int64_t position_ = 0;
};

// Generator that synthesises in fixed blocks (one symbol, one OFDM symbol,
// one OTFS frame) and serves arbitrary request sizes from a FIFO.
class BlockGenerator : public WaveformGenerator {
public:
    using WaveformGenerator::WaveformGenerator;

protected:
    virtual void next_block(std::vector<Sample>& out) = 0;
    void produce(std::span<Sample> out, std::int64_t first_index) final;

private:
    std::vector<Sample> pending_;
    std::size_t cursor_ = 0;
};

enum class BitSource { Random, Zeros };

struct BaselineConfig {
    Modulation modulation = Modulation::Qpsk;
    double symbol_rate = 50e3;
    double gain_db = 0.0;
    double rolloff = 0.35;
    int span_symbols = 8;
    std::uint64_t seed = 1;
    BitSource bits = BitSource::Random;
};

// Pulse shape implied by a baseline configuration at a sample rate. Throws
// ConfigError unless sample_rate / symbol_rate is an integer >= 2.
PulseShape baseline_pulse(const BaselineConfig& cfg, double sample_rate);

struct AmConfig {
    double tone_freq = 10e3;
    double mod_index = 0.5;
    double carrier_offset = 0.0;
    double gain_db = 0.0;
};

struct FmConfig {
    double tone_freq = 5e3;
    double freq_deviation = 25e3;
    double carrier_offset = 0.0;
    double gain_db = 0.0;
};

struct HopPlan {
    std::vector<double> channel_offsets;
    double dwell = 0.01;
    std::uint64_t seed = 1;

    // n channels centred on zero, `spacing` Hz apart.
    static HopPlan evenly_spaced(std::size_t n, double spacing, double dwell, std::uint64_t seed);
};

// Channel index used in each of the first `count` dwells.
std::vector<std::size_t> hop_order(const HopPlan& plan, std::size_t count);

struct SweepConfig {
    double f_start = -200e3;
    double f_end = 200e3;
    double period = 0.1;
    double gain_db = 0.0;
};

struct SpreadWaveformConfig {
    Modulation modulation = Modulation::Qpsk;
    SpreadConfig spread{};
    int samples_per_chip = 2;
    double rolloff = 0.35;
    double gain_db = 0.0;
    std::uint64_t seed = 1;
};

struct OfdmWaveformConfig {
    OfdmConfig ofdm{};
    Modulation modulation = Modulation::Qpsk;
    double gain_db = 0.0;
    std::uint64_t seed = 1;
};

struct OtfsWaveformConfig {
    OtfsConfig otfs{};
    Modulation modulation = Modulation::Qpsk;
    double gain_db = 0.0;
    std::uint64_t seed = 1;
};

// Waveform-specific symbol logic for the composed base chains: emits one
// unit-power symbol (or chip) per call.
class SymbolSource {
public:
    virtual ~SymbolSource() = default;
    virtual Sample next_symbol() = 0;
};

// Seeded random constellation symbols (or a constant label-0 stream).
class RandomSymbolSource final : public SymbolSource {
public:
    RandomSymbolSource(Modulation modulation, std::uint64_t seed, BitSource bits = BitSource::Random);
    Sample next_symbol() override;

private:
    Constellation constellation_;
    Prng prng_;
    BitSource bits_;
};

// Spreads random constellation symbols with a short PN code, one chip per call.
class SpreadChipSource final : public SymbolSource {
public:
    SpreadChipSource(Modulation modulation, const SpreadConfig& cfg, std::uint64_t seed);
    Sample next_symbol() override;

private:
    Constellation constellation_;
    Prng prng_;
    std::vector<int> code_;
    std::size_t chip_ = 0;
    Sample current_{};
};

// Shared base signal-processing chain: symbol logic -> pulse shaping ->
// gain scaling -> framing into the stream. The category only tags which
// chain a waveform composes with; the processing is the same.
class BaseChainGenerator final : public BlockGenerator {
public:
    BaseChainGenerator(std::string_view name, Category category, std::unique_ptr<SymbolSource> source,
                       const PulseShape& shape, double gain_db, double sample_rate);

    std::string_view name() const noexcept override { return name_; }
    Category category() const noexcept override { return category_; }

protected:
    void next_block(std::vector<Sample>& out) override;

private:
    std::string name_;
    Category category_;
    std::unique_ptr<SymbolSource> source_;
    PulseShaper shaper_;
    double amplitude_;
};

// Factories. All throw ConfigError on invalid parameters.
std::unique_ptr<WaveformGenerator> make_baseline_direct(const BaselineConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_baseline_composed(const BaselineConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_am(const AmConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_fm(const FmConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_hop(const HopPlan& plan, const BaselineConfig& inner, double sample_rate);
std::unique_ptr<WaveformGenerator> make_sweep(const SweepConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_spread(const SpreadWaveformConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_ofdm(const OfdmWaveformConfig& cfg, double sample_rate);
std::unique_ptr<WaveformGenerator> make_otfs(const OtfsWaveformConfig& cfg, double sample_rate);

// One-shot forms: a fresh handle generating n samples.
IqBuffer gen_baseline(const BaselineConfig& cfg, double sample_rate, std::size_t n);
IqBuffer gen_am(const AmConfig& cfg, double sample_rate, std::size_t n);
IqBuffer gen_fm(const FmConfig& cfg, double sample_rate, std::size_t n);
IqBuffer gen_hop(const HopPlan& plan, const BaselineConfig& inner, double sample_rate, std::size_t n);
IqBuffer gen_sweep(const SweepConfig& cfg, double sample_rate, std::size_t n);

}  // namespace stormbench
