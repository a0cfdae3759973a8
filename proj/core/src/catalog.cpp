#include "stormbench/catalog.hpp"

#include <algorithm>
#include <sstream>

#include "stormbench/error.hpp"

namespace stormbench {

std::string describe(const ParamValue& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return "\"" + x + "\"";
            } else {
                std::ostringstream os;
                os << x;
                return os.str();
            }
        },
        v);
}

double get_number(const ParamMap& params, const std::string& name, double fallback) {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    return fallback;
}

std::int64_t get_integer(const ParamMap& params, const std::string& name, std::int64_t fallback) {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    return fallback;
}

std::string get_string(const ParamMap& params, const std::string& name, const std::string& fallback) {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return fallback;
}

std::string_view to_string(ExecutionMode m) noexcept {
    return m == ExecutionMode::DirectGraph ? "direct_graph" : "composed_base_chain";
}

bool Binding::supports(ExecutionMode m) const noexcept { return std::find(modes.begin(), modes.end(), m) != modes.end(); }

namespace {

Modulation modulation_param(const ParamMap& p, Modulation fallback) {
    const auto name = get_string(p, "modulation", std::string(to_string(fallback)));
    auto m = parse_modulation(name);
    if (!m) fail(ErrorCode::ConfigError, "unknown modulation " + name);
    return *m;
}

BaselineConfig baseline_from(const ParamMap& p, const GeneratorContext& ctx) {
    BaselineConfig cfg;
    cfg.modulation = modulation_param(p, cfg.modulation);
    cfg.symbol_rate = get_number(p, "symbol_rate", cfg.symbol_rate);
    cfg.gain_db = get_number(p, "gain", cfg.gain_db);
    cfg.seed = ctx.seed;
    return cfg;
}

std::size_t size_param(const ParamMap& p, const std::string& name, std::size_t fallback) {
    const auto v = get_integer(p, name, static_cast<std::int64_t>(fallback));
    if (v < 0) fail(ErrorCode::ConfigError, name + " must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<Binding> make_bindings() {
    using EM = ExecutionMode;
    std::vector<Binding> b;

    b.push_back({"baseline", Category::Narrowband, {EM::DirectGraph, EM::ComposedBaseChain},
                 [](const ParamMap& p, const GeneratorContext& ctx) {
                     const auto cfg = baseline_from(p, ctx);
                     return ctx.mode == EM::ComposedBaseChain ? make_baseline_composed(cfg, ctx.sample_rate)
                                                              : make_baseline_direct(cfg, ctx.sample_rate);
                 }});

    b.push_back({"am", Category::Narrowband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     AmConfig cfg;
                     cfg.tone_freq = get_number(p, "tone_freq", cfg.tone_freq);
                     cfg.mod_index = get_number(p, "mod_index", cfg.mod_index);
                     cfg.carrier_offset = get_number(p, "carrier_offset", cfg.carrier_offset);
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     return make_am(cfg, ctx.sample_rate);
                 }});

    b.push_back({"fm", Category::Narrowband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     FmConfig cfg;
                     cfg.tone_freq = get_number(p, "tone_freq", cfg.tone_freq);
                     cfg.freq_deviation = get_number(p, "freq_deviation", cfg.freq_deviation);
                     cfg.carrier_offset = get_number(p, "carrier_offset", cfg.carrier_offset);
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     return make_fm(cfg, ctx.sample_rate);
                 }});

    b.push_back({"hop", Category::Narrowband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     const auto inner = baseline_from(p, ctx);
                     const auto plan = HopPlan::evenly_spaced(size_param(p, "n_channels", 8),
                                                              get_number(p, "channel_spacing", 50e3),
                                                              get_number(p, "dwell", 0.01),
                                                              static_cast<std::uint64_t>(get_integer(p, "hop_seed", 1)));
                     return make_hop(plan, inner, ctx.sample_rate);
                 }});

    b.push_back({"sweep", Category::Narrowband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     SweepConfig cfg;
                     cfg.f_start = get_number(p, "f_start", cfg.f_start);
                     cfg.f_end = get_number(p, "f_end", cfg.f_end);
                     cfg.period = get_number(p, "period", cfg.period);
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     return make_sweep(cfg, ctx.sample_rate);
                 }});

    b.push_back({"spread", Category::Wideband, {EM::ComposedBaseChain},
                 [](const ParamMap& p, const GeneratorContext& ctx) {
                     SpreadWaveformConfig cfg;
                     cfg.modulation = modulation_param(p, cfg.modulation);
                     cfg.spread.chips_per_symbol =
                         static_cast<int>(get_integer(p, "chips_per_symbol", cfg.spread.chips_per_symbol));
                     cfg.spread.pn_seed = static_cast<std::uint64_t>(get_integer(p, "pn_seed", 1));
                     cfg.samples_per_chip = static_cast<int>(get_integer(p, "samples_per_chip", cfg.samples_per_chip));
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     cfg.seed = ctx.seed;
                     return make_spread(cfg, ctx.sample_rate);
                 }});

    b.push_back({"ofdm", Category::Wideband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     OfdmWaveformConfig cfg;
                     cfg.modulation = modulation_param(p, cfg.modulation);
                     cfg.ofdm = OfdmConfig::with_defaults(size_param(p, "n_subcarriers", 64),
                                                          size_param(p, "cp_length", 16));
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     cfg.seed = ctx.seed;
                     return make_ofdm(cfg, ctx.sample_rate);
                 }});

    b.push_back({"otfs", Category::Wideband, {EM::DirectGraph}, [](const ParamMap& p, const GeneratorContext& ctx) {
                     OtfsWaveformConfig cfg;
                     cfg.modulation = modulation_param(p, cfg.modulation);
                     cfg.otfs.m_delay_bins = size_param(p, "m_delay_bins", 64);
                     cfg.otfs.n_doppler_bins = size_param(p, "n_doppler_bins", 16);
                     cfg.otfs.cp_length = size_param(p, "cp_length", 16);
                     cfg.gain_db = get_number(p, "gain", cfg.gain_db);
                     cfg.seed = ctx.seed;
                     return make_otfs(cfg, ctx.sample_rate);
                 }});
    return b;
}

}  // namespace

const std::vector<Binding>& builtin_bindings() {
    static const std::vector<Binding> bindings = make_bindings();
    return bindings;
}

const Binding* find_binding(const std::string& name) {
    for (const auto& b : builtin_bindings()) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

}  // namespace stormbench
