#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stormbench/generators.hpp"
#include "stormbench/params.hpp"

namespace stormbench {

enum class ExecutionMode { DirectGraph, ComposedBaseChain };

std::string_view to_string(ExecutionMode m) noexcept;

struct GeneratorContext {
    double sample_rate = 1e6;
    std::uint64_t seed = 1;
    ExecutionMode mode = ExecutionMode::DirectGraph;
};

using GeneratorFactory =
    std::function<std::unique_ptr<WaveformGenerator>(const ParamMap& params, const GeneratorContext& ctx)>;

// A compiled-in waveform implementation that descriptors bind to.
struct Binding {
    std::string name;
    Category category;
    std::vector<ExecutionMode> modes;
    GeneratorFactory factory;

    bool supports(ExecutionMode m) const noexcept;
};

// Built-in implementations: baseline, am, fm, hop, sweep (narrowband) and
// spread, ofdm, otfs (wideband). Parameter names match the shipped
// descriptors; absent parameters take the generator defaults. Parameters
// that configure the radio front end (center_frequency) are ignored here.
const std::vector<Binding>& builtin_bindings();
const Binding* find_binding(const std::string& name);

}  // namespace stormbench
