#include <benchmark/benchmark.h>

#include <random>

#include "stormbench/constellation.hpp"
#include "stormbench/link_trial.hpp"
#include "stormbench/ofdm.hpp"
#include "stormbench/otfs.hpp"
#include "stormbench/pulse_shape.hpp"
#include "stormbench/registry.hpp"
#include "stormbench/spectrum.hpp"

using namespace stormbench;

namespace {

std::vector<Sample> noise(std::size_t n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    std::vector<Sample> x(n);
    for (auto& s : x) s = Sample(d(rng), d(rng));
    return x;
}

const Registry& registry() {
    static const Registry r = Registry::with_builtins();
    return r;
}

}  // namespace

static void BM_Psd(benchmark::State& state) {
    const auto x = noise(8192);
    PsdOptions o;
    o.fft_size = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(compute_psd(x, 1e6, o));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Psd)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_PulseShape(benchmark::State& state) {
    const Constellation qpsk(Modulation::Qpsk);
    std::vector<std::uint32_t> labels(4096);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i * 7 % 4);
    const auto symbols = qpsk.map_labels(labels);
    const PulseShape shape{static_cast<int>(state.range(0)), 0.35};
    for (auto _ : state) benchmark::DoNotOptimize(pulse_shape(symbols, shape, 1e6));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(symbols.size()));
}
BENCHMARK(BM_PulseShape)->Arg(4)->Arg(8)->Arg(16);

static void BM_OfdmModulate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto cfg = OfdmConfig::with_defaults(n, n / 4);
    ComplexGrid grid(64, n);
    const auto x = noise(64 * n);
    for (std::size_t r = 0; r < grid.rows(); ++r)
        for (std::size_t k = 1; k < n; ++k) grid(r, k) = x[r * n + k];
    for (auto _ : state) benchmark::DoNotOptimize(ofdm_modulate(grid, cfg, 1e6));
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_OfdmModulate)->Arg(64)->Arg(256)->Arg(1024);

static void BM_OtfsModulate(benchmark::State& state) {
    OtfsConfig cfg;
    ComplexGrid dd(cfg.m_delay_bins, cfg.n_doppler_bins);
    const auto x = noise(dd.data().size());
    std::copy(x.begin(), x.end(), dd.data().begin());
    for (auto _ : state) benchmark::DoNotOptimize(otfs_modulate(dd, cfg, 1e6));
}
BENCHMARK(BM_OtfsModulate);

static void BM_Generator(benchmark::State& state, const char* waveform) {
    auto gen = registry().instantiate(RegistryId{waveform}, *registry().validate_params(RegistryId{waveform}, ParamMap{}).value,
                                      1e6, 1);
    std::vector<Sample> out(4096);
    for (auto _ : state) gen->generate_into(out);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}
BENCHMARK_CAPTURE(BM_Generator, baseline, "baseline");
BENCHMARK_CAPTURE(BM_Generator, ofdm, "ofdm");
BENCHMARK_CAPTURE(BM_Generator, otfs, "otfs");
BENCHMARK_CAPTURE(BM_Generator, hop, "hop");

static void BM_LinkTrial(benchmark::State& state) {
    SceneConfig scene = load_scene("scenario1");
    LinkTrialOptions o;
    o.duration = 0.25;
    o.window = 0.25;
    for (auto _ : state) {
        auto src = generator_source(std::shared_ptr<WaveformGenerator>(
            registry().instantiate(RegistryId{"ofdm"}, *registry().validate_params(RegistryId{"ofdm"}, ParamMap{}).value, 1e6, 2)));
        benchmark::DoNotOptimize(run_link_trial(LinkConfig{}, src, scene, o));
    }
    state.SetItemsProcessed(state.iterations() * 250000);
}
BENCHMARK(BM_LinkTrial)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
