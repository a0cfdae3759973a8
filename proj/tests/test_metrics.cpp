#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "stormbench/metrics.hpp"
#include "support.hpp"

using namespace stormbench;

namespace {

std::vector<Sample> scaled(std::span<const Sample> x, Sample g) {
    std::vector<Sample> y(x.begin(), x.end());
    for (auto& v : y) v *= g;
    return y;
}

std::vector<Sample> shifted_gaussian(oracle::Gen& g, std::size_t n, double offset) {
    // Per-component unit variance, mean offset along I.
    auto v = g.gaussian_vector(n, 1.0);
    for (auto& s : v) s += offset;
    return v;
}

}  // namespace

TEST(Preamble, DefaultIsSixtyFourUnitPowerQpskSymbols) {
    const auto p = AccessPreamble::make();
    ASSERT_EQ(p.symbols.size(), 64u);
    EXPECT_NEAR(oracle::mean_power(p.symbols), 1.0, 0.1);
    for (const auto& s : p.symbols) EXPECT_NEAR(std::abs(s), 1.0, 1e-12);
    EXPECT_EQ(p.symbols, AccessPreamble::make().symbols);
    EXPECT_NE(p.symbols, AccessPreamble::make(64, Modulation::Qpsk, 7).symbols);
    expect_code(ErrorCode::ConfigError, [] { (void)AccessPreamble::make(8); });
}

TEST(Aser, ExactPreambleHasNoErrors) {
    const auto p = AccessPreamble::make();
    EXPECT_EQ(compute_aser(p.symbols, p), 0.0);
}

TEST(Aser, GlobalPhaseAndScaleAreAbsorbed) {
    const auto p = AccessPreamble::make();
    EXPECT_EQ(compute_aser(scaled(p.symbols, std::polar(3.0, 1.1)), p), 0.0);
    const Sample h = estimate_gain(scaled(p.symbols, std::polar(3.0, 1.1)), p.symbols);
    EXPECT_NEAR(std::abs(h - std::polar(3.0, 1.1)), 0.0, 1e-12);
}

TEST(Aser, InvariantUnderComplexGain) {
    oracle::Gen g(1);
    for (auto mod : {Modulation::Qpsk, Modulation::Qam16, Modulation::Bpsk}) {
        const auto p = AccessPreamble::make(128, mod);
        for (int t = 0; t < 200; ++t) {
            auto rx = p.symbols;
            for (auto& s : rx) s += g.gaussian(0.3);
            const Sample gain = std::polar(g.real(0.01, 100.0), g.real(-oracle::kPi, oracle::kPi));
            ASSERT_EQ(count_symbol_errors(rx, p), count_symbol_errors(scaled(rx, gain), p));
        }
    }
}

TEST(Aser, BoundsAndDegenerateInput) {
    oracle::Gen g(2);
    const auto p = AccessPreamble::make();
    for (int t = 0; t < 100; ++t) {
        const auto rx = g.gaussian_vector(64, g.real(0.1, 10));
        const double a = compute_aser(rx, p);
        ASSERT_GE(a, 0.0);
        ASSERT_LE(a, 1.0);
    }
    EXPECT_EQ(compute_aser(std::vector<Sample>(64), p), 1.0);
    expect_code(ErrorCode::LengthError, [&] { (void)compute_aser(std::vector<Sample>(63), p); });
}

TEST(Aser, QpskOverAwgnMatchesClosedForm) {
    // Es/N0 = 10 dB, 1e5 preamble trials (6.4e6 symbols).
    const double es_n0_db = 10.0;
    const double sigma = std::sqrt(0.5 * std::pow(10.0, -es_n0_db / 10));  // per real dimension
    const auto p = AccessPreamble::make();
    oracle::Gen g(3);
    std::size_t errors = 0;
    std::vector<Sample> rx(p.symbols.size());
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < rx.size(); ++i) rx[i] = p.symbols[i] + g.gaussian(sigma);
        errors += count_symbol_errors(rx, p);
    }
    const double measured = static_cast<double>(errors) / (trials * 64.0);
    const double expected = oracle::qpsk_ser(es_n0_db);
    EXPECT_NEAR(measured / expected, 1.0, 0.10) << measured << " vs " << expected;
}

TEST(Aser, LibraryClosedFormAgreesWithOracle) {
    for (double db : {0.0, 3.0, 6.0, 10.0, 13.0}) {
        EXPECT_NEAR(qpsk_ser(std::pow(10.0, db / 10)), oracle::qpsk_ser(db), 1e-12);
    }
    EXPECT_NEAR(q_function(0.0), 0.5, 1e-15);
    EXPECT_NEAR(q_function(1.0), 0.158655253931457, 1e-12);
}

TEST(Kld, SameDistributionIsNearZero) {
    oracle::Gen g(4);
    for (int t = 0; t < 5; ++t) {
        const auto a = g.gaussian_vector(200000), b = g.gaussian_vector(200000);
        EXPECT_LT(compute_kld(a, b), 0.01);
    }
}

TEST(Kld, IdenticalInputIsZero) {
    oracle::Gen g(5);
    const auto a = g.gaussian_vector(20000);
    EXPECT_NEAR(compute_kld(a, a), 0.0, 1e-12);
}

TEST(Kld, GaussianMeanOffsetMatchesAnalytic) {
    oracle::Gen g(6);
    for (double d : {0.5, 1.0}) {
        const auto ref = shifted_gaussian(g, 400000, 0.0);
        const auto rx = shifted_gaussian(g, 400000, d);
        const double est = compute_kld(rx, ref);
        EXPECT_NEAR(est, d * d / 2, 0.2 * d * d / 2) << d;
    }
}

TEST(Kld, DisjointSupportIsLargeAndBounded) {
    const auto p = AccessPreamble::make(64);
    std::vector<Sample> ref, rx;
    for (int r = 0; r < 400; ++r) ref.insert(ref.end(), p.symbols.begin(), p.symbols.end());
    // Everything clamps to one far corner bin.
    rx.assign(ref.size(), Sample(1e3, 1e3));
    const KldOptions o;
    const double k = compute_kld(rx, ref, o);
    EXPECT_LE(k, kld_upper_bound(o));
    EXPECT_LT(kld_upper_bound(o), std::log(1.0 / o.smoothing));
    EXPECT_GT(k, 0.9 * kld_upper_bound(o));
    // Oracle for the bound: all rx mass in one bin that ref leaves empty.
    const double eps = o.smoothing, bins = static_cast<double>(o.bins_per_axis * o.bins_per_axis);
    EXPECT_NEAR(kld_upper_bound(o), (1 + eps) / (1 + bins * eps) * std::log((1 + eps) / eps), 1e-9);
}

TEST(Kld, AlwaysNonNegativeAndAsymmetric) {
    oracle::Gen g(7);
    for (int t = 0; t < 30; ++t) {
        const auto a = shifted_gaussian(g, 20000, g.real(0, 2));
        const auto b = g.gaussian_vector(20000, g.real(0.5, 2));
        ASSERT_GE(compute_kld(a, b), 0.0);
    }
    const auto a = shifted_gaussian(g, 100000, 0.0);
    const auto wide = g.gaussian_vector(100000, 2.0);
    EXPECT_GT(std::abs(compute_kld(a, wide) - compute_kld(wide, a)), 0.05);
}

TEST(Kld, RequiresEnoughSamples) {
    const std::vector<Sample> small(10 * 32 * 32 - 1), enough(10 * 32 * 32, Sample(1, 0));
    expect_code(ErrorCode::InsufficientData, [&] { (void)compute_kld(small, enough); });
    expect_code(ErrorCode::InsufficientData, [&] { (void)compute_kld(enough, small); });
    KldOptions coarse;
    coarse.bins_per_axis = 8;
    (void)compute_kld(std::vector<Sample>(640, Sample(1, 0)), std::vector<Sample>(640, Sample(1, 0)), coarse);
}

TEST(Kld, GrowsWithInterferencePower) {
    // QPSK cloud plus noise of rising power: divergence from the clean
    // cloud never decreases.
    const auto p = AccessPreamble::make();
    oracle::Gen g(8);
    std::vector<Sample> ref;
    for (int r = 0; r < 500; ++r)
        for (const auto& s : p.symbols) ref.push_back(s + g.gaussian(0.1));
    double last = 0.0;
    for (double db = -20; db <= 10; db += 5) {
        const double sigma = std::sqrt(0.5 * std::pow(10.0, db / 10));
        std::vector<Sample> rx;
        for (int r = 0; r < 500; ++r)
            for (const auto& s : p.symbols) rx.push_back(s + g.gaussian(0.1) + g.gaussian(sigma));
        const double k = compute_kld(rx, ref);
        EXPECT_GE(k, last - 0.02) << db;
        last = k;
    }
}

TEST(Records, JsonRoundTrip) {
    MetricsRecord r;
    r.timestamp = 3.0;
    r.window = 3;
    r.aser = 0.125;
    r.kld = 1.5;
    r.throughput = 4096;
    r.frames_sent = 10;
    r.frames_delivered = 4;
    r.interference_on = true;
    r.context = {{"scene", "scenario1"}};
    const auto back = metrics_record_from_json(to_json(r));
    EXPECT_EQ(back.window, 3);
    EXPECT_EQ(back.aser, 0.125);
    EXPECT_EQ(back.kld, 1.5);
    EXPECT_EQ(back.throughput, 4096);
    EXPECT_EQ(back.frames_delivered, 4u);
    EXPECT_TRUE(back.interference_on);
    EXPECT_EQ(back.context["scene"], "scenario1");

    r.kld.reset();
    EXPECT_FALSE(metrics_record_from_json(to_json(r)).kld.has_value());
}
