#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "stormbench/constellation.hpp"
#include "stormbench/error.hpp"
#include "stormbench/iq_buffer.hpp"
#include "stormbench/nco.hpp"
#include "stormbench/pulse_shape.hpp"
#include "stormbench/spectrum.hpp"
#include "support.hpp"

using namespace stormbench;

namespace {

std::vector<std::uint8_t> bits_of(std::uint32_t label, unsigned n) {
    std::vector<std::uint8_t> b(n);
    for (unsigned i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>((label >> (n - 1 - i)) & 1u);
    return b;
}

int expect_code(ErrorCode code, const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        return 1;
    }
    ADD_FAILURE() << "no error thrown";
    return 0;
}

}  // namespace

TEST(Constellation, UnitAveragePowerForEveryModulation) {
    for (auto m : all_modulations()) {
        Constellation c(m);
        double p = 0.0;
        for (const auto& pt : c.points()) p += std::norm(pt);
        EXPECT_NEAR(p / static_cast<double>(c.size()), 1.0, 1e-12) << to_string(m);
    }
}

TEST(Constellation, PointCountMatchesBitsPerSymbol) {
    const std::map<Modulation, unsigned> bits{{Modulation::Bpsk, 1}, {Modulation::Qpsk, 2}, {Modulation::Qam8, 3},
                                              {Modulation::Qam16, 4}, {Modulation::Qam64, 6}};
    for (auto [m, k] : bits) {
        Constellation c(m);
        EXPECT_EQ(c.bits_per_symbol(), k);
        EXPECT_EQ(c.size(), std::size_t{1} << k);
    }
}

TEST(Constellation, BitMapIsBijective) {
    for (auto m : all_modulations()) {
        Constellation c(m);
        std::set<std::pair<double, double>> seen;
        for (std::uint32_t label = 0; label < c.size(); ++label) {
            const auto pts = c.map_bits(bits_of(label, c.bits_per_symbol()));
            ASSERT_EQ(pts.size(), 1u);
            seen.insert({pts[0].real(), pts[0].imag()});
            EXPECT_EQ(c.decide(pts[0]), label);
        }
        EXPECT_EQ(seen.size(), c.size()) << to_string(m);
    }
}

TEST(Constellation, NearestNeighboursDifferInOneBit) {
    for (auto m : all_modulations()) {
        Constellation c(m);
        const auto pts = c.points();
        double dmin = 1e300;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
        int pairs = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                if (std::abs(pts[i] - pts[j]) > dmin * (1 + 1e-9)) continue;
                ++pairs;
                EXPECT_EQ(__builtin_popcount(static_cast<unsigned>(i ^ j)), 1)
                    << to_string(m) << " labels " << i << " and " << j;
            }
        }
        EXPECT_GT(pairs, 0);
    }
}

TEST(Constellation, GrayCodeRoundTrip) {
    for (std::uint32_t v = 0; v < 1024; ++v) {
        EXPECT_EQ(gray_decode(gray_encode(v)), v);
        EXPECT_EQ(__builtin_popcount(gray_encode(v) ^ gray_encode(v + 1)), 1);
    }
}

TEST(MapBits, BpskIsAntipodal) {
    Constellation c(Modulation::Bpsk);
    const std::vector<std::uint8_t> bits{0, 1};
    const auto s = c.map_bits(bits);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], Sample(1.0, 0.0));
    EXPECT_EQ(s[1], Sample(-1.0, 0.0));
}

TEST(MapBits, QpskZeroBitsHaveUnitMagnitude) {
    Constellation c(Modulation::Qpsk);
    const std::vector<std::uint8_t> bits{0, 0};
    const auto s = c.map_bits(bits);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], c.point(0));
    EXPECT_NEAR(std::abs(s[0]), 1.0, 1e-15);
}

TEST(MapBits, Qam16LatticeAverageFromScaledIntegers) {
    // Oracle: the 16 points of {-3,-1,1,3}^2 scaled by 1/sqrt(10).
    double oracle_power = 0.0;
    for (int i : {-3, -1, 1, 3})
        for (int q : {-3, -1, 1, 3}) oracle_power += (i * i + q * q) / 10.0;
    oracle_power /= 16.0;
    EXPECT_NEAR(oracle_power, 1.0, 1e-12);

    Constellation c(Modulation::Qam16);
    std::vector<std::uint8_t> bits;
    for (std::uint32_t l = 0; l < 16; ++l) {
        auto b = bits_of(l, 4);
        bits.insert(bits.end(), b.begin(), b.end());
    }
    const auto s = c.map_bits(bits);
    ASSERT_EQ(s.size(), 16u);
    double p = 0.0;
    std::set<std::pair<int, int>> lattice;
    for (const auto& v : s) {
        p += std::norm(v);
        lattice.insert({static_cast<int>(std::lround(v.real() * std::sqrt(10.0))),
                        static_cast<int>(std::lround(v.imag() * std::sqrt(10.0)))});
    }
    EXPECT_NEAR(p / 16.0, oracle_power, 1e-12);
    EXPECT_EQ(lattice.size(), 16u);
}

TEST(MapBits, IndivisibleBitCountIsALengthError) {
    Constellation c(Modulation::Qam8);
    const std::vector<std::uint8_t> bits{0, 1, 1, 0};
    expect_code(ErrorCode::LengthError, [&] { (void)c.map_bits(bits); });
}

TEST(MapBits, OutputLengthIsBitsOverBitsPerSymbol) {
    oracle::Gen g(3);
    for (auto m : all_modulations()) {
        Constellation c(m);
        const std::size_t n = c.bits_per_symbol() * g.size(1, 200);
        std::vector<std::uint8_t> bits(n);
        for (auto& b : bits) b = g.coin() ? 1 : 0;
        EXPECT_EQ(c.map_bits(bits).size(), n / c.bits_per_symbol());
    }
}

TEST(PulseShape, SingleSymbolGivesFilterImpulseResponse) {
    const PulseShape shape{8, 0.35, 8};
    const std::vector<Sample> one{Sample(1.0, 0.0)};
    const auto out = pulse_shape(one, shape, 1e6);
    const auto taps = pulse_taps(shape);
    // n*sps + taps - 1 samples; the tail past the filter is zero.
    ASSERT_EQ(out.size(), 8 + taps->size() - 1);
    const double scale = std::sqrt(8.0);
    for (std::size_t i = 0; i < taps->size(); ++i) EXPECT_NEAR(out[i].real(), (*taps)[i] * scale, 1e-15);
    for (std::size_t i = taps->size(); i < out.size(); ++i) EXPECT_EQ(out[i], Sample{});
    std::size_t peak = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (std::abs(out[i]) > std::abs(out[peak])) peak = i;
    EXPECT_EQ(peak, (taps->size() - 1) / 2);
}

TEST(PulseShape, TapsAreUnitEnergyAndSymmetric) {
    for (int sps : {2, 4, 8, 16}) {
        const PulseShape shape{sps, 0.35, 8};
        const auto& t = *pulse_taps(shape);
        double e = 0.0;
        for (double v : t) e += v * v;
        EXPECT_NEAR(e, 1.0, 1e-12);
        for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(t[i], t[t.size() - 1 - i]);
    }
}

TEST(PulseShape, EmptySymbolsGiveEmptyBuffer) {
    const auto out = pulse_shape(std::span<const Sample>{}, PulseShape{}, 1e6);
    EXPECT_TRUE(out.empty());
}

TEST(PulseShape, RejectsBadShapes) {
    const std::vector<Sample> one{Sample(1.0, 0.0)};
    expect_code(ErrorCode::ConfigError, [&] { (void)pulse_shape(one, PulseShape{1, 0.35, 8}, 1e6); });
    expect_code(ErrorCode::ConfigError, [&] { (void)pulse_shape(one, PulseShape{4, 1.5, 8}, 1e6); });
}

TEST(PulseShape, LoopbackRecoversSymbolsForEveryModulation) {
    oracle::Gen g(11);
    for (int sps : {4, 8}) {
        const PulseShape shape{sps, 0.35, 8};
        for (auto m : all_modulations()) {
            Constellation c(m);
            std::vector<Sample> sym(500);
            for (auto& s : sym) s = c.point(static_cast<std::uint32_t>(g.size(0, c.size() - 1)));
            const auto tx = pulse_shape(sym, shape, 1e6);
            const auto rx = matched_filter(tx.samples(), sym.size(), shape);
            ASSERT_EQ(rx.size(), sym.size());
            double worst = 0.0;
            std::size_t errors = 0;
            for (std::size_t k = 0; k < sym.size(); ++k) {
                worst = std::max(worst, std::abs(rx[k] - sym[k]));
                if (c.decide(rx[k]) != c.decide(sym[k])) ++errors;
            }
            EXPECT_LT(worst, 1e-6) << to_string(m) << " sps " << sps;
            EXPECT_EQ(errors, 0u);
        }
    }
}

TEST(PulseShape, AlternatingBpskLoopbackHasNoErrors) {
    const PulseShape shape{8, 0.35, 8};
    std::vector<Sample> sym(256);
    for (std::size_t k = 0; k < sym.size(); ++k) sym[k] = (k % 2 == 0) ? 1.0 : -1.0;
    const auto tx = pulse_shape(sym, shape, 1e6);
    const auto rx = matched_filter(tx.samples(), sym.size(), shape);
    for (std::size_t k = 0; k < sym.size(); ++k) EXPECT_EQ(rx[k].real() > 0, sym[k].real() > 0);
}

TEST(PulseShape, OccupiedBandwidthMatchesRaisedCosineIntegral) {
    // Oracle: 99% power bandwidth of a raised-cosine spectrum, by numerically
    // integrating the RC shape for the chosen rolloff.
    const double beta = 0.35;
    auto rc = [&](double f) {  // f in units of the symbol rate
        const double a = std::abs(f);
        if (a <= (1 - beta) / 2) return 1.0;
        if (a >= (1 + beta) / 2) return 0.0;
        return 0.5 * (1 + std::cos(oracle::kPi / beta * (a - (1 - beta) / 2)));
    };
    const int n = 200000;
    const double fmax = (1 + beta) / 2, df = fmax / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += rc((i + 0.5) * df) * df;
    double tail = 0.0, edge = fmax;
    for (int i = n - 1; i >= 0; --i) {
        tail += rc((i + 0.5) * df) * df;
        if (tail > 0.005 * total) {
            edge = (i + 1) * df;
            break;
        }
    }
    const double oracle_bw = 2 * edge;  // about 1.17 Rs at rolloff 0.35

    oracle::Gen g(5);
    const double fs = 1e6, rs = 125e3;
    const PulseShape shape{8, beta, 8};
    Constellation c(Modulation::Qpsk);
    std::vector<Sample> sym(40000);
    for (auto& s : sym) s = c.point(static_cast<std::uint32_t>(g.size(0, 3)));
    const auto tx = pulse_shape(sym, shape, fs);
    PsdOptions po;
    po.fft_size = 4096;
    const auto frame = compute_psd(tx, po);
    const double bw = occupied_bandwidth(frame, 0.99);
    EXPECT_NEAR(bw / rs, oracle_bw, 0.10 * oracle_bw);
    EXPECT_LT(bw, rs * (1 + beta));
}

TEST(Mix, ZeroOffsetZeroPhaseIsIdentity) {
    oracle::Gen g(1);
    IqBuffer b(g.gaussian_vector(100), 1e6, 42);
    const auto r = mix(b, 0.0, 0.0);
    ASSERT_EQ(r.buffer.size(), b.size());
    EXPECT_EQ(r.buffer.start_timestamp(), 42);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(r.buffer[i], b[i]);
}

TEST(Mix, ConstantInputBecomesToneAtOffset) {
    const double fs = 1e6, f = 125e3;
    IqBuffer ones(std::vector<Sample>(8192, Sample(1.0, 0.0)), fs);
    const auto r = mix(ones, f, 0.0);
    const auto frame = compute_psd(r.buffer);
    EXPECT_NEAR(frame.frequency(peak_bin(frame)), f, frame.bin_spacing);
    for (std::size_t n = 0; n < 100; ++n) {
        const double a = 2 * oracle::kPi * f * static_cast<double>(n) / fs;
        EXPECT_NEAR(std::abs(r.buffer[n] - Sample(std::cos(a), std::sin(a))), 0.0, 1e-12);
    }
}

TEST(Mix, ChainedCallsMatchOneCall) {
    oracle::Gen g(2);
    const auto x = g.gaussian_vector(3000);
    const double f = 33333.3, phase0 = 0.7;
    const auto whole = mix(IqBuffer(x, 1e6), f, phase0);
    const std::vector<Sample> a(x.begin(), x.begin() + 1234), b(x.begin() + 1234, x.end());
    const auto first = mix(IqBuffer(a, 1e6), f, phase0);
    const auto second = mix(IqBuffer(b, 1e6, 1234), f, first.final_phase);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(first.buffer[i] - whole.buffer[i]), 0.0, 1e-9);
    for (std::size_t i = 0; i < b.size(); ++i)
        EXPECT_NEAR(std::abs(second.buffer[i] - whole.buffer[a.size() + i]), 0.0, 1e-9);
}

TEST(Mix, PreservesMagnitudeExactly) {
    oracle::Gen g(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = g.gaussian_vector(g.size(1, 500));
        const auto r = mix(IqBuffer(x, 1e6), g.real(-4.9e5, 4.9e5), g.real(-3, 3));
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(std::abs(r.buffer[i]), std::abs(x[i]), 1e-12 * (1 + std::abs(x[i])));
    }
}

TEST(Mix, OffsetBeyondNyquistIsARangeError) {
    IqBuffer b(std::vector<Sample>(4), 1e6);
    expect_code(ErrorCode::RangeError, [&] { (void)mix(b, 5e5, 0.0); });
    expect_code(ErrorCode::RangeError, [&] { (void)mix(b, -6e5, 0.0); });
}

TEST(ApplyGain, ZeroDbIsIdentity) {
    oracle::Gen g(4);
    IqBuffer b(g.gaussian_vector(64), 1e6);
    const auto r = apply_gain(b, GainSetting(0.0));
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(r[i], b[i]);
}

TEST(ApplyGain, TwentyDbIsAmplitudeTen) {
    IqBuffer b(std::vector<Sample>{Sample(0.5, -0.25)}, 1e6);
    const auto r = apply_gain(b, GainSetting(20.0));
    EXPECT_NEAR(r[0].real(), 5.0, 1e-12);
    EXPECT_NEAR(r[0].imag(), -2.5, 1e-12);
}

TEST(ApplyGain, FiveDbScalesUnitPowerToTenToTheHalf) {
    std::vector<Sample> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::polar(1.0, 0.01 * static_cast<double>(i));
    const auto r = apply_gain(IqBuffer(x, 1e6), GainSetting(5.0));
    EXPECT_NEAR(r.mean_power(), std::pow(10.0, 0.5), 1e-6);
    EXPECT_NEAR(r.mean_power(), 3.1623, 1e-4);
}

TEST(ApplyGain, InverseGainRestoresInput) {
    oracle::Gen g(6);
    for (int trial = 0; trial < 50; ++trial) {
        IqBuffer b(g.gaussian_vector(g.size(1, 100)), 1e6);
        const double db = g.real(-40, 40);
        const auto r = apply_gain(apply_gain(b, GainSetting(db)), GainSetting(-db));
        for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(std::abs(r[i] - b[i]), 0.0, 1e-12 * (1 + std::abs(b[i])));
    }
}

TEST(ApplyGain, NonFiniteGainRejected) {
    expect_code(ErrorCode::RangeError, [] { GainSetting g(std::nan("")); });
}

TEST(IqBuffer, RejectsNonPositiveSampleRate) {
    expect_code(ErrorCode::ConfigError, [] { IqBuffer b({}, 0.0); });
    expect_code(ErrorCode::ConfigError, [] { IqBuffer b({}, -1.0); });
}

TEST(IqBuffer, ContiguityFollowsTimestamps) {
    IqBuffer a(std::vector<Sample>(10), 1e6, 100);
    IqBuffer b(std::vector<Sample>(5), 1e6, 110);
    IqBuffer c(std::vector<Sample>(5), 1e6, 111);
    EXPECT_TRUE(is_contiguous(a, b));
    EXPECT_FALSE(is_contiguous(a, c));
    EXPECT_EQ(b.end_timestamp(), 115);
}

TEST(PulseShaper, StreamingMatchesBatchForRandomBlockSizes) {
    oracle::Gen g(21);
    const PulseShape shape{4, 0.35, 8};
    Constellation c(Modulation::Qam16);
    std::vector<Sample> sym(700);
    for (auto& s : sym) s = c.point(static_cast<std::uint32_t>(g.size(0, 15)));
    const auto batch = pulse_shape(sym, shape, 1e6);
    PulseShaper shaper(shape);
    std::vector<Sample> streamed;
    for (const auto& s : sym) shaper.push(s, streamed);
    ASSERT_EQ(streamed.size(), sym.size() * 4);
    for (std::size_t i = 0; i < streamed.size(); ++i) EXPECT_EQ(streamed[i], batch[i]);
}
