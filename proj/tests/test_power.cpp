#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "stormbench/power.hpp"
#include "support.hpp"

using namespace stormbench;

namespace {

struct FakeClock {
    double now = 0.0;
    PowerModel::Clock fn() {
        return [this] { return now; };
    }
};

}  // namespace

TEST(Power, FullPackAtNominalLoadLastsTwoHours) {
    PowerModel p;
    const auto s = p.status();
    EXPECT_EQ(s.battery_fraction, 1.0);
    EXPECT_NEAR(s.estimated_runtime, 7200.0, 1.0);
    EXPECT_EQ(s.load, 500.0);
}

TEST(Power, RuntimeIsInverseInLoad) {
    oracle::Gen g(1);
    PowerModel p;
    for (int t = 0; t < 200; ++t) {
        const double f = g.real(0.01, 1.0), w = g.real(1.0, 5000.0);
        p.set_fraction(f);
        p.set_load(w);
        const double runtime = p.status().estimated_runtime;
        EXPECT_NEAR(runtime, f * 3.6e6 / w, 1e-6 * runtime);
        p.set_load(2 * w);
        EXPECT_NEAR(p.status().estimated_runtime, runtime / 2, 1e-6 * runtime);
    }
}

TEST(Power, EmptyPackReportsZeroAndFiresOnce) {
    PowerModel p;
    int fired = 0;
    p.on_exhausted([&] { ++fired; });
    p.set_fraction(0.0);
    for (int i = 0; i < 3; ++i) {
        const auto s = p.status();
        EXPECT_EQ(s.battery_fraction, 0.0);
        EXPECT_EQ(s.estimated_runtime, 0.0);
    }
    EXPECT_EQ(fired, 1);
}

TEST(Power, DrainsOnlyWhileEnabled) {
    FakeClock clock;
    PowerModel p(PowerConfig{}, clock.fn());
    clock.now = 100;
    EXPECT_EQ(p.status().battery_fraction, 1.0);
    p.set_draining(true);
    clock.now = 100 + 3600;  // half the pack
    EXPECT_NEAR(p.status().battery_fraction, 0.5, 1e-12);
    EXPECT_NEAR(p.status().estimated_runtime, 3600.0, 1e-6);
    p.set_draining(false);
    clock.now += 1000;
    EXPECT_NEAR(p.status().battery_fraction, 0.5, 1e-12);
}

TEST(Power, ChargeNeverGoesNegativeAndCallbackFiresWhenDrained) {
    FakeClock clock;
    PowerModel p(PowerConfig{1000.0, 10.0}, clock.fn());
    int fired = 0;
    p.on_exhausted([&] { ++fired; });
    p.set_draining(true);
    clock.now = 50;
    EXPECT_NEAR(p.status().battery_fraction, 0.5, 1e-12);
    EXPECT_EQ(fired, 0);
    clock.now = 500;
    EXPECT_EQ(p.status().battery_fraction, 0.0);
    clock.now = 600;
    EXPECT_EQ(p.status().estimated_runtime, 0.0);
    EXPECT_EQ(fired, 1);
}

TEST(Power, LoadChangeMidDrainAppliesFromThatMoment) {
    FakeClock clock;
    PowerModel p(PowerConfig{1000.0, 10.0}, clock.fn());
    p.set_draining(true);
    clock.now = 20;  // 200 J used
    p.set_load(40.0);
    clock.now = 30;  // 400 J more
    EXPECT_NEAR(p.status().battery_fraction, 0.4, 1e-12);
    EXPECT_NEAR(p.status().estimated_runtime, 10.0, 1e-9);
}

TEST(Power, RejectsBadInputs) {
    PowerModel p;
    expect_code(ErrorCode::RangeError, [&] { p.set_load(0.0); });
    expect_code(ErrorCode::RangeError, [&] { p.set_load(-5.0); });
    expect_code(ErrorCode::RangeError, [&] { p.set_fraction(-0.01); });
    expect_code(ErrorCode::RangeError, [&] { p.set_fraction(1.01); });
    p.set_fraction(1.0);
    p.set_fraction(0.0);
}

TEST(Power, StatusJsonShape) {
    PowerModel p;
    const auto j = to_json(p.status());
    EXPECT_EQ(j["battery_fraction"], 1.0);
    EXPECT_NEAR(j["estimated_runtime"].get<double>(), 7200.0, 1.0);
    EXPECT_EQ(j["load"], 500.0);
}
