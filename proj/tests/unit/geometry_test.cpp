#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ftl/geometry.hpp"
#include "oracles.hpp"

namespace ftl {
namespace {

ApparatusGeometry triangle(double s, double i, double c = 1.0) {
    ApparatusGeometry g;
    g.leg_s = s;
    g.leg_i = i;
    g.pump_arm_r = 1.0;
    g.light_speed_c = c;
    return g;
}

TEST(VMax, FigureOneGeometryIsCSqrtFive) {
    EXPECT_NEAR(v_max(triangle(2.0, 1.0)), std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(v_max(triangle(2.0, 1.0, 3.0)), 3.0 * std::sqrt(5.0), 1e-12);
}

TEST(VMax, NoIdlerSeparationGivesLightSpeed) {
    EXPECT_EQ(v_max(triangle(1.0, 0.0)), 1.0);
}

TEST(VMax, ExtendedPrecisionAgreement) {
    EXPECT_NEAR(v_max(triangle(3.0, 1.0)), static_cast<double>(oracle::v_max_ld(3, 1, 1)), 1e-15);
    EXPECT_NEAR(v_max(triangle(3.0, 1.0)), std::sqrt(10.0) / 2.0, 1e-15);
}

TEST(VMax, DegenerateLegsRaiseDistinctErrors) {
    EXPECT_THROW(v_max(triangle(1.0, 1.0)), SingularGeometry);
    EXPECT_THROW(v_max(triangle(1.0, 1.5)), ReversedGeometry);
    EXPECT_THROW(v_min(triangle(1.0, 1.0)), SingularGeometry);
    EXPECT_THROW(v_min(triangle(1.0, 1.5)), ReversedGeometry);
}

TEST(VMax, ExceedsLightSpeedExactlyForProperIdlerLeg) {
    for (int a = 1; a <= 20; ++a) {
        for (int b = 0; b <= 25; ++b) {
            const double s = a * 0.5;
            const double i = b * 0.4;
            const auto g = triangle(s, i, 1.5);
            if (i >= s) {
                EXPECT_ANY_THROW(v_max(g));
                continue;
            }
            EXPECT_EQ(v_max(g) > g.light_speed_c, i > 0.0) << s << ' ' << i;
        }
    }
}

TEST(Geometry, ValidationRejectsBadFields) {
    auto g = triangle(2.0, 1.0);
    g.pump_arm_r = 0.0;
    EXPECT_THROW(g.validate(), ValidationError);
    g = triangle(2.0, 1.0);
    g.intensity_I = -1.0;
    EXPECT_THROW(g.validate(), ValidationError);
    g = triangle(2.0, 1.0);
    g.electronics_T0 = -1e-3;
    EXPECT_THROW(g.validate(), ValidationError);
    g = triangle(2.0, -0.1);
    EXPECT_THROW(g.validate(), ValidationError);
}

TEST(VMin, EqualsVMaxWithoutOverheads) {
    const auto g = triangle(2.0, 1.0);
    EXPECT_EQ(v_min(g), v_max(g));
}

TEST(VMin, ChargesEveryLatency) {
    auto g = triangle(2.0, 1.0);
    g.detector_k = 1.0;  // k r^2 / I = 1
    g.pump_arm_r = 1.0;
    g.intensity_I = 1.0;
    g.raise_time_T = 0.5;
    g.electronics_T0 = 0.5;
    const long double expected = oracle::v_min_ld(2, 1, 1, 1.0L + 0.5L + 0.5L);
    EXPECT_NEAR(v_min(g), static_cast<double>(expected), 1e-15);
    EXPECT_NEAR(v_min(g), std::sqrt(5.0) / 3.0, 1e-15);
}

TEST(VMin, DegeneratesToLightSpeed) {
    EXPECT_EQ(v_min(triangle(2.0, 0.0)), 1.0);
}

TEST(VMin, NeverExceedsVMax) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 2000; ++n) {
        ApparatusGeometry g;
        g.leg_s = 0.1 + 5.0 * u(rng);
        g.leg_i = g.leg_s * 0.99 * u(rng);
        g.pump_arm_r = 0.1 + 3.0 * u(rng);
        g.detector_k = u(rng);
        g.intensity_I = 0.1 + u(rng);
        g.raise_time_T = u(rng);
        g.electronics_T0 = u(rng);
        g.light_speed_c = 0.5 + u(rng);
        ASSERT_LE(v_min(g), v_max(g));
    }
}

TEST(VMin, MonotoneInEachOverhead) {
    const double h = 1e-3;
    for (double k : {0.0, 0.5, 2.0}) {
        for (double r : {0.5, 1.0, 2.0}) {
            for (double intensity : {0.5, 1.0, 4.0}) {
                for (double t : {0.0, 0.3}) {
                    for (double t0 : {0.0, 0.7}) {
                        ApparatusGeometry g = triangle(2.0, 1.0);
                        g.detector_k = k;
                        g.pump_arm_r = r;
                        g.intensity_I = intensity;
                        g.raise_time_T = t;
                        g.electronics_T0 = t0;
                        const double base = v_min(g);

                        auto bumped = g;
                        bumped.detector_k += h;
                        EXPECT_LT(v_min(bumped), base);
                        bumped = g;
                        bumped.pump_arm_r += h;
                        if (k > 0.0) {
                            EXPECT_LT(v_min(bumped), base);
                        } else {
                            EXPECT_EQ(v_min(bumped), base);
                        }
                        bumped = g;
                        bumped.raise_time_T += h;
                        EXPECT_LT(v_min(bumped), base);
                        bumped = g;
                        bumped.electronics_T0 += h;
                        EXPECT_LT(v_min(bumped), base);
                        bumped = g;
                        bumped.intensity_I += h;
                        if (k > 0.0) {
                            EXPECT_GT(v_min(bumped), base);
                        } else {
                            EXPECT_EQ(v_min(bumped), base);
                        }
                    }
                }
            }
        }
    }
}

TEST(VMin, ApproachesVMaxAsOverheadsVanish) {
    auto g = triangle(2.0, 1.0);
    const double top = v_max(g);
    double previous = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= 10; ++n) {
        const double overhead = std::pow(10.0, -n);
        g.detector_k = overhead / 3.0;  // r = I = 1
        g.raise_time_T = overhead / 3.0;
        g.electronics_T0 = overhead / 3.0;
        const double gap = std::abs(v_min(g) - top);
        EXPECT_LT(gap, previous);
        previous = gap;
    }
    EXPECT_LT(previous, 1e-9 * top);
}

TEST(Feasible, StrictInequality) {
    auto g = triangle(2.0, 1.0);
    g.pump_arm_r = 1.0;
    g.electronics_T0 = 1.0;
    EXPECT_TRUE(feasible(g));
    g.pump_arm_r = 0.5;
    EXPECT_FALSE(feasible(g));
    g.pump_arm_r = 1.0;
    g.electronics_T0 = std::sqrt(2.0);
    EXPECT_FALSE(feasible(g));
}

// v_min > c forces c T0 < sqrt(s^2+i^2) - (s-i) < sqrt(2) s, so the pump-arm
// bound is necessary whenever the signal leg is no longer than the pump arm.
TEST(Feasible, NecessaryForSuperluminalVMinWhenLegFitsPumpArm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int superluminal = 0;
    for (int n = 0; n < 20000; ++n) {
        ApparatusGeometry g;
        g.pump_arm_r = 0.1 + 3.0 * u(rng);
        g.leg_s = g.pump_arm_r * (0.05 + 0.95 * u(rng));
        g.leg_i = g.leg_s * 0.999 * u(rng);
        g.detector_k = 0.2 * u(rng) * u(rng);
        g.intensity_I = 0.5 + u(rng);
        g.raise_time_T = 0.2 * u(rng) * u(rng);
        g.electronics_T0 = 3.0 * u(rng);
        g.light_speed_c = 0.5 + u(rng);
        if (v_min(g) > g.light_speed_c) {
            ++superluminal;
            ASSERT_TRUE(feasible(g));
        }
    }
    EXPECT_GT(superluminal, 100);
}

TEST(Feasible, NotNecessaryWhenSignalLegOutgrowsPumpArm) {
    ApparatusGeometry g = triangle(10.0, 9.0);
    g.pump_arm_r = 0.01;
    g.electronics_T0 = 1.0;
    EXPECT_GT(v_min(g), g.light_speed_c);
    EXPECT_FALSE(feasible(g));
}

}  // namespace
}  // namespace ftl
