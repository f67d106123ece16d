#include <gtest/gtest.h>

#include <cmath>

#include "bound_generator.hpp"
#include "ftl/protocol.hpp"

namespace ftl {
namespace {

CycleSchedule schedule(double a, std::vector<double> standby, double w = 0.0) {
    CycleSchedule s;
    s.action = Seconds{a};
    for (const double x : standby) {
        s.standby.push_back(Seconds{x});
    }
    s.waiting = WaitingRule::fixed(Seconds{w});
    return s;
}

AlarmLog log_at(std::vector<std::int64_t> ns) {
    AlarmLog log;
    for (const auto t : ns) {
        log.alarm_times.push_back(Nanos{t});
    }
    return log;
}

ApparatusGeometry figure_one(double r = 0.25) {
    ApparatusGeometry g;
    g.leg_s = 2.0;
    g.leg_i = 1.0;
    g.pump_arm_r = r;
    g.raise_time_T = 1e-3;
    return g;
}

// --- count_alarms ------------------------------------------------------------

TEST(CountAlarms, EmptyLog) {
    EXPECT_EQ(count_alarms(AlarmLog{}, schedule(0.01, {1.0}), 1.0, 0.25), (AlarmCounts{0, 0}));
}

TEST(CountAlarms, AlarmAtArrivalEdge) {
    // r/V = 0.25 s sits in (0, r/V] and never in the left-open (r/V, r/V+w].
    for (const double w : {0.0, 0.01, 0.1}) {
        const auto c = count_alarms(log_at({250'000'000}), schedule(0.01, {1.0}, w), 1.0, 0.25);
        EXPECT_EQ(c, (AlarmCounts{1, 1})) << w;
    }
    // One nanosecond later falls inside the waiting window when w > 0.
    EXPECT_EQ(count_alarms(log_at({250'000'001}), schedule(0.01, {1.0}, 0.01), 1.0, 0.25),
              (AlarmCounts{0, 0}));
    EXPECT_EQ(count_alarms(log_at({250'000'001}), schedule(0.01, {1.0}, 0.0), 1.0, 0.25),
              (AlarmCounts{1, 0}));
}

TEST(CountAlarms, MixedIntervals) {
    const double a = 0.01;
    const double s = 1.0;
    const double w = 0.02;
    const double arrival = 0.25;
    const std::int64_t delta = 1000;
    const auto ns = [](double t) { return static_cast<std::int64_t>(std::llround(t * 1e9)); };
    const auto log = log_at({ns(arrival) - delta, ns(arrival + w / 2), ns(a + s) - delta});
    EXPECT_EQ(count_alarms(log, schedule(a, {s}, w), 1.0, arrival), (AlarmCounts{2, 1}));
}

TEST(CountAlarms, CycleEdges) {
    const auto sched = schedule(0.01, {0.5, 1.0});
    // The cycle end a+s is included, anything later is not.
    EXPECT_EQ(count_alarms(log_at({1'010'000'000}), sched, 1.0, 0.25).q, 1u);
    EXPECT_EQ(count_alarms(log_at({1'010'000'001}), sched, 1.0, 0.25).q, 0u);
    // Truncating to a lower standby level.
    EXPECT_EQ(count_alarms(log_at({600'000'000}), sched, 1.0, 0.25, Seconds{0.5}).q, 0u);
    EXPECT_EQ(count_alarms(log_at({0}), sched, 1.0, 0.25), (AlarmCounts{0, 0}));
}

TEST(CountAlarms, ProbeTooSlowForCycle) {
    EXPECT_THROW(count_alarms(AlarmLog{}, schedule(0.01, {0.2}), 1.0, 0.25), WindowError);
    EXPECT_THROW(count_alarms(AlarmLog{}, schedule(0.01, {1.0}), 0.1, 0.25), WindowError);
}

TEST(WaitingRule, ConstantEdgeIsIndependentOfSpeed) {
    const auto rule = WaitingRule::constant_edge(Seconds{0.6});
    const double r = 0.25;
    for (const double v : {0.5, 1.0, 2.0, std::sqrt(5.0)}) {
        const Seconds w = rule.waiting(v, r);
        EXPECT_GE(w, Seconds{0});
        EXPECT_NEAR((Seconds{r / v} + w).count(), 0.6, 1e-15) << v;
    }
    EXPECT_THROW(rule.waiting(0.25, r), WindowError);
}

TEST(CycleSchedule, Validation) {
    EXPECT_NO_THROW(schedule(0.01, {0.1, 0.5, 1.0}).validate());
    EXPECT_THROW(schedule(0.0, {1.0}).validate(), ConfigError);
    EXPECT_THROW(schedule(0.01, {0.5, 0.5}).validate(), ConfigError);
    EXPECT_THROW(schedule(0.01, {}).validate(), ConfigError);
    EXPECT_THROW(schedule(0.01, {1.0}, -0.1).validate(), ConfigError);
    auto s = schedule(0.01, {1.0});
    s.probe_speeds = {1.0, 0.0};
    EXPECT_THROW(s.validate(), ConfigError);
}

// --- estimate_reliability ----------------------------------------------------

std::vector<AlarmLog> one_alarm_device(double r, double v_star, std::size_t cycles) {
    std::vector<AlarmLog> logs(cycles);
    for (std::size_t k = 0; k < cycles; ++k) {
        logs[k].cycle_index = k;
        logs[k].alarm_times = {ceil_to_ns(Seconds{r / v_star})};
    }
    return logs;
}

TEST(EstimateReliability, PerfectDeviceClosedForm) {
    const double r = 0.5;
    const double v_star = 2.0;  // r / v* = 0.25 s, exact in ns
    const double a = 0.01;
    const auto logs = one_alarm_device(r, v_star, 50);
    const auto sched = schedule(a, {0.25, 0.5, 1.0, 2.0, 4.0});
    for (const double v : {0.5, 1.0, 1.5, 2.0}) {
        const auto est = estimate_reliability(logs, sched, v, r, {0.01, 50, 1});
        std::size_t fitting = 0;
        for (const Seconds sb : sched.standby) {
            fitting += r / v <= a + sb.count();
        }
        ASSERT_EQ(est.levels.size(), fitting);
        double previous = -1.0;
        for (const auto& level : est.levels) {
            const double expected = 1.0 - r / (v * (a + level.standby.count()));
            EXPECT_EQ(level.reliability, expected) << v << ' ' << level.standby.count();
            EXPECT_GT(level.reliability, previous);
            EXPECT_LT(level.reliability, 1.0);
            previous = level.reliability;
            EXPECT_EQ(level.q_avg, 1.0);
            EXPECT_EQ(level.q0_avg, 1.0);
            // No cycle-to-cycle variation, so the interval collapses.
            EXPECT_NEAR(level.ci_low, level.reliability, 1e-12);
            EXPECT_NEAR(level.ci_high, level.reliability, 1e-12);
        }
        EXPECT_GT(est.trend, 0.0);
        EXPECT_TRUE(est.significantly_positive());
    }
}

TEST(EstimateReliability, FasterThanDeviceIsUndefined) {
    const auto logs = one_alarm_device(0.5, 2.0, 10);
    EXPECT_THROW(estimate_reliability(logs, schedule(0.01, {1.0}), 2.5, 0.5), UndefinedReliability);
}

TEST(EstimateReliability, SkipsLevelsTooShortForTheWindow) {
    const auto logs = one_alarm_device(0.5, 2.0, 10);
    const auto est = estimate_reliability(logs, schedule(0.01, {0.1, 0.6, 1.0}), 1.0, 0.5);
    ASSERT_EQ(est.levels.size(), 2u);
    EXPECT_EQ(est.levels.front().standby, Seconds{0.6});
    EXPECT_THROW(estimate_reliability(logs, schedule(0.01, {0.1, 0.2}), 1.0, 0.5), WindowError);
}

TEST(EstimateReliability, NoLogs) {
    EXPECT_THROW(estimate_reliability({}, schedule(0.01, {1.0}), 1.0, 0.25), EstimationError);
}

TEST(EstimateReliability, NullModelIsCalibrated) {
    const auto g = figure_one();
    const auto sched = schedule(0.01, {0.25, 0.5, 1.0});
    const auto logs = simulate_cycles(g, PhysicsHypothesis::null(100.0), sched.ceiling_cycle(),
                                      3000, 21);
    for (const double v : {0.5, 1.0, 2.0, std::sqrt(5.0)}) {
        const auto est = estimate_reliability(logs, sched, v, g.pump_arm_r, {0.01, 400, 4});
        for (const auto& level : est.levels) {
            EXPECT_LT(std::abs(level.reliability), 0.08) << v;
            EXPECT_LT(level.ci_low, level.reliability);
            EXPECT_GT(level.ci_high, level.reliability);
        }
        EXPECT_FALSE(est.significantly_positive()) << v;
        EXPECT_GT(est.standard_error(), 0.0);
    }
}

TEST(EstimateReliability, DeterministicBootstrap) {
    const auto g = figure_one();
    const auto sched = schedule(0.01, {0.5, 1.0});
    const auto logs = simulate_cycles(g, PhysicsHypothesis::null(50.0), sched.ceiling_cycle(),
                                      200, 8);
    const auto a = estimate_reliability(logs, sched, 1.0, g.pump_arm_r, {0.05, 200, 3});
    const auto b = estimate_reliability(logs, sched, 1.0, g.pump_arm_r, {0.05, 200, 3});
    EXPECT_EQ(a.ci_low(), b.ci_low());
    EXPECT_EQ(a.ci_high(), b.ci_high());
}

// --- effective_speed ---------------------------------------------------------

CycleSchedule probe_schedule() {
    auto s = schedule(0.01, {0.25, 0.5, 1.0});
    s.probe_speeds = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    return s;
}

TEST(EffectiveSpeed, RecoversSignalSpeed) {
    const auto g = figure_one();
    const double v_star = std::sqrt(5.0);
    const SimulatedDevice device(g, PhysicsHypothesis::signaling(v_star, 10.0, 1000.0),
                                 probe_schedule(), 1500, 17, 2, 300);
    const auto v = effective_speed(device, 0.01);
    ASSERT_EQ(v.status, EffectiveSpeed::Status::bracketed);
    EXPECT_LE(v.relative_width(), 0.02);
    EXPECT_GT(v.lower, 0.9 * v_star);
    EXPECT_LT(v.upper, 1.1 * v_star);
    // Causality: nothing faster than v* can be positive.
    EXPECT_LE(v.lower, v_star);
}

TEST(EffectiveSpeed, RecordedLogsRecoverSignalSpeed) {
    const auto g = figure_one();
    const double v_star = std::sqrt(5.0);
    const auto sched = probe_schedule();
    const auto logs = simulate_cycles(g, PhysicsHypothesis::signaling(v_star, 10.0, 1000.0),
                                      sched.ceiling_cycle(), 1500, 5);
    const RecordedDevice device(logs, sched, g.pump_arm_r, 9, 300);
    const auto v = effective_speed(device, 0.01);
    ASSERT_EQ(v.status, EffectiveSpeed::Status::bracketed);
    EXPECT_LE(v.relative_width(), 0.02);
    EXPECT_GT(v.lower, 0.9 * v_star);
    EXPECT_LT(v.upper, 1.1 * v_star);
}

TEST(EffectiveSpeed, NullDeviceIsUndetectable) {
    const SimulatedDevice device(figure_one(), PhysicsHypothesis::null(100.0), probe_schedule(),
                                 800, 3, 2, 200);
    const auto v = effective_speed(device, 0.01);
    EXPECT_EQ(v.status, EffectiveSpeed::Status::undetectable);
    EXPECT_EQ(v.probes.size(), probe_schedule().probe_speeds.size());
}

TEST(EffectiveSpeed, SubluminalProbesLeaveBracketOpen) {
    auto sched = probe_schedule();
    sched.probe_speeds = {0.5, 0.75, 1.0};
    const SimulatedDevice device(figure_one(), PhysicsHypothesis::signaling(std::sqrt(5.0), 10.0,
                                                                             1000.0),
                                 sched, 800, 4, 2, 200);
    const auto v = effective_speed(device, 0.01);
    EXPECT_EQ(v.status, EffectiveSpeed::Status::unbracketed_above);
    EXPECT_EQ(v.lower, 1.0);
    EXPECT_TRUE(std::isinf(v.upper));
}

TEST(EffectiveSpeed, UndefinedProbesCountAsNotPositive) {
    // Dark-free signaling: probes faster than v* see Q0 = 0.
    auto sched = probe_schedule();
    sched.probe_speeds = {1.0, 4.0};
    const auto g = figure_one();
    const auto logs = simulate_cycles(g, PhysicsHypothesis::signaling(std::sqrt(5.0), 0.0, 1000.0),
                                      sched.ceiling_cycle(), 300, 6);
    const RecordedDevice device(logs, sched, g.pump_arm_r, 1, 200);
    const auto v = effective_speed(device, 0.01, {0.05, 64});
    EXPECT_EQ(v.status, EffectiveSpeed::Status::bracketed);
    EXPECT_FALSE(v.probes[1].error.empty());
    EXPECT_NEAR(v.lower, std::sqrt(5.0), 0.05 * std::sqrt(5.0));
}

// --- verify_bound ------------------------------------------------------------

TEST(VerifyBound, NullDeviceHoldsWithZeroMargin) {
    const auto g = figure_one();
    const auto sched = schedule(0.01, {0.5, 1.0});
    const auto h = PhysicsHypothesis::null(100.0);
    const auto logs = simulate_cycles(g, h, sched.ceiling_cycle(), 2000, 2);
    const auto est = estimate_reliability(logs, sched, 1.0, g.pump_arm_r, {0.01, 300, 1});
    const auto ch = channel_at_speed(h, g, sched, 1.0, {2000, 3, 1, 2});
    const auto check = verify_bound(ch, est);
    EXPECT_TRUE(check.holds);
    EXPECT_NEAR(check.ratio, 1.0, 0.05);
    EXPECT_NEAR(check.one_minus_r, 1.0, 0.05);
    EXPECT_LT(std::abs(check.margin), 0.05);
}

TEST(VerifyBound, PerfectDeviceHolds) {
    const auto logs = one_alarm_device(0.5, 2.0, 20);
    const auto est = estimate_reliability(logs, schedule(0.01, {1.0}), 1.0, 0.5);
    const auto check = verify_bound(ProbabilityMatrix(0.0, 1.0), est);
    EXPECT_TRUE(check.holds);
    EXPECT_EQ(check.ratio, 0.0);
    EXPECT_NEAR(check.one_minus_r, 0.5 / 1.01, 1e-15);
}

TEST(VerifyBound, FlagsFabricatedReliability) {
    const auto g = figure_one();
    const auto sched = schedule(0.01, {0.5, 1.0});
    const auto h = PhysicsHypothesis::null(100.0);
    const auto logs = simulate_cycles(g, h, sched.ceiling_cycle(), 1000, 2);
    auto est = estimate_reliability(logs, sched, 1.0, g.pump_arm_r, {0.01, 300, 1});
    const auto ch = channel_at_speed(h, g, sched, 1.0, {1000, 3, 1, 2});
    ASSERT_TRUE(verify_bound(ch, est).holds);

    auto& level = est.levels.back();
    level.reliability = 1.0;
    level.ci_low = 1.0;
    level.ci_high = 1.0;
    const auto check = verify_bound(ch, est);
    EXPECT_FALSE(check.holds);
    EXPECT_LT(check.margin, -0.5);
}

TEST(VerifyBound, SingleLongReceiveWindowBreaksTheBound) {
    // With one receive window of length r/V a busy dark rate saturates
    // P(alarm), so p01/p11 overshoots 1 - R. Short slots restore the bound.
    const auto g = figure_one();
    const auto sched = schedule(0.01, {1.0});
    const auto h = PhysicsHypothesis::signaling(std::sqrt(5.0), 10.0, 1000.0);
    const auto logs = simulate_cycles(g, h, sched.ceiling_cycle(), 3000, 12);
    const auto est = estimate_reliability(logs, sched, 1.0, g.pump_arm_r, {0.01, 300, 1});
    ASSERT_GT(est.reliability(), 0.3);

    const Seconds window{g.pump_arm_r};
    const auto coarse = channel_of(h, g, sched.ceiling_cycle(), window, 1, {3000, 7, 1, 2});
    EXPECT_FALSE(verify_bound(coarse, est).holds);

    const auto fine = channel_at_speed(h, g, sched, 1.0, {3000, 7, 1, 2});
    const auto check = verify_bound(fine, est);
    EXPECT_TRUE(check.holds);
    EXPECT_GT(check.margin, 0.0);
}

TEST(VerifyBound, HoldsAcrossRandomConfigurations) {
    const auto cases = testing::draw_bound_cases(12, 99);
    for (std::size_t n = 0; n < cases.size(); ++n) {
        const auto run = testing::run_bound_case(cases[n], 1500, 1000 + n, 2);
        EXPECT_TRUE(run.check.holds) << cases[n].describe() << " margin " << run.check.margin
                                     << " tol " << run.check.tolerance;
    }
}

TEST(ChannelAtSpeed, RejectsNonPositiveSlot) {
    EXPECT_THROW(channel_at_speed(PhysicsHypothesis::null(1.0), figure_one(),
                                  schedule(0.01, {1.0}), 1.0, {10, 1, 1, 1}, Seconds{0}),
                 ValidationError);
}

}  // namespace
}  // namespace ftl
