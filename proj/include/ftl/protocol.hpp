#pragma once

// The cycle/alarm statistical procedure: Q and Q0 accounting, the reliability
// R(V), the effective speed v_eff = sup{V : R(V) > 0}, and the check
// p01(V)/p11(V) <= 1 - R(V).
//
// Every cycle starts at t = 0 with the action period a, followed by a standby
// period s. For a probe speed V and pump arm r:
//   Q  = alarms in (0, a+s] excluding (r/V, r/V+w]
//   Q0 = alarms in (0, r/V]
//   R(V) = 1 - Q r / (Q0 V (a+s-w))
// with Q and Q0 averaged over cycles before the ratio is formed.
//
// R is defined with Q0 in the denominator, so it is Q0 (not Q) whose average
// must not vanish.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ftl/channel.hpp"
#include "ftl/errors.hpp"
#include "ftl/geometry.hpp"
#include "ftl/optics_sim.hpp"
#include "ftl/random.hpp"
#include "ftl/units.hpp"

namespace ftl {

//---------------------------------------------------------------------------//
// Schedule

struct WaitingRule {
    enum class Kind {
        fixed,          // w is the same for every V
        constant_edge,  // r/V + w is the same for every V
    };

    Kind kind = Kind::fixed;
    Seconds value{0};

    static WaitingRule fixed(Seconds w) { return {Kind::fixed, w}; }
    static WaitingRule constant_edge(Seconds edge) { return {Kind::constant_edge, edge}; }

    Seconds waiting(double speed, double pump_arm_r) const {
        if (kind == Kind::fixed) {
            return value;
        }
        const Seconds w = value - Seconds{pump_arm_r / speed};
        if (w < Seconds{0}) {
            throw WindowError("waiting rule r/V + w = " + std::to_string(value.count()) +
                              " s cannot be met at V = " + std::to_string(speed));
        }
        return w;
    }
};

struct CycleSchedule {
    Seconds action{0};
    // Strictly increasing standby durations; the last one is the ceiling.
    std::vector<Seconds> standby;
    WaitingRule waiting;
    std::vector<double> probe_speeds;

    void validate() const {
        if (!(action > Seconds{0})) {
            throw ConfigError("action period must be positive");
        }
        if (standby.empty()) {
            throw ConfigError("standby schedule is empty");
        }
        if (standby.front() < Seconds{0}) {
            throw ConfigError("standby durations must be non-negative");
        }
        for (std::size_t k = 1; k < standby.size(); ++k) {
            if (!(standby[k] > standby[k - 1])) {
                throw ConfigError("standby schedule must be strictly increasing");
            }
        }
        if (!(waiting.value >= Seconds{0})) {
            throw ConfigError("waiting period must be non-negative");
        }
        for (const double v : probe_speeds) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ConfigError("probe speeds must be positive");
            }
        }
    }

    Seconds ceiling() const { return standby.back(); }

    // The cycle that is simulated; lower standby levels are its truncations.
    CycleSpec ceiling_cycle() const { return {action, ceiling(), std::nullopt}; }
};

//---------------------------------------------------------------------------//
// Counting

struct AlarmCounts {
    std::size_t q = 0;
    std::size_t q0 = 0;

    friend bool operator==(const AlarmCounts&, const AlarmCounts&) = default;
};

inline AlarmCounts count_alarms(const AlarmLog& log, const CycleSchedule& sched, double speed,
                                double pump_arm_r, Seconds standby) {
    const Seconds cycle_end = sched.action + standby;
    const Seconds arrival{pump_arm_r / speed};
    if (arrival > cycle_end) {
        throw WindowError("r/V = " + std::to_string(arrival.count()) +
                          " s exceeds the cycle length a+s = " +
                          std::to_string(cycle_end.count()) + " s; probe speed too slow");
    }
    const Seconds wait_end = arrival + sched.waiting.waiting(speed, pump_arm_r);

    AlarmCounts counts;
    for (const Nanos t : log.alarm_times) {
        if (!strictly_after(t, Seconds{0}) || !at_or_before(t, cycle_end)) {
            continue;
        }
        const bool in_wait = strictly_after(t, arrival) && at_or_before(t, wait_end);
        if (!in_wait) {
            ++counts.q;
        }
        if (at_or_before(t, arrival)) {
            ++counts.q0;
        }
    }
    return counts;
}

inline AlarmCounts count_alarms(const AlarmLog& log, const CycleSchedule& sched, double speed,
                                double pump_arm_r) {
    return count_alarms(log, sched, speed, pump_arm_r, sched.ceiling());
}

//---------------------------------------------------------------------------//
// Reliability

struct ReliabilityOptions {
    // One-sided level of each confidence bound.
    double significance = 0.01;
    std::size_t bootstrap_resamples = 1000;
    std::uint64_t bootstrap_seed = 0;
};

struct StandbyLevelEstimate {
    Seconds standby{0};
    double q_avg = 0.0;
    double q0_avg = 0.0;
    double reliability = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double standard_error = 0.0;
};

struct ReliabilityEstimate {
    double speed = 0.0;
    std::size_t cycles_used = 0;
    // Levels whose cycle can hold the Q0 window, in schedule order; the last
    // one is the ceiling.
    std::vector<StandbyLevelEstimate> levels;
    // Least-squares slope of R against the standby duration, per second.
    double trend = 0.0;

    const StandbyLevelEstimate& at_ceiling() const { return levels.back(); }
    double reliability() const { return at_ceiling().reliability; }
    double ci_low() const { return at_ceiling().ci_low; }
    double ci_high() const { return at_ceiling().ci_high; }
    double standard_error() const { return at_ceiling().standard_error; }
    double q_avg() const { return at_ceiling().q_avg; }
    double q0_avg() const { return at_ceiling().q0_avg; }

    // R(V) > 0 at the configured significance.
    bool significantly_positive() const { return ci_low() > 0.0; }
};

namespace detail {

inline double reliability_from_sums(double q_sum, double q0_sum, double pump_arm_r, double speed,
                                    double span) {
    if (q0_sum == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return 1.0 - q_sum * pump_arm_r / (q0_sum * speed * span);
}

// Linear-interpolated quantile of sorted values; infinities are not blended.
inline double quantile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || !std::isfinite(sorted[lo]) || !std::isfinite(sorted[hi])) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double slope(const std::vector<StandbyLevelEstimate>& levels) {
    if (levels.size() < 2) {
        return 0.0;
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& l : levels) {
        mx += l.standby.count();
        my += l.reliability;
    }
    mx /= static_cast<double>(levels.size());
    my /= static_cast<double>(levels.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& l : levels) {
        sxy += (l.standby.count() - mx) * (l.reliability - my);
        sxx += (l.standby.count() - mx) * (l.standby.count() - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace detail

inline ReliabilityEstimate estimate_reliability(std::span<const AlarmLog> logs,
                                                const CycleSchedule& sched, double speed,
                                                double pump_arm_r,
                                                const ReliabilityOptions& options = {}) {
    sched.validate();
    if (!(speed > 0.0)) {
        throw ValidationError("probe speed must be positive");
    }
    if (!(options.significance > 0.0 && options.significance < 0.5)) {
        throw ValidationError("significance must lie in (0, 0.5)");
    }
    if (logs.empty()) {
        throw EstimationError("no cycles to estimate reliability from");
    }

    const Seconds arrival{pump_arm_r / speed};
    const Seconds wait = sched.waiting.waiting(speed, pump_arm_r);
    if (arrival > sched.action + sched.ceiling()) {
        throw WindowError("r/V = " + std::to_string(arrival.count()) +
                          " s exceeds the longest cycle; probe speed too slow");
    }

    std::vector<Seconds> levels;
    for (const Seconds s : sched.standby) {
        if (arrival <= sched.action + s) {
            levels.push_back(s);
        }
    }
    const std::size_t n = logs.size();
    const std::size_t m = levels.size();

    // q[level * n + cycle]
    std::vector<double> q(m * n);
    std::vector<double> q0(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t l = 0; l < m; ++l) {
            const auto counts = count_alarms(logs[c], sched, speed, pump_arm_r, levels[l]);
            q[l * n + c] = static_cast<double>(counts.q);
            q0[c] = static_cast<double>(counts.q0);
        }
    }

    std::vector<double> spans(m);
    for (std::size_t l = 0; l < m; ++l) {
        spans[l] = (sched.action + levels[l] - wait).count();
        if (!(spans[l] > 0.0)) {
            throw WindowError("a + s - w must be positive");
        }
    }

    double q0_sum = 0.0;
    for (const double v : q0) {
        q0_sum += v;
    }
    if (q0_sum == 0.0) {
        throw UndefinedReliability("Q0 averages to zero at V = " + std::to_string(speed) +
                                   ": no alarms in (t, t + r/V]");
    }

    ReliabilityEstimate est;
    est.speed = speed;
    est.cycles_used = n;
    const double dn = static_cast<double>(n);
    for (std::size_t l = 0; l < m; ++l) {
        double q_sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            q_sum += q[l * n + c];
        }
        StandbyLevelEstimate level;
        level.standby = levels[l];
        level.q_avg = q_sum / dn;
        level.q0_avg = q0_sum / dn;
        level.reliability = 1.0 - level.q_avg * pump_arm_r / (level.q0_avg * speed * spans[l]);
        est.levels.push_back(level);
    }

    // Bootstrap over cycles; one resample of cycle indices serves every level.
    const std::size_t resamples = std::max<std::size_t>(options.bootstrap_resamples, 2);
    std::vector<std::vector<double>> draws(m, std::vector<double>(resamples));
    std::mt19937_64 rng(derive_seed(options.bootstrap_seed, stream::kBootstrap));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> q_sums(m);
    for (std::size_t b = 0; b < resamples; ++b) {
        std::fill(q_sums.begin(), q_sums.end(), 0.0);
        double q0_boot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t c = pick(rng);
            q0_boot += q0[c];
            for (std::size_t l = 0; l < m; ++l) {
                q_sums[l] += q[l * n + c];
            }
        }
        for (std::size_t l = 0; l < m; ++l) {
            draws[l][b] = detail::reliability_from_sums(q_sums[l], q0_boot, pump_arm_r, speed,
                                                        spans[l]);
        }
    }
    for (std::size_t l = 0; l < m; ++l) {
        auto& d = draws[l];
        std::sort(d.begin(), d.end());
        auto& level = est.levels[l];
        level.ci_low = detail::quantile(d, options.significance);
        level.ci_high = detail::quantile(d, 1.0 - options.significance);
        double mean = 0.0;
        std::size_t finite = 0;
        for (const double v : d) {
            if (std::isfinite(v)) {
                mean += v;
                ++finite;
            }
        }
        if (finite > 1) {
            mean /= static_cast<double>(finite);
            double ss = 0.0;
            for (const double v : d) {
                if (std::isfinite(v)) {
                    ss += (v - mean) * (v - mean);
                }
            }
            level.standard_error = std::sqrt(ss / static_cast<double>(finite - 1));
        }
    }
    est.trend = detail::slope(est.levels);
    return est;
}

//---------------------------------------------------------------------------//
// Probe devices

// Draws a fresh batch of simulated cycles for every probe.
class SimulatedDevice {
public:
    SimulatedDevice(ApparatusGeometry geometry, PhysicsHypothesis hypothesis,
                    CycleSchedule schedule, std::size_t cycles, std::uint64_t master_seed,
                    unsigned threads = 1, std::size_t bootstrap_resamples = 1000)
        : geometry_(geometry),
          hypothesis_(hypothesis),
          schedule_(std::move(schedule)),
          cycles_(cycles),
          master_seed_(master_seed),
          threads_(threads),
          resamples_(bootstrap_resamples) {
        geometry_.validate();
        hypothesis_.validate(geometry_);
        schedule_.validate();
        schedule_.ceiling_cycle().validate(geometry_);
    }

    const CycleSchedule& schedule() const { return schedule_; }
    const ApparatusGeometry& geometry() const { return geometry_; }
    const PhysicsHypothesis& hypothesis() const { return hypothesis_; }

    std::vector<AlarmLog> batch(std::size_t ordinal) const {
        const std::uint64_t seed = derive_seed(derive_seed(master_seed_, stream::kProbe), ordinal);
        return simulate_cycles(geometry_, hypothesis_, schedule_.ceiling_cycle(), cycles_, seed,
                               threads_);
    }

    ReliabilityEstimate probe(double speed, std::size_t ordinal, double significance) const {
        const auto logs = batch(ordinal);
        ReliabilityOptions opts{significance, resamples_,
                                derive_seed(master_seed_, 2 * ordinal + 1)};
        return estimate_reliability(logs, schedule_, speed, geometry_.pump_arm_r, opts);
    }

private:
    ApparatusGeometry geometry_;
    PhysicsHypothesis hypothesis_;
    CycleSchedule schedule_;
    std::size_t cycles_;
    std::uint64_t master_seed_;
    unsigned threads_;
    std::size_t resamples_;
};

// Re-counts one fixed set of recorded cycles at every probe speed.
class RecordedDevice {
public:
    RecordedDevice(std::span<const AlarmLog> logs, CycleSchedule schedule, double pump_arm_r,
                   std::uint64_t bootstrap_seed = 0, std::size_t bootstrap_resamples = 1000)
        : logs_(logs),
          schedule_(std::move(schedule)),
          pump_arm_r_(pump_arm_r),
          bootstrap_seed_(bootstrap_seed),
          resamples_(bootstrap_resamples) {}

    const CycleSchedule& schedule() const { return schedule_; }

    ReliabilityEstimate probe(double speed, std::size_t ordinal, double significance) const {
        ReliabilityOptions opts{significance, resamples_,
                                derive_seed(bootstrap_seed_, 2 * ordinal + 1)};
        return estimate_reliability(logs_, schedule_, speed, pump_arm_r_, opts);
    }

private:
    std::span<const AlarmLog> logs_;
    CycleSchedule schedule_;
    double pump_arm_r_;
    std::uint64_t bootstrap_seed_;
    std::size_t resamples_;
};

//---------------------------------------------------------------------------//
// Effective speed

struct ProbeOutcome {
    double speed = 0.0;
    std::optional<ReliabilityEstimate> estimate;
    std::string error;  // set when the estimate is undefined
    bool positive = false;
};

struct EffectiveSpeed {
    enum class Status {
        bracketed,          // lower is positive, upper is not, within the width
        unbracketed_above,  // every probe above lower was positive or none exist
        undetectable,       // no probe had significantly positive R
    };

    Status status = Status::undetectable;
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    std::vector<ProbeOutcome> probes;  // in evaluation order

    double relative_width() const { return (upper - lower) / lower; }
};

struct SearchOptions {
    double relative_width = 0.02;
    std::size_t max_bisections = 64;
};

// Bisection over V on "R(V) > 0 at the given significance", started from the
// highest positive probe speed and the next probe speed above it.
template <typename Device>
EffectiveSpeed effective_speed(const Device& device, double significance,
                               const SearchOptions& search = {}) {
    std::vector<double> speeds = device.schedule().probe_speeds;
    if (speeds.empty()) {
        throw ConfigError("no probe speeds configured");
    }
    std::sort(speeds.begin(), speeds.end());
    speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());

    EffectiveSpeed result;
    auto evaluate = [&](double v) {
        ProbeOutcome outcome;
        outcome.speed = v;
        try {
            outcome.estimate = device.probe(v, result.probes.size(), significance);
            outcome.positive = outcome.estimate->significantly_positive();
        } catch (const StatisticalError& e) {
            outcome.error = e.what();
        } catch (const WindowError& e) {
            outcome.error = e.what();
        }
        result.probes.push_back(outcome);
        return outcome.positive;
    };

    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < speeds.size(); ++k) {
        if (evaluate(speeds[k])) {
            best = k;
        }
    }
    if (!best) {
        result.status = EffectiveSpeed::Status::undetectable;
        result.lower = 0.0;
        return result;
    }
    double lo = speeds[*best];
    if (*best + 1 == speeds.size()) {
        result.status = EffectiveSpeed::Status::unbracketed_above;
        result.lower = lo;
        return result;
    }
    double hi = speeds[*best + 1];
    for (std::size_t it = 0; it < search.max_bisections && (hi - lo) / lo > search.relative_width;
         ++it) {
        const double mid = 0.5 * (lo + hi);
        if (evaluate(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.status = EffectiveSpeed::Status::bracketed;
    result.lower = lo;
    result.upper = hi;
    return result;
}

//---------------------------------------------------------------------------//
// p01(V) / p11(V) <= 1 - R(V)

struct BoundCheck {
    bool holds = false;
    double ratio = 0.0;        // p01 / p11
    double one_minus_r = 0.0;  // 1 - R at the ceiling
    double margin = 0.0;       // (1 - R) - p01/p11
    double tolerance = 0.0;    // sigmas * combined standard error
};

inline BoundCheck verify_bound(const ChannelEstimate& channel, const ReliabilityEstimate& est,
                               double sigmas = 3.0) {
    const double ratio = reliability_bound(channel.matrix);
    const double p11 = channel.matrix.p11();
    const double p01 = channel.matrix.p01();
    // Delta method for p01/p11 with independent estimates.
    const double var_ratio = channel.se01 * channel.se01 / (p11 * p11) +
                             p01 * p01 * channel.se11 * channel.se11 / (p11 * p11 * p11 * p11);
    const double se_r = est.standard_error();

    BoundCheck check;
    check.ratio = ratio;
    check.one_minus_r = 1.0 - est.reliability();
    check.margin = check.one_minus_r - ratio;
    check.tolerance = sigmas * std::sqrt(var_ratio + se_r * se_r);
    check.holds = check.margin >= -check.tolerance;
    return check;
}

inline BoundCheck verify_bound(const ProbabilityMatrix& channel, const ReliabilityEstimate& est,
                               double sigmas = 3.0) {
    return verify_bound(ChannelEstimate{channel, 0.0, 0.0, 0}, est, sigmas);
}

// Default receive slot for the channel at a probe speed.
inline constexpr Seconds kDefaultReceiveSlot{1e-5};

// The device's channel at probe speed V: the receive window (0, r/V] after the
// cycle start is cut into receive slots of about `receive_slot`, and p01, p11
// are per-slot probabilities of an alarm.
//
// Slots have to be short. P(alarm in a slot) is concave in the expected count,
// so with one long window a busy dark rate pushes p01/p11 towards 1 and above
// 1 - R. In expectation the check holds once
//   receive_slot * (dark + bright) / 2 < r / (V (a + s - w)).
inline ChannelEstimate channel_at_speed(const PhysicsHypothesis& h, const ApparatusGeometry& g,
                                        const CycleSchedule& sched, double speed,
                                        ChannelSampling sampling,
                                        Seconds receive_slot = kDefaultReceiveSlot) {
    if (!(receive_slot > Seconds{0})) {
        throw ValidationError("receive slot must be positive");
    }
    const Seconds window{g.pump_arm_r / speed};
    sampling.slots = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(window / receive_slot - 1e-9)));
    return channel_of(h, g, sched.ceiling_cycle(), window, 1, sampling);
}

}  // namespace ftl
