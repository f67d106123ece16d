#pragma once

// Monte Carlo model of the interferometer as an alarm process at detector D.
//
// Photon-level interference is not simulated. While BS2 is lowered the signal
// photons interfere and D only sees the vacuum-level dark rate. Raising BS2
// makes the idler paths distinguishable; the signal photons emitted at that
// moment then reach D at up to the bright rate, after a propagation delay
// r / v plus the detector response k r^2 / I.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ftl/channel.hpp"
#include "ftl/errors.hpp"
#include "ftl/geometry.hpp"
#include "ftl/random.hpp"
#include "ftl/units.hpp"

namespace ftl {

//---------------------------------------------------------------------------//
// BS2 actuation

struct BeamSplitterState {
    enum class Phase { lowered, raising, raised, lowering };

    Phase phase = Phase::lowered;
    double fraction = 0.0;  // 0 = lowered, 1 = fully raised
};

// Piecewise-linear actuation inside the action period: raise over T/2, hold,
// lower over T/2. Outside [0, action) the splitter is lowered.
inline BeamSplitterState splitter_state(Seconds t, Seconds action, Seconds raise_time) {
    using Phase = BeamSplitterState::Phase;
    if (raise_time > action) {
        throw ConfigError("raise time T exceeds the action period");
    }
    if (t < Seconds{0} || t >= action) {
        return {Phase::lowered, 0.0};
    }
    const Seconds ramp = raise_time / 2.0;
    if (t < ramp) {
        return {Phase::raising, t / ramp};
    }
    if (t < action - ramp) {
        return {Phase::raised, 1.0};
    }
    return {Phase::lowering, std::clamp((action - t) / ramp, 0.0, 1.0)};
}

//---------------------------------------------------------------------------//
// Physics hypotheses

// Monotone map from raise fraction to distinguishability in [0,1].
struct DistinguishabilityMap {
    enum class Shape { identity, power, step };

    Shape shape = Shape::identity;
    // power: exponent (> 0); step: raise fraction at which paths become
    // distinguishable, in (0, 1].
    double parameter = 1.0;

    void validate() const {
        if (shape == Shape::power && !(parameter > 0.0 && std::isfinite(parameter))) {
            throw ConfigError("distinguishability power exponent must be positive");
        }
        if (shape == Shape::step && !(parameter > 0.0 && parameter <= 1.0)) {
            throw ConfigError("distinguishability step threshold must lie in (0, 1]");
        }
    }

    double operator()(double fraction) const {
        fraction = std::clamp(fraction, 0.0, 1.0);
        switch (shape) {
            case Shape::identity:
                return fraction;
            case Shape::power:
                return std::pow(fraction, parameter);
            case Shape::step:
                return fraction >= parameter ? 1.0 : 0.0;
        }
        return fraction;
    }
};

struct PhysicsHypothesis {
    enum class Kind { null_model, signaling_model };

    // Once BS2 is raised about half of the signal photons can reach D.
    static constexpr double kDetectableFraction = 0.5;

    Kind kind = Kind::null_model;
    double signal_speed = 0.0;  // signaling only
    double dark_rate = 0.0;     // alarms/s at the vacuum level
    double bright_rate = 0.0;   // alarms/s with fully distinguishable paths
    DistinguishabilityMap distinguishability;

    static double bright_rate_from_pair_rate(double pair_rate) {
        return kDetectableFraction * pair_rate;
    }

    static PhysicsHypothesis null(double dark_rate) {
        PhysicsHypothesis h;
        h.kind = Kind::null_model;
        h.dark_rate = dark_rate;
        return h;
    }

    static PhysicsHypothesis signaling(double signal_speed, double dark_rate, double bright_rate,
                                       DistinguishabilityMap map = {}) {
        PhysicsHypothesis h;
        h.kind = Kind::signaling_model;
        h.signal_speed = signal_speed;
        h.dark_rate = dark_rate;
        h.bright_rate = bright_rate;
        h.distinguishability = map;
        return h;
    }

    bool signaling() const noexcept { return kind == Kind::signaling_model; }

    void validate(const ApparatusGeometry& g) const {
        if (!(dark_rate >= 0.0 && std::isfinite(dark_rate))) {
            throw ConfigError("dark_rate must be non-negative");
        }
        if (!signaling()) {
            return;
        }
        distinguishability.validate();
        if (!(bright_rate > dark_rate && std::isfinite(bright_rate))) {
            throw ConfigError("bright_rate must exceed dark_rate for the signaling model");
        }
        if (!(signal_speed > g.light_speed_c)) {
            throw ConfigError("signal_speed must exceed c for the signaling model");
        }
        if (signal_speed > v_max(g)) {
            throw ConfigError("signal_speed " + std::to_string(signal_speed) +
                              " exceeds v_max " + std::to_string(v_max(g)) +
                              " of the geometry");
        }
    }

    // Time from the emission of an induced photon to its alarm.
    Seconds induced_delay(const ApparatusGeometry& g) const {
        return Seconds{g.pump_arm_r / signal_speed + g.detector_response()};
    }
};

//---------------------------------------------------------------------------//
// Cycles and alarm logs

// One action + standby cycle. With pinned_fraction set, BS2 is held at that
// raise fraction for the whole action period instead of following the
// actuation profile.
struct CycleSpec {
    Seconds action{0};
    Seconds standby{0};
    std::optional<double> pinned_fraction;

    Seconds duration() const { return action + standby; }

    void validate(const ApparatusGeometry& g) const {
        if (!(action > Seconds{0})) {
            throw ConfigError("action period must be positive");
        }
        if (!(standby >= Seconds{0})) {
            throw ConfigError("standby period must be non-negative");
        }
        if (Seconds{g.raise_time_T} > action) {
            throw ConfigError("raise time T exceeds the action period");
        }
        if (pinned_fraction && !(*pinned_fraction >= 0.0 && *pinned_fraction <= 1.0)) {
            throw ConfigError("pinned raise fraction must lie in [0, 1]");
        }
    }

    double raise_fraction(Seconds t, const ApparatusGeometry& g) const {
        if (pinned_fraction) {
            return (t >= Seconds{0} && t < action) ? *pinned_fraction : 0.0;
        }
        return splitter_state(t, action, Seconds{g.raise_time_T}).fraction;
    }
};

struct AlarmLog {
    std::uint64_t cycle_index = 0;
    std::uint64_t seed = 0;
    // Strictly increasing, measured from the cycle start, all in (0, duration].
    // Clicks closer than 1 ns are one alarm.
    std::vector<Nanos> alarm_times;

    friend bool operator==(const AlarmLog&, const AlarmLog&) = default;
};

inline AlarmLog simulate_cycle(const ApparatusGeometry& g, const PhysicsHypothesis& h,
                               const CycleSpec& cycle, std::uint64_t cycle_index,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const Seconds duration = cycle.duration();
    const double end_ns = edge_ns(duration);
    std::vector<Nanos> times;

    auto keep = [&](Seconds t) {
        const Nanos ns = ceil_to_ns(t);
        if (ns.count() > 0 && static_cast<double>(ns.count()) <= end_ns) {
            times.push_back(ns);
        }
    };

    // Vacuum-level clicks, uniform over the whole cycle.
    if (h.dark_rate > 0.0) {
        std::poisson_distribution<long long> count(h.dark_rate * duration.count());
        const long long n = count(rng);
        for (long long k = 0; k < n; ++k) {
            keep(duration * unit(rng));
        }
    }

    // Induced clicks by thinning: candidate emissions at the full excess rate,
    // each kept with the distinguishability at its emission instant.
    if (h.signaling()) {
        const double excess = h.bright_rate - h.dark_rate;
        const Seconds delay = h.induced_delay(g);
        std::poisson_distribution<long long> count(excess * cycle.action.count());
        const long long n = count(rng);
        for (long long k = 0; k < n; ++k) {
            const Seconds emitted = cycle.action * unit(rng);
            const double accept = unit(rng);
            if (accept < h.distinguishability(cycle.raise_fraction(emitted, g))) {
                keep(emitted + delay);
            }
        }
    }

    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return {cycle_index, seed, std::move(times)};
}

inline std::uint64_t cycle_seed(std::uint64_t master_seed, std::uint64_t cycle_index) {
    return derive_seed(derive_seed(master_seed, stream::kCycles), cycle_index);
}

// Cycles are independent given their seeds, so they may be split across
// threads; slot k of the result always holds cycle k.
inline std::vector<AlarmLog> simulate_cycles(const ApparatusGeometry& g,
                                             const PhysicsHypothesis& h,
                                             const CycleSpec& cycle, std::size_t count,
                                             std::uint64_t master_seed,
                                             unsigned threads = 1) {
    g.validate();
    h.validate(g);
    cycle.validate(g);

    std::vector<AlarmLog> logs(count);
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            logs[k] = simulate_cycle(g, h, cycle, k, cycle_seed(master_seed, k));
        }
    };

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        run(0, count);
        return logs;
    }
    std::vector<std::jthread> workers;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin < end) {
            workers.emplace_back(run, begin, end);
        }
    }
    workers.clear();
    return logs;
}

// Alarms in (begin, end].
inline std::size_t count_in(const AlarmLog& log, Seconds begin, Seconds end) {
    std::size_t n = 0;
    for (const Nanos t : log.alarm_times) {
        if (strictly_after(t, begin) && at_or_before(t, end)) {
            ++n;
        }
    }
    return n;
}

//---------------------------------------------------------------------------//
// Effective channel of the simulated device

struct ChannelSampling {
    std::size_t cycles = 10'000;
    std::uint64_t seed = 0;
    // The window is split into this many equal receive slots; the reported
    // probability is the per-slot hit probability averaged over slots.
    std::size_t slots = 1;
    unsigned threads = 1;
};

struct ChannelEstimate {
    ProbabilityMatrix matrix{0.0, 0.0};
    double se01 = 0.0;
    double se11 = 0.0;
    std::size_t cycles = 0;
};

namespace detail {

struct MeanAndError {
    double mean = 0.0;
    double standard_error = 0.0;
};

// Per-cycle fraction of slots in (0, window] holding at least `threshold`
// alarms, averaged over cycles.
inline MeanAndError slot_hit_rate(std::span<const AlarmLog> logs, Seconds window,
                                  std::size_t slots, std::size_t threshold) {
    const double n = static_cast<double>(logs.size());
    const double window_ns = edge_ns(window);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const AlarmLog& log : logs) {
        // Alarms are sorted, so slot indices arrive in runs.
        std::size_t hits = 0;
        std::size_t run_slot = 0;
        std::size_t run_length = 0;
        for (const Nanos t : log.alarm_times) {
            if (!at_or_before(t, window)) {
                break;
            }
            // Slot j covers (j w/m, (j+1) w/m].
            const double pos = static_cast<double>(t.count()) / window_ns * static_cast<double>(slots);
            const std::size_t j =
                std::min(static_cast<std::size_t>(std::ceil(pos)) - 1, slots - 1);
            if (run_length == 0 || j != run_slot) {
                run_slot = j;
                run_length = 0;
            }
            if (++run_length == threshold) {
                ++hits;
            }
        }
        const double y = static_cast<double>(hits) / static_cast<double>(slots);
        sum += y;
        sum_sq += y * y;
    }
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Estimates p01 and p11 of the simulated device: p11 from cycles in which BS2
// is actuated, p01 from cycles in which it stays lowered, both as the
// probability of at least `threshold` alarms in (0, window] after the cycle
// start. Standard errors are binomial (slot-averaged when slots > 1).
inline ChannelEstimate channel_of(const PhysicsHypothesis& h, const ApparatusGeometry& g,
                                  const CycleSpec& cycle, Seconds window, std::size_t threshold,
                                  const ChannelSampling& sampling) {
    if (!(window > Seconds{0})) {
        throw ValidationError("channel window must be positive");
    }
    if (window > cycle.duration()) {
        throw WindowError("channel window is longer than the cycle");
    }
    if (threshold < 1) {
        throw ValidationError("channel threshold must be at least 1");
    }
    if (sampling.slots < 1) {
        throw ValidationError("channel slots must be at least 1");
    }
    if (sampling.cycles == 0) {
        throw EstimationError("channel estimate needs at least one simulated cycle");
    }

    CycleSpec sent = cycle;
    sent.pinned_fraction.reset();
    CycleSpec idle = cycle;
    idle.pinned_fraction = 0.0;

    const auto sent_logs = simulate_cycles(g, h, sent, sampling.cycles,
                                           derive_seed(sampling.seed, stream::kChannelSent),
                                           sampling.threads);
    const auto idle_logs = simulate_cycles(g, h, idle, sampling.cycles,
                                           derive_seed(sampling.seed, stream::kChannelIdle),
                                           sampling.threads);

    const auto p11 = detail::slot_hit_rate(sent_logs, window, sampling.slots, threshold);
    const auto p01 = detail::slot_hit_rate(idle_logs, window, sampling.slots, threshold);
    return {ProbabilityMatrix(std::clamp(p01.mean, 0.0, 1.0), std::clamp(p11.mean, 0.0, 1.0)),
            p01.standard_error, p11.standard_error, sampling.cycles};
}

}  // namespace ftl
