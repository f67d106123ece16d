#pragma once

// 1+1 dimensional special relativity: events, boosts, and the frame in which a
// superluminal round trip closes before it started.

#include <cmath>
#include <optional>
#include <string>

#include "ftl/channel.hpp"
#include "ftl/errors.hpp"

namespace ftl {

struct SpacetimeEvent {
    double position = 0.0;
    double time = 0.0;

    friend bool operator==(const SpacetimeEvent&, const SpacetimeEvent&) = default;
};

// Squared interval x^2 - c^2 t^2 of the separation a -> b.
inline double interval(const SpacetimeEvent& a, const SpacetimeEvent& b, double c) {
    const double dx = b.position - a.position;
    const double dt = b.time - a.time;
    return dx * dx - c * c * dt * dt;
}

class Boost {
public:
    explicit Boost(double beta) : beta_(beta) {
        if (!(std::abs(beta) < 1.0)) {
            throw InvalidBoost("boost requires |beta| < 1, got " + std::to_string(beta));
        }
    }

    double beta() const noexcept { return beta_; }
    double gamma() const { return 1.0 / std::sqrt((1.0 - beta_) * (1.0 + beta_)); }

    // Relativistic velocity addition.
    Boost then(const Boost& next) const {
        return Boost((beta_ + next.beta_) / (1.0 + beta_ * next.beta_));
    }

private:
    double beta_;
};

// Coordinates of e in the frame moving with velocity beta*c.
inline SpacetimeEvent boost(const SpacetimeEvent& e, const Boost& b, double c) {
    const double g = b.gamma();
    return {g * (e.position - b.beta() * c * e.time), g * (e.time - b.beta() * e.position / c)};
}

// Whether a signal no faster than max_speed, leaving at `from`, can be present
// at `to`. The light-cone boundary is included.
inline bool reachable(const SpacetimeEvent& from, const SpacetimeEvent& to, double max_speed) {
    const double dt = to.time - from.time;
    if (dt < 0.0) {
        return false;
    }
    return std::abs(to.position - from.position) <= dt * max_speed;
}

// For a spacelike send -> receive separation, the midpoint of the open
// interval of boosts in which receive precedes send. Returns nullopt for
// timelike and lightlike separations, where no frame reverses the order.
inline std::optional<Boost> antinomy_boost(const SpacetimeEvent& send,
                                           const SpacetimeEvent& receive, double c) {
    const double dx = receive.position - send.position;
    const double dt = receive.time - send.time;
    if (!(std::abs(dx) > c * std::abs(dt))) {
        return std::nullopt;
    }
    // t'_receive - t'_send = gamma (dt - beta dx / c) < 0  <=>  beta dx > c dt.
    const double threshold = c * dt / dx;
    const double beta = dx > 0.0 ? 0.5 * (threshold + 1.0) : 0.5 * (threshold - 1.0);
    return Boost(beta);
}

// The full round trip as data. In the rest frame E performs the experiment
// between (x,s) and (y,w), then sends S superluminally from (y,w) to (r,t).
// In the boosted frame of E' the reply S' travelling at the same speed
// reaches (x,s) no later than it was sent: |x' - r'| <= (s' - t') v.
struct AntinomyScenario {
    double signal_speed = 0.0;
    double c = 1.0;
    SpacetimeEvent start;      // (x, s)
    SpacetimeEvent departure;  // (y, w)
    SpacetimeEvent arrival;    // (r, t)
    Boost frame{0.0};
    SpacetimeEvent start_boosted;
    SpacetimeEvent departure_boosted;
    SpacetimeEvent arrival_boosted;
    PosteriorChain chain;
};

struct ChainOptions {
    double epsilon = 1e-9;
    std::size_t max_steps = 1'000'000;
};

inline AntinomyScenario antinomy_scenario(const ProbabilityMatrix& channel, Probability prior,
                                          double signal_speed, double c,
                                          ChainOptions options = {}) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ValidationError("light speed must be positive");
    }
    if (!(signal_speed > c) || !std::isfinite(signal_speed)) {
        throw NoParadox("signal speed " + std::to_string(signal_speed) +
                        " does not exceed c = " + std::to_string(c) + ": no paradox");
    }
    AntinomyScenario sc;
    sc.signal_speed = signal_speed;
    sc.c = c;

    // One unit of distance; the experiment takes half the superluminal slack so
    // that (x,s) -> (r,t) stays spacelike.
    const double distance = 1.0;
    const double slack = distance / c - distance / signal_speed;
    sc.start = {0.0, 0.0};
    sc.departure = {0.0, 0.5 * slack};
    sc.arrival = {distance, sc.departure.time + distance / signal_speed};

    if (!antinomy_boost(sc.start, sc.arrival, c)) {
        throw NoParadox("start and arrival events are not spacelike separated");
    }

    // The reply leg closes iff beta >= (c + u v) / (c u + v), where
    // u = c dt/dx along (x,s) -> (r,t); this is u composed with c/v. Take the
    // midpoint of [that, 1).
    const double u = c * (sc.arrival.time - sc.start.time) / (sc.arrival.position - sc.start.position);
    const double required = (c + u * signal_speed) / (c * u + signal_speed);
    sc.frame = Boost(0.5 * (required + 1.0));

    sc.start_boosted = boost(sc.start, sc.frame, c);
    sc.departure_boosted = boost(sc.departure, sc.frame, c);
    sc.arrival_boosted = boost(sc.arrival, sc.frame, c);

    if (!reachable(sc.arrival_boosted, sc.start_boosted, signal_speed)) {
        throw StatisticalError("internal: reply leg does not close in the boosted frame");
    }

    sc.chain = iterate_chain(prior, channel, options.epsilon, options.max_steps);
    return sc;
}

}  // namespace ftl
