#pragma once

// Binary asymmetric channel and the iterated round-trip posterior.
//
// A device either sends (1) or does not send (0) a signal, and the receiver
// either registers (1) or does not register (0) it within a fixed window.
// p_ij is the probability of receive outcome j given send outcome i.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ftl/errors.hpp"

namespace ftl {

class Probability {
public:
    constexpr Probability() = default;

    explicit Probability(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw ValidationError("probability out of [0,1]: " + std::to_string(value));
        }
    }

    constexpr double value() const noexcept { return value_; }
    constexpr double complement() const noexcept { return 1.0 - value_; }

    friend constexpr bool operator==(Probability, Probability) = default;

private:
    double value_ = 0.0;
};

class ProbabilityMatrix {
public:
    ProbabilityMatrix(Probability p01, Probability p11) : p01_(p01), p11_(p11) {}
    ProbabilityMatrix(double p01, double p11) : p01_(p01), p11_(p11) {}

    double p01() const noexcept { return p01_.value(); }
    double p11() const noexcept { return p11_.value(); }
    double p00() const noexcept { return p01_.complement(); }
    double p10() const noexcept { return p11_.complement(); }

    // The device "works at least somewhat".
    bool informative() const noexcept { return p01() < p11(); }
    bool uninformative() const noexcept { return p01() == p11(); }

private:
    Probability p01_;
    Probability p11_;
};

struct PosteriorResult {
    double value = 0.0;
    // Conditioning event had probability zero; value is the prior.
    bool vacuous = false;
};

// Probability of X after the round trip X -> S -> E' -> S' -> E, given that E
// received S'. The first leg carries S iff X happened, the second leg carries
// S' iff E' received S; both legs use the same channel.
inline PosteriorResult posterior(Probability prior, const ProbabilityMatrix& ch) {
    const double p1 = prior.value();
    if (ch.uninformative()) {
        return {p1, false};
    }
    const double p0 = prior.complement();
    const double with_x = p1 * (ch.p11() * ch.p11() + ch.p10() * ch.p01());
    const double without_x = p0 * ch.p01() * (ch.p00() + ch.p11());
    const double evidence = with_x + without_x;
    if (evidence == 0.0) {
        return {p1, true};
    }
    return {with_x / evidence, false};
}

struct PosteriorChain {
    double prior = 0.0;
    // iterates[0] is the prior; iterates[n] is after n round trips.
    std::vector<double> iterates;
    bool converged = false;
    bool vacuous = false;

    std::size_t steps() const noexcept { return iterates.empty() ? 0 : iterates.size() - 1; }
    double last() const { return iterates.back(); }
};

// Feeds each posterior back in as the next prior until 1 - p_n < epsilon or
// max_steps round trips have been made.
inline PosteriorChain iterate_chain(Probability prior, const ProbabilityMatrix& ch,
                                    double epsilon, std::size_t max_steps) {
    if (!(epsilon > 0.0)) {
        throw ValidationError("chain epsilon must be positive");
    }
    PosteriorChain chain;
    chain.prior = prior.value();
    chain.iterates.push_back(prior.value());
    double p = prior.value();
    while (true) {
        if (1.0 - p < epsilon) {
            chain.converged = true;
            break;
        }
        if (chain.steps() >= max_steps) {
            break;
        }
        const auto next = posterior(Probability(p), ch);
        chain.vacuous = chain.vacuous || next.vacuous;
        p = next.value;
        chain.iterates.push_back(p);
    }
    return chain;
}

// p01/p11, which a reliability R(V) bounds from above by 1 - R(V).
inline double reliability_bound(const ProbabilityMatrix& ch) {
    if (ch.p11() == 0.0) {
        throw UndefinedRatio("p11 is zero: the device never delivers sent signals");
    }
    return ch.p01() / ch.p11();
}

}  // namespace ftl
