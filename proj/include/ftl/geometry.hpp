#pragma once

// Closed-form design calculations for the down-conversion interferometer.
//
// DC2, BS2 and BS3 form a right triangle with signal leg s and idler leg i.
// Component sizes and the short mirror distances are taken as zero.

#include <cmath>
#include <string>

#include "ftl/errors.hpp"
#include "ftl/units.hpp"

namespace ftl {

struct ApparatusGeometry {
    double leg_s = 0.0;           // DC2 -> BS3 signal leg
    double leg_i = 0.0;           // DC2 -> BS2 idler leg
    double pump_arm_r = 0.0;      // BS1 -> M1
    double detector_k = 0.0;      // D responds in about k r^2 / I
    double intensity_I = 1.0;     // radiant intensity of the pump laser
    double raise_time_T = 0.0;    // full actuation of BS2
    double electronics_T0 = 0.0;  // electronics latency, excluding the button
    double light_speed_c = kNaturalLightSpeed;

    // Throws ValidationError on the first violated invariant. The legs'
    // ordering is checked by the speed functions, not here.
    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) {
                throw ValidationError(std::string("invalid geometry: ") + what);
            }
        };
        auto finite = [](double v) { return std::isfinite(v); };
        require(finite(leg_s) && leg_s > 0.0, "leg_s must be positive");
        require(finite(leg_i) && leg_i >= 0.0, "leg_i must be non-negative");
        require(finite(pump_arm_r) && pump_arm_r > 0.0, "pump_arm_r must be positive");
        require(finite(detector_k) && detector_k >= 0.0, "detector_k must be non-negative");
        require(finite(intensity_I) && intensity_I > 0.0, "intensity_I must be positive");
        require(finite(raise_time_T) && raise_time_T >= 0.0, "raise_time_T must be non-negative");
        require(finite(electronics_T0) && electronics_T0 >= 0.0,
                "electronics_T0 must be non-negative");
        require(finite(light_speed_c) && light_speed_c > 0.0, "light_speed_c must be positive");
    }

    double diagonal() const { return std::hypot(leg_s, leg_i); }

    // Approximate response time of the detector.
    double detector_response() const { return detector_k * pump_arm_r * pump_arm_r / intensity_I; }
};

namespace detail {

inline void check_legs(const ApparatusGeometry& g) {
    g.validate();
    if (g.leg_i == g.leg_s) {
        throw SingularGeometry();
    }
    if (g.leg_i > g.leg_s) {
        throw ReversedGeometry();
    }
}

}  // namespace detail

// Speed of the information about raising BS2 with every latency ignored:
// c * sqrt(s^2 + i^2) / (s - i).
inline double v_max(const ApparatusGeometry& g) {
    detail::check_legs(g);
    return g.light_speed_c * g.diagonal() / (g.leg_s - g.leg_i);
}

// Speed once detector response, raise time and electronics are charged:
// sqrt(s^2 + i^2) / ((s - i)/c + k r^2 / I + T + T0).
inline double v_min(const ApparatusGeometry& g) {
    detail::check_legs(g);
    const double latency = (g.leg_s - g.leg_i) / g.light_speed_c + g.detector_response() +
                           g.raise_time_T + g.electronics_T0;
    return g.diagonal() / latency;
}

// Necessary (not sufficient) condition for superluminal transmission:
// r * sqrt(2) > c * T0, strictly.
inline bool feasible(const ApparatusGeometry& g) {
    g.validate();
    return g.pump_arm_r * std::sqrt(2.0) > g.light_speed_c * g.electronics_T0;
}

}  // namespace ftl
