#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace ftl {

// Times are seconds in double precision; alarm timestamps are integral
// nanoseconds so that the persisted log and the in-memory log are identical.
using Seconds = std::chrono::duration<double>;
using Nanos = std::chrono::duration<std::int64_t, std::nano>;

// Natural units: lengths in light-seconds, c = 1.
inline constexpr double kNaturalLightSpeed = 1.0;
inline constexpr double kSiLightSpeed = 299'792'458.0;

// Smallest representable alarm time that is not earlier than t.
inline Nanos ceil_to_ns(Seconds t) {
    return Nanos{static_cast<std::int64_t>(std::ceil(t.count() * 1e9))};
}

inline Nanos round_to_ns(Seconds t) {
    return Nanos{static_cast<std::int64_t>(std::llround(t.count() * 1e9))};
}

// Edge of a half-open interval, compared against integral nanoseconds in
// double arithmetic.
inline double edge_ns(Seconds t) { return t.count() * 1e9; }

inline bool at_or_before(Nanos alarm, Seconds edge) {
    return static_cast<double>(alarm.count()) <= edge_ns(edge);
}

inline bool strictly_after(Nanos alarm, Seconds edge) {
    return static_cast<double>(alarm.count()) > edge_ns(edge);
}

}  // namespace ftl
