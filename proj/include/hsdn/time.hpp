#pragma once

#include <cstdint>

namespace hsdn {

// Simulated time in integer microseconds. All clocks, timeouts and
// measurements in the simulator use this unit; there is no floating-point
// clock anywhere.
using SimTime = std::int64_t;

constexpr SimTime kMicrosecond = 1;
constexpr SimTime kMillisecond = 1000;
constexpr SimTime kSecond = 1000 * 1000;

constexpr SimTime us(std::int64_t v) { return v; }
constexpr SimTime ms(std::int64_t v) { return v * kMillisecond; }
constexpr SimTime sec(std::int64_t v) { return v * kSecond; }

}  // namespace hsdn
