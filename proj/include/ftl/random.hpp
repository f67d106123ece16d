#pragma once

#include <cstdint>

namespace ftl {

// SplitMix64 finalizer; used only to derive independent stream seeds from a
// master seed so that every cycle's randomness depends on (master, index)
// alone.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(master ^ splitmix64(stream));
}

// Stream tags for the places that draw a sub-master seed from the run seed.
namespace stream {
inline constexpr std::uint64_t kCycles = 0x6379636c6573ULL;     // "cycles"
inline constexpr std::uint64_t kChannelSent = 0x73656e74ULL;    // "sent"
inline constexpr std::uint64_t kChannelIdle = 0x69646c65ULL;    // "idle"
inline constexpr std::uint64_t kBootstrap = 0x626f6f74ULL;      // "boot"
inline constexpr std::uint64_t kProbe = 0x70726f6265ULL;        // "probe"
inline constexpr std::uint64_t kBound = 0x626f756e64ULL;        // "bound"
}  // namespace stream

}  // namespace ftl
