#pragma once

#include <cstdint>

namespace attrition {

/// Counter-based generator: draw k of stream s is a pure function of (seed, s, k).
///
/// Any replicate or player can therefore be given its own stream and replayed in
/// any order, which keeps parallel runs bit-identical to serial ones.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    [[nodiscard]] std::uint64_t next() noexcept;
    /// Uniform on the open interval (0, 1) with 53 random bits.
    [[nodiscard]] double uniform() noexcept;
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines indices into a single stream id (order-sensitive).
[[nodiscard]] std::uint64_t substream(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace attrition
