#include "attrition/rng.hpp"

namespace attrition {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t substream(std::uint64_t a, std::uint64_t b) noexcept { return mix64(mix64(a) ^ (b * kGolden + 1)); }

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(mix64(seed ^ mix64(stream))) {}

std::uint64_t CounterRng::next() noexcept {
    const std::uint64_t x = mix64(key_ + counter_ * kGolden);
    ++counter_;
    return mix64(x ^ key_);
}

double CounterRng::uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace attrition
