#pragma once

// Counter-based pseudo-random substreams.
//
// A stream is identified by a 64-bit key absorbed from an arbitrary sequence
// of fields (strings and integers). The k-th output of a stream is a pure
// function of (key, k), so draws never depend on call order or on which
// thread evaluates them.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tunerisk::rng {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Builds a stream key by absorbing fields in order. Field boundaries are
/// part of the hash, so ("ab", "c") and ("a", "bc") give different keys.
class KeyBuilder {
 public:
  constexpr explicit KeyBuilder(std::uint64_t domain_tag = 0) noexcept
      : state_(mix64(domain_tag ^ 0x6a09e667f3bcc909ULL)) {}

  constexpr KeyBuilder& add(std::uint64_t v) noexcept {
    state_ = mix64(state_ ^ mix64(v + 0x9e3779b97f4a7c15ULL));
    return *this;
  }
  constexpr KeyBuilder& add(std::int64_t v) noexcept {
    return add(static_cast<std::uint64_t>(v));
  }
  constexpr KeyBuilder& add(int v) noexcept {
    return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  constexpr KeyBuilder& add(std::string_view s) noexcept {
    add(static_cast<std::uint64_t>(s.size()));
    return add(fnv1a64(s));
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Stateless generator: output(k) = f(key, k). Advancing is only a counter.
class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  [[nodiscard]] constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    // Two rounds so that adjacent counters decorrelate even for nearby keys.
    return mix64(mix64(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL) ^ key_);
  }

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer on [0, bound) by 128-bit multiply-shift; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    const auto wide = static_cast<u128>(next()) * bound;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller (consumes two outputs).
  double normal() noexcept {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tunerisk::rng
