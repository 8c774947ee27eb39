#pragma once

#include <array>
#include <cstdint>

namespace tailbound {

/// SplitMix64 finalizer. Used for key derivation only.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a child stream id from a parent id and an index.
constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Draws for one environment step.
///
/// The Philox counter is (step, block); the key is derived from
/// (master seed, stream id). Two generators built from the same triple
/// produce the same draws, which is what lets backward iteration replay the
/// forward environment sequence without storing it.
class StepRng {
 public:
  StepRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  double exponential() noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t step_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Counter-based environment stream keyed by (seed, stream id).
class EnvStream {
 public:
  EnvStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  StepRng at(std::uint64_t step) const noexcept { return StepRng(seed_, stream_, step); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace tailbound
