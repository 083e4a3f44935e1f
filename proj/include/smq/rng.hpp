#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace smq {

/// Philox4x32-10 block function, exposed for known-answer testing.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Mixes a seed and a tag into a new 64-bit seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Counter-based random stream. Stream(seed, i) is an independent
/// substream for every i, so replication i can be generated on any
/// thread and still produce identical output.
///
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  /// Exponential with the given rate, by inversion.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
};

}  // namespace smq
