#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace carnot {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key);

// Counter-based stream: the key is the seed, the upper counter words carry
// the stream id, the lower ones count blocks. Streams with different ids
// never share a counter value.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(*this); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  PhiloxBlock buffer_{};
  int pos_ = 4;
  std::normal_distribution<double> normal_;
};

}  // namespace carnot
