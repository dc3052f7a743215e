// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nestla {

/// Identifier written into every CSV header so noise tapes can be replayed
/// by other implementations.
inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Block at counter (index, stream) under key = seed.
PhiloxCounter philox_block(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Two independent standard normals from one Philox block (Box-Muller).
std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Sequential view over the counter space of one (seed, stream) pair.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform on (0, 1].
  double uniform();
  double normal();
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  PhiloxCounter block_{};
  int used_ = 4;  // 32-bit words already consumed from block_
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Stream ids reserved for the different consumers of one seed.
namespace streams {
inline constexpr std::uint64_t kProblem = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kPermutation = 3;
inline constexpr std::uint64_t kSweep = 4;
}  // namespace streams

}  // namespace nestla
