// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace ufoblo {

/// Purpose tags that keep substreams for different consumers disjoint.
enum class StreamPurpose : std::uint64_t {
  kBatchSlot = 1,      // task draw followed by the UFO Bernoulli draw
  kInitialTheta = 2,
  kDiagnostics = 3,
  kProblemSetup = 4,
  kTest = 5,
};

/// Seeded random stream with platform-independent output.
///
/// Substreams are keyed by (seed, purpose, k, w) through std::seed_seq, so
/// the value sequence a consumer sees depends only on its key and not on the
/// order in which other streams were used. Uniform and normal variates are
/// produced from raw 64-bit words here rather than through the standard
/// distributions, whose output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  static RngStream substream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t k,
                             std::uint64_t w);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Returns true with probability q; consumes exactly one value.
  bool bernoulli(double q);
  /// Standard normal via Box-Muller; consumes two values per call.
  double normal();
  /// Uniform index in [0, n), n >= 1; consumes exactly one value.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ufoblo
