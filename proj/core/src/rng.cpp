// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/rng.hpp"

#include <cmath>
#include <numbers>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t part : key) {
    words.push_back(static_cast<std::uint32_t>(part & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(part >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

RngStream RngStream::substream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t k,
                               std::uint64_t w) {
  RngStream s(0);
  s.engine_ = seeded_engine({seed, static_cast<std::uint64_t>(purpose), k, w});
  return s;
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("RngStream::uniform: lo > hi");
  return lo + (hi - lo) * uniform01();
}

bool RngStream::bernoulli(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("RngStream::bernoulli: q outside [0, 1]");
  return uniform01() < q;
}

double RngStream::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) throw InvalidArgument("RngStream::index: empty range");
  const auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  return idx < n ? idx : n - 1;
}

}  // namespace ufoblo
