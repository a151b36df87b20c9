/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>

namespace lfqa {

/**
 * Counter-based generator: output n is splitmix64_mix(seed + (n+1) * golden),
 * i.e. the SplitMix64 stream of Steele, Lea and Flood. Distributions are
 * implemented here rather than taken from <random>, whose distribution
 * algorithms differ between standard libraries, so a seed reproduces the same
 * values on every platform.
 *
 *   uniform()  : (u64 >> 11) * 2^-53, in [0, 1)
 *   normal()   : Box-Muller cosine branch, one normal per two uniforms
 *   below(n)   : high 64 bits of u64 * n
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * kGolden);
  }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi]; a collapsed range returns lo exactly.
  double uniform(double lo, double hi) {
    if (lo == hi)
      return lo;
    return lo + (hi - lo) * uniform();
  }

  double normal() {
    // (0, 1] avoids log(0).
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// +1 or -1 with equal probability.
  double sign() { return (next_u64() >> 63) != 0 ? -1.0 : 1.0; }

  /// Independent generator for sub-stream `stream`; does not advance this one.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x632BE59BD9B4E019ULL)));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr double kTwoPi = 6.28318530717958647692;

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

} // namespace lfqa
