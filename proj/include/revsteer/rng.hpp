// Copyright 2026 The Revsteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REVSTEER_RNG_HPP_
#define REVSTEER_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace revsteer {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block is a
// pure function of (key, counter), so any (stream, offset) position can be
// generated independently and in parallel.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> ctr) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

// One deterministic sub-generator: output is a pure function of
// (base_seed, stream_index, position). Draw positions are 128-bit counters
// split as (block, stream), so distinct streams never collide.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t base_seed, std::uint64_t stream_index)
      : key_(base_seed), stream_(stream_index) {}

  std::uint64_t stream_index() const { return stream_; }

  // Jumps to an absolute block position and discards cached values.
  void seek(std::uint64_t block) {
    block_ = block;
    has_cached_normal_ = false;
    has_cached_bits_ = false;
  }

  // Raw 64 uniform bits; one block yields two words.
  std::uint64_t uniform_bits() {
    if (has_cached_bits_) {
      has_cached_bits_ = false;
      return cached_bits_;
    }
    const auto words = next_block();
    cached_bits_ = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
    has_cached_bits_ = true;
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }

  // Uniform double in (0, 1].
  double uniform01() {
    return (static_cast<double>(uniform_bits() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform index in [0, n). 64-bit multiply-shift; modulo bias is O(2^-64).
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(uniform_bits()) * n) >> 64);
  }

  // Standard normal via Box-Muller; one block yields two variates.
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    const auto words = next_block();
    const std::uint64_t a =
        (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    const std::uint64_t b =
        (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (static_cast<double>(b >> 11) + 1.0) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd out(n);
    fill_normal(out);
    return out;
  }

 private:
  std::array<std::uint32_t, 4> next_block() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    ++block_;
    return Philox4x32::block(key_, ctr);
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  double cached_normal_ = 0.0;
  std::uint64_t cached_bits_ = 0;
  bool has_cached_normal_ = false;
  bool has_cached_bits_ = false;
};

// Family of independent streams under one base seed.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t base_seed) : base_seed_(base_seed) {}

  std::uint64_t base_seed() const { return base_seed_; }

  NoiseStream stream(std::uint64_t index) const {
    return NoiseStream(base_seed_, index);
  }

 private:
  std::uint64_t base_seed_;
};

}  // namespace revsteer

#endif  // REVSTEER_RNG_HPP_
