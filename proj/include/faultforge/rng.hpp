/*
 * Copyright (c) 2026, the faultforge authors
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

#include <cstdint>

namespace faultforge {

// PCG32 (Melissa O'Neill's pcg32_random_r). Small, explicitly seeded and
// bit-reproducible across platforms, which std::uniform_int_distribution
// is not. Every random draw in the framework goes through this.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream) {
    reseed(seed, stream);
  }

  void reseed(std::uint64_t seed, std::uint64_t stream = kDefaultStream) {
    inc_ = (stream << 1u) | 1u;
    state_ = 0;
    next();
    state_ += seed;
    next();
  }

  std::uint32_t next() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
  }

  // Uniform in [0, bound). Lemire's multiply-shift; the ~bound/2^32 bias is
  // far below anything the statistical tests can see, and it stays
  // deterministic (exactly one draw per call).
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(next()) * bound) >> 32);
  }

  std::uint64_t next64() {
    std::uint64_t hi = next();
    return (hi << 32) | next();
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t state) { state_ = state; }

  bool operator==(const Pcg32& other) const {
    return state_ == other.state_ && inc_ == other.inc_;
  }

  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = (kDefaultStream << 1u) | 1u;
};

}  // namespace faultforge
