// Copyright 2026 The speechverifier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEECHVERIFIER_SEED_H_
#define SPEECHVERIFIER_SEED_H_

#include <cstdint>

namespace speechverifier {

// SplitMix64 finalizer over seed and salt; derives independent stream seeds.
inline std::uint64_t Mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename... Salts>
std::uint64_t Mix(std::uint64_t seed, std::uint64_t salt, Salts... rest) {
  return Mix(Mix(seed, salt), static_cast<std::uint64_t>(rest)...);
}

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_SEED_H_
