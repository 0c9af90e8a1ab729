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

#ifndef SPEECHVERIFIER_FINGERPRINT_H_
#define SPEECHVERIFIER_FINGERPRINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace speechverifier {

// A code in {-1, +1}^d. Packed form: coordinate 0 is the most significant bit
// of byte 0, and +1 is stored as a set bit.
struct BinaryFingerprint {
  std::vector<std::int8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::vector<std::uint8_t> Pack() const;
  std::string ToHex() const;
  static BinaryFingerprint Unpack(const std::vector<std::uint8_t>& bytes, std::size_t num_bits);
  static BinaryFingerprint FromHex(const std::string& hex, std::size_t num_bits);
  bool operator==(const BinaryFingerprint&) const = default;
};

// b_i = +1 when v_i >= 0, else -1.
BinaryFingerprint Binarize(const Eigen::VectorXd& values);

// Number of differing positions; lengths must match.
int Hamming(const BinaryFingerprint& a, const BinaryFingerprint& b);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_FINGERPRINT_H_
