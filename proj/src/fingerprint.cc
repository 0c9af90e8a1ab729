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

#include "speechverifier/fingerprint.h"

#include <cmath>

#include "speechverifier/error.h"

namespace speechverifier {

std::vector<std::uint8_t> BinaryFingerprint::Pack() const {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 0) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

std::string BinaryFingerprint::ToHex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  for (std::uint8_t byte : Pack()) {
    hex.push_back(kDigits[byte >> 4]);
    hex.push_back(kDigits[byte & 0xF]);
  }
  return hex;
}

BinaryFingerprint BinaryFingerprint::Unpack(const std::vector<std::uint8_t>& bytes,
                                            std::size_t num_bits) {
  if (bytes.size() * 8 < num_bits) {
    throw Error(ErrorCode::kShape, "packed fingerprint holds fewer than " +
                                       std::to_string(num_bits) + " bits");
  }
  BinaryFingerprint f;
  f.bits.resize(num_bits);
  for (std::size_t i = 0; i < num_bits; ++i) {
    f.bits[i] = (bytes[i / 8] & (0x80u >> (i % 8))) ? 1 : -1;
  }
  return f;
}

BinaryFingerprint BinaryFingerprint::FromHex(const std::string& hex, std::size_t num_bits) {
  if (hex.size() != 2 * ((num_bits + 7) / 8)) {
    throw Error(ErrorCode::kParse, "fingerprint hex has " + std::to_string(hex.size()) +
                                       " digits, expected " +
                                       std::to_string(2 * ((num_bits + 7) / 8)));
  }
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw Error(ErrorCode::kParse, std::string("invalid hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    bytes.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  }
  return Unpack(bytes, num_bits);
}

BinaryFingerprint Binarize(const Eigen::VectorXd& values) {
  BinaryFingerprint f;
  f.bits.resize(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i))) throw Error(ErrorCode::kData, "non-finite fingerprint value");
    f.bits[static_cast<std::size_t>(i)] = values(i) >= 0.0 ? 1 : -1;
  }
  return f;
}

int Hamming(const BinaryFingerprint& a, const BinaryFingerprint& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fingerprint lengths differ: " +
                                                 std::to_string(a.size()) + " vs " +
                                                 std::to_string(b.size()));
  }
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.bits[i] != b.bits[i];
  return d;
}

}  // namespace speechverifier
