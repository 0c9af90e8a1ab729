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

#ifndef SPEECHVERIFIER_CONFIG_H_
#define SPEECHVERIFIER_CONFIG_H_

#include <string>

#include "json.hpp"
#include "speechverifier/features.h"
#include "speechverifier/model.h"
#include "speechverifier/watermark.h"

namespace speechverifier {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MfccConfig, sample_rate, window_ms, hop_ms,
                                                fft_size, mel_filters, cepstra, deltas, low_hz,
                                                high_hz, pre_emphasis, log_floor,
                                                cepstral_mean_norm)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, input_dim, lstm_hidden, lstm_layers,
                                                lstm_dropout, pool_windows, pool_stride,
                                                attention_dim, embed_dropout, proj_hidden,
                                                fingerprint_bits)

NLOHMANN_JSON_SERIALIZE_ENUM(QimDomain, {{QimDomain::kLog, "log"}, {QimDomain::kLinear, "linear"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WatermarkConfig, segments, sample_rate, fft_size,
                                                band_low_hz, band_high_hz, bin_spacing, repetition,
                                                carrier_seed, domain, log_step, magnitude_floor,
                                                linear_step_ratio, linear_step_floor, min_segment)

// First 16 hex digits of SHA-256 over the compact, key-sorted JSON dump.
std::string CanonicalHash(const nlohmann::json& j);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_CONFIG_H_
