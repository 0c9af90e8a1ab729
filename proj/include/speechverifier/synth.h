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

#ifndef SPEECHVERIFIER_SYNTH_H_
#define SPEECHVERIFIER_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "speechverifier/audio.h"

namespace speechverifier {

// Parameters of a synthetic talker: a harmonic glottal source shaped by vowel
// formants, plus fricative noise. Different profiles produce audibly
// different "voices".
struct SpeakerProfile {
  int id = 0;
  double f0_hz = 120.0;
  double formant_scale = 1.0;
  double tilt_db_per_octave = -12.0;
  double breathiness = 0.02;
  double fricative_center_hz = 4500.0;
  double vibrato_hz = 5.0;
  // Recording conditions: utterance peak level and channel noise.
  double peak_level = 0.45;
  double noise_floor = 3e-4;
  // Microphone colouration: two peaking filters (centre Hz, gain dB).
  std::array<double, 2> eq_hz = {1000.0, 2500.0};
  std::array<double, 2> eq_gain_db = {0.0, 0.0};
};

SpeakerProfile MakeSpeaker(int id, std::uint64_t seed);

// Speech-like audio: words of 1-3 syllables separated by pauses, over a faint
// noise floor. Deterministic in (speaker, seconds, seed).
Waveform SynthesizeUtterance(const SpeakerProfile& speaker, double seconds,
                             std::uint64_t seed, int sample_rate = 16000);

struct SyntheticUtterance {
  std::string name;
  int speaker_id = 0;
  Waveform audio;
};

// num_utterances clips spread round-robin over num_speakers talkers, with
// durations drawn uniformly from [min_seconds, max_seconds].
std::vector<SyntheticUtterance> SynthesizeCorpus(int num_utterances,
                                                 int num_speakers,
                                                 double min_seconds,
                                                 double max_seconds,
                                                 std::uint64_t seed);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_SYNTH_H_
