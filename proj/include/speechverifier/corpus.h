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

#ifndef SPEECHVERIFIER_CORPUS_H_
#define SPEECHVERIFIER_CORPUS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "speechverifier/audio.h"

namespace speechverifier {

// One line of a JSON-lines manifest: {"path": ..., "speaker_id": ..., "duration": ...}.
// Relative paths are resolved against the manifest's directory.
struct ManifestEntry {
  std::filesystem::path path;
  std::optional<int> speaker_id;
  double duration = 0.0;
};

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

// Lists every .wav file under dir (sorted by path) with its duration.
std::vector<ManifestEntry> ScanWavDirectory(const std::filesystem::path& dir);

struct Utterance {
  std::string name;
  std::optional<int> speaker_id;
  Waveform audio;
};

// Utterances outside this duration range are dropped on load.
inline constexpr double kMinCorpusSeconds = 2.0;
inline constexpr double kMaxCorpusSeconds = 20.0;

// Reads, downmixes and resamples each entry; drops clips outside the duration
// filter.
std::vector<Utterance> LoadCorpus(const std::vector<ManifestEntry>& entries,
                                  int sample_rate = 16000);

// Seeded synthetic corpus written as 16-bit WAVs plus a manifest.
std::vector<ManifestEntry> WriteSyntheticCorpus(const std::filesystem::path& dir, int utterances,
                                                int speakers, double min_seconds,
                                                double max_seconds, std::uint64_t seed);

// In-memory equivalent of WriteSyntheticCorpus.
std::vector<Utterance> SyntheticCorpus(int utterances, int speakers, double min_seconds,
                                       double max_seconds, std::uint64_t seed);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_CORPUS_H_
