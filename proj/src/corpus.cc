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

#include "speechverifier/corpus.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "speechverifier/error.h"
#include "speechverifier/synth.h"

namespace speechverifier {

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("path") || !j["path"].is_string()) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(line_no) + ": missing \"path\"");
    }
    ManifestEntry e;
    e.path = j["path"].get<std::string>();
    if (e.path.is_relative()) e.path = base / e.path;
    if (j.contains("speaker_id") && !j["speaker_id"].is_null()) {
      e.speaker_id = j["speaker_id"].get<int>();
    }
    e.duration = j.value("duration", 0.0);
    entries.push_back(std::move(e));
  }
  return entries;
}

void WriteManifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  for (const ManifestEntry& e : entries) {
    nlohmann::json j;
    std::filesystem::path p = e.path;
    if (!base.empty() && p.is_absolute() == base.is_absolute()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    j["path"] = p.generic_string();
    if (e.speaker_id) j["speaker_id"] = *e.speaker_id;
    j["duration"] = e.duration;
    out << j.dump() << "\n";
  }
}

std::vector<ManifestEntry> ScanWavDirectory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& f : std::filesystem::recursive_directory_iterator(dir)) {
    std::string ext = f.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (f.is_regular_file() && ext == ".wav") paths.push_back(f.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<ManifestEntry> entries;
  for (const auto& p : paths) entries.push_back({p, std::nullopt, ReadWav(p).DurationSeconds()});
  return entries;
}

std::vector<Utterance> LoadCorpus(const std::vector<ManifestEntry>& entries, int sample_rate) {
  std::vector<Utterance> out;
  for (const ManifestEntry& e : entries) {
    Waveform w = ReadWav(e.path);
    if (w.sample_rate != sample_rate) w = Resample(w, sample_rate);
    const double d = w.DurationSeconds();
    if (d < kMinCorpusSeconds || d > kMaxCorpusSeconds) continue;
    out.push_back({e.path.stem().string(), e.speaker_id, std::move(w)});
  }
  return out;
}

std::vector<Utterance> SyntheticCorpus(int utterances, int speakers, double min_seconds,
                                       double max_seconds, std::uint64_t seed) {
  std::vector<Utterance> out;
  for (SyntheticUtterance& s :
       SynthesizeCorpus(utterances, speakers, min_seconds, max_seconds, seed)) {
    out.push_back({s.name, s.speaker_id, std::move(s.audio)});
  }
  return out;
}

std::vector<ManifestEntry> WriteSyntheticCorpus(const std::filesystem::path& dir, int utterances,
                                                int speakers, double min_seconds,
                                                double max_seconds, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const Utterance& u : SyntheticCorpus(utterances, speakers, min_seconds, max_seconds, seed)) {
    const std::filesystem::path p = dir / (u.name + ".wav");
    WriteWav(u.audio, p);
    entries.push_back({p, u.speaker_id, u.audio.DurationSeconds()});
  }
  WriteManifest(entries, dir / "manifest.jsonl");
  return entries;
}

}  // namespace speechverifier
