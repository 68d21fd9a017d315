// svkit/data_io.h

// Copyright 2026 The svkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// On-disk formats. All multi-byte fields are little-endian.
//
// Feature file (.svfe):
//   "SVFE" | u32 version = 1 | u32 T | u32 D | T*D float32, frame-major
//
// Checkpoint (.svck):
//   "SVCK" | u32 version = 1 | u32 section_count |
//   section_count x { u16 name_len | name (UTF-8) | u64 count | count x f64 }
//
// Manifest (.tsv): one "speaker_id<TAB>relative_path" per line, '#' starts a
// comment line, paths resolve against the manifest's directory.

#ifndef SVKIT_DATA_IO_H_
#define SVKIT_DATA_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svkit/common.h"
#include "svkit/train_state.h"
#include "svkit/utterance.h"

namespace svkit {

inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void WriteFeatures(const Matrix& frames, const std::filesystem::path& path);
Matrix ReadFeatures(const std::filesystem::path& path);

struct ManifestEntry {
  std::string speaker_id;
  std::string relative_path;           // as written in the manifest
  std::filesystem::path feature_path;  // resolved against the manifest directory
};

struct Manifest {
  std::filesystem::path path;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
};

/// Parses a manifest without touching the feature data. Duplicate
/// (speaker, path) records are kept once and reported in `warnings`.
Manifest ReadManifest(const std::filesystem::path& path);

/// Reads the manifest and every referenced feature file. The source id
/// defaults to the manifest path.
DataSource LoadSource(const std::filesystem::path& manifest_path, double alpha = 1.0,
                      std::vector<std::string>* warnings = nullptr);

/// Gaussian speaker model used for desk-scale experiments: each speaker is a
/// prototype drawn from N(0, sep^2 I); every frame adds N(0, noise^2 I); every
/// utterance adds one channel offset N(0, drift^2 I). A nonzero domain_shift
/// moves all prototypes by domain_shift * u, with u ~ N(0, I) drawn from a
/// fixed seed shared by every dataset, so two datasets generated with
/// different shifts differ by a common translation.
struct SynthConfig {
  int num_speakers = 50;
  int utts_per_speaker = 20;
  int dim = 40;
  int min_frames = 180;
  int max_frames = 300;
  double speaker_separation = 1.0;
  double within_noise = 0.5;
  double channel_drift = 0.2;
  double domain_shift = 0.0;
  std::uint64_t seed = 17;
  std::string speaker_prefix = "spk";

  void Validate() const;
};

struct SyntheticDataset {
  std::vector<Vec> prototypes;  // one per speaker, in speaker order
  DataSource source;
};

/// In-memory generation. Frames are rounded to float32 so that a written
/// and re-read dataset is identical to the generated one.
SyntheticDataset GenerateSynthetic(const SynthConfig& config);

/// Writes <out_dir>/<speaker>/<utt>.svfe plus <out_dir>/manifest.tsv and
/// returns the manifest path.
std::filesystem::path WriteSyntheticDataset(const SynthConfig& config,
                                            const std::filesystem::path& out_dir);

/// Section names used in checkpoints.
inline constexpr const char* kSectionEncoderConfig = "encoder.config";
inline constexpr const char* kSectionScaleW = "scale.w";
inline constexpr const char* kSectionScaleB = "scale.b";
inline constexpr const char* kSectionStep = "trainer.step";
inline constexpr const char* kSectionRng = "rng.state";
inline constexpr const char* kEncoderSectionPrefix = "encoder.";

void SaveCheckpoint(const TrainState& state, const std::filesystem::path& path);
TrainState LoadCheckpoint(const std::filesystem::path& path);

}  // namespace svkit

#endif  // SVKIT_DATA_IO_H_
