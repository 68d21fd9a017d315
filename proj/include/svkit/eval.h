// svkit/eval.h

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

#ifndef SVKIT_EVAL_H_
#define SVKIT_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svkit/common.h"
#include "svkit/encoder.h"
#include "svkit/utterance.h"

namespace svkit {

struct WindowSpec {
  int window = 160;
  double overlap = 0.5;  // fraction in [0, 1)

  /// round(window * (1 - overlap)); throws InvalidArgument if < 1.
  int StepSize() const;
  void Validate() const;
};

/// [start, end) frame ranges. Starts at 0, 0 + step, ... while the window
/// fits; if the last one stops short of T, a final window [T - window, T) is
/// added so trailing frames are always covered.
std::vector<std::pair<int, int>> WindowRanges(int num_frames, const WindowSpec& spec);

/// Per window: encoder forward and L2 normalization; then the elementwise
/// mean of the window d-vectors, normalized again to unit length.
Vec UtteranceDVector(const Matrix& utterance, const EncoderParams& params,
                     const WindowSpec& spec);

/// Mean of the enrollment d-vectors (not normalized).
Vec Enroll(std::span<const Vec> dvectors);

/// Cosine similarity.
double Score(std::span<const double> test_dvector, std::span<const double> enrolled);

struct EERResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t num_target = 0;
  std::size_t num_impostor = 0;
};

struct DetPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;
};

/// Sweeps every distinct score as threshold t with FAR(t) = share of
/// impostor scores >= t and FRR(t) = share of target scores < t. The EER is
/// (FAR + FRR) / 2 at the t minimizing |FAR - FRR|, smallest t on ties.
/// When `det` is non-null it receives one point per swept threshold.
EERResult ComputeEER(std::span<const double> target_scores,
                     std::span<const double> impostor_scores,
                     std::vector<DetPoint>* det = nullptr);

struct TrialRecord {
  std::string speaker_id;  // enrolled speaker
  std::string utt_path;    // test utterance
  bool is_target = false;
  double score = 0.0;
};

struct EvalConfig {
  int enroll_per_speaker = 5;
  WindowSpec window;
  std::uint64_t seed = 0;
};

struct EvaluationReport {
  std::vector<TrialRecord> trials;
  EERResult eer;
  std::vector<DetPoint> det;
  std::vector<std::string> warnings;
};

/// Per speaker, a seeded shuffle picks `enroll_per_speaker` enrollment
/// utterances (clamped so at least one test utterance remains, with a
/// warning); the rest are test utterances. Every test utterance is scored
/// against every enrolled speaker. Utterances shorter than one window are
/// skipped with a warning.
EvaluationReport EvaluateSource(const DataSource& source, const EncoderParams& params,
                                const EvalConfig& config);

/// Header, one tab-separated line per trial, then "EER <v> THRESHOLD <v>".
void WriteTrialResults(const EvaluationReport& report, const std::filesystem::path& path);

/// "far,frr,threshold" CSV.
void WriteDetCsv(const EvaluationReport& report, const std::filesystem::path& path);

std::string FormatEERSummary(const EERResult& result);

}  // namespace svkit

#endif  // SVKIT_EVAL_H_
