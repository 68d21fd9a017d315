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

#include "svkit/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "svkit/embedding.h"
#include "svkit/similarity.h"

namespace svkit {

int WindowSpec::StepSize() const {
  const int step = static_cast<int>(std::lround(window * (1.0 - overlap)));
  if (step < 1) Throw(ErrorCode::kInvalidArgument, "window step rounds to zero");
  return step;
}

void WindowSpec::Validate() const {
  if (window < 1) Throw(ErrorCode::kInvalidArgument, "window must be >= 1 frame");
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "overlap must lie in [0, 1)");
  }
  StepSize();
}

std::vector<std::pair<int, int>> WindowRanges(int num_frames, const WindowSpec& spec) {
  spec.Validate();
  if (num_frames < spec.window) {
    Throw(ErrorCode::kTooShort, std::to_string(num_frames) + " frames, window needs " +
                                    std::to_string(spec.window));
  }
  const int step = spec.StepSize();
  std::vector<std::pair<int, int>> ranges;
  for (int start = 0; start + spec.window <= num_frames; start += step) {
    ranges.emplace_back(start, start + spec.window);
  }
  if (ranges.back().second != num_frames) {
    ranges.emplace_back(num_frames - spec.window, num_frames);
  }
  return ranges;
}

Vec UtteranceDVector(const Matrix& utterance, const EncoderParams& params,
                     const WindowSpec& spec) {
  const auto ranges = WindowRanges(static_cast<int>(utterance.rows), spec);
  Vec sum(params.config.output_dim, 0.0);
  for (const auto& [begin, end] : ranges) {
    Matrix window(end - begin, utterance.cols);
    std::copy(utterance.data.begin() + static_cast<std::ptrdiff_t>(begin * utterance.cols),
              utterance.data.begin() + static_cast<std::ptrdiff_t>(end * utterance.cols),
              window.data.begin());
    Axpy(1.0, L2Normalize(Forward(window, params, nullptr)), sum);
  }
  for (double& x : sum) x /= static_cast<double>(ranges.size());
  return L2Normalize(sum);
}

Vec Enroll(std::span<const Vec> dvectors) { return Centroid(dvectors); }

double Score(std::span<const double> test_dvector, std::span<const double> enrolled) {
  return Cosine(test_dvector, enrolled);
}

EERResult ComputeEER(std::span<const double> target_scores,
                     std::span<const double> impostor_scores, std::vector<DetPoint>* det) {
  if (target_scores.empty() || impostor_scores.empty()) {
    Throw(ErrorCode::kEmptyList, "EER needs both target and impostor scores");
  }
  std::vector<double> targets(target_scores.begin(), target_scores.end());
  std::vector<double> impostors(impostor_scores.begin(), impostor_scores.end());
  std::sort(targets.begin(), targets.end());
  std::sort(impostors.begin(), impostors.end());
  std::vector<double> thresholds;
  thresholds.reserve(targets.size() + impostors.size());
  std::merge(targets.begin(), targets.end(), impostors.begin(), impostors.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double n_tgt = static_cast<double>(targets.size());
  const double n_imp = static_cast<double>(impostors.size());
  EERResult result;
  result.num_target = targets.size();
  result.num_impostor = impostors.size();
  if (det != nullptr) det->clear();

  std::size_t tgt_below = 0;  // targets < threshold
  std::size_t imp_below = 0;  // impostors < threshold
  double best_gap = 2.0;
  for (double th : thresholds) {
    while (tgt_below < targets.size() && targets[tgt_below] < th) ++tgt_below;
    while (imp_below < impostors.size() && impostors[imp_below] < th) ++imp_below;
    const double far = static_cast<double>(impostors.size() - imp_below) / n_imp;
    const double frr = static_cast<double>(tgt_below) / n_tgt;
    if (det != nullptr) det->push_back({far, frr, th});
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      result.eer = (far + frr) / 2.0;
      result.threshold = th;
    }
  }
  return result;
}

EvaluationReport EvaluateSource(const DataSource& source, const EncoderParams& params,
                                const EvalConfig& config) {
  config.window.Validate();
  if (config.enroll_per_speaker < 1) {
    Throw(ErrorCode::kInvalidArgument, "enroll_per_speaker must be >= 1");
  }
  EvaluationReport report;
  Rng rng(config.seed);

  struct TestUtterance {
    std::string speaker;
    std::string path;
    Vec dvector;
  };
  std::vector<std::pair<std::string, Vec>> enrolled;
  std::vector<TestUtterance> tests;

  for (const auto& [speaker, utts] : source.speakers) {
    std::vector<int> usable;
    for (int u = 0; u < static_cast<int>(utts.size()); ++u) {
      if (utts[u].frames.rows >= static_cast<std::size_t>(config.window.window)) {
        usable.push_back(u);
      } else {
        report.warnings.push_back(utts[u].source_path + ": shorter than one window, skipped");
      }
    }
    if (usable.empty()) continue;
    std::shuffle(usable.begin(), usable.end(), rng);
    int k = config.enroll_per_speaker;
    const int limit = std::max(1, static_cast<int>(usable.size()) - 1);
    if (k > limit) {
      report.warnings.push_back("speaker " + speaker + ": enrollment clamped from " +
                                std::to_string(k) + " to " + std::to_string(limit) +
                                " utterances");
      k = limit;
    }
    std::vector<Vec> enroll_vectors;
    for (int q = 0; q < static_cast<int>(usable.size()); ++q) {
      const Utterance& utt = utts[usable[q]];
      Vec d = UtteranceDVector(utt.frames, params, config.window);
      if (q < k) {
        enroll_vectors.push_back(std::move(d));
      } else {
        tests.push_back({speaker, utt.source_path, std::move(d)});
      }
    }
    enrolled.emplace_back(speaker, Enroll(enroll_vectors));
  }

  std::vector<double> target_scores;
  std::vector<double> impostor_scores;
  for (const TestUtterance& t : tests) {
    for (const auto& [speaker, centroid] : enrolled) {
      TrialRecord trial{speaker, t.path, speaker == t.speaker, Score(t.dvector, centroid)};
      (trial.is_target ? target_scores : impostor_scores).push_back(trial.score);
      report.trials.push_back(std::move(trial));
    }
  }
  report.eer = ComputeEER(target_scores, impostor_scores, &report.det);
  return report;
}

std::string FormatEERSummary(const EERResult& result) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "EER %.6f THRESHOLD %.6f", result.eer, result.threshold);
  return buf;
}

void WriteTrialResults(const EvaluationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Throw(ErrorCode::kIo, path.string() + ": cannot open for writing");
  out << "speaker_id\tutt_path\tis_target\tscore\n";
  char buf[64];
  for (const TrialRecord& t : report.trials) {
    std::snprintf(buf, sizeof(buf), "%.9f", t.score);
    out << t.speaker_id << '\t' << t.utt_path << '\t' << (t.is_target ? 1 : 0) << '\t' << buf
        << '\n';
  }
  out << FormatEERSummary(report.eer) << '\n';
  if (!out) Throw(ErrorCode::kIo, path.string() + ": write failed");
}

void WriteDetCsv(const EvaluationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Throw(ErrorCode::kIo, path.string() + ": cannot open for writing");
  out << "far,frr,threshold\n";
  char buf[128];
  for (const DetPoint& p : report.det) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f", p.far, p.frr, p.threshold);
    out << buf << '\n';
  }
  if (!out) Throw(ErrorCode::kIo, path.string() + ": write failed");
}

}  // namespace svkit
