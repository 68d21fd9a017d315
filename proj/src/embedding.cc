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

#include "svkit/embedding.h"

#include <cmath>
#include <string>

namespace svkit {

EmbeddingBatch::EmbeddingBatch(int num_speakers, int utts_per_speaker,
                               std::vector<Vec> vectors)
    : num_speakers_(num_speakers),
      utts_per_speaker_(utts_per_speaker),
      dim_(0),
      vectors_(std::move(vectors)) {
  if (num_speakers_ < 2) {
    Throw(ErrorCode::kSingleSpeaker, "an embedding batch needs N >= 2 speakers, got " +
                                         std::to_string(num_speakers_));
  }
  if (utts_per_speaker_ < 1) {
    Throw(ErrorCode::kInvalidArgument, "utterances per speaker must be >= 1");
  }
  if (vectors_.size() != static_cast<std::size_t>(num_speakers_) * utts_per_speaker_) {
    Throw(ErrorCode::kShapeMismatch,
          "expected " + std::to_string(num_speakers_ * utts_per_speaker_) +
              " embeddings, got " + std::to_string(vectors_.size()));
  }
  dim_ = static_cast<int>(vectors_.front().size());
  if (dim_ == 0) Throw(ErrorCode::kShapeMismatch, "embeddings must be non-empty");
  for (const Vec& v : vectors_) {
    if (static_cast<int>(v.size()) != dim_) {
      Throw(ErrorCode::kShapeMismatch, "embeddings in a batch must share one dimension");
    }
    if (!AllFinite(v)) Throw(ErrorCode::kInvalidArgument, "non-finite embedding entry");
  }
}

bool EmbeddingBatch::IsUnitNorm(double tolerance) const {
  for (const Vec& v : vectors_) {
    if (std::abs(Norm(v) - 1.0) > tolerance) return false;
  }
  return true;
}

Vec L2Normalize(std::span<const double> raw) {
  const double norm = Norm(raw);
  if (!(norm >= kZeroNormThreshold)) {
    Throw(ErrorCode::kZeroVector, "cannot normalize a vector with norm " +
                                      std::to_string(norm));
  }
  Vec out(raw.begin(), raw.end());
  for (double& x : out) x /= norm;
  return out;
}

Vec L2NormalizeBackward(std::span<const double> raw, std::span<const double> upstream) {
  if (raw.size() != upstream.size()) {
    Throw(ErrorCode::kShapeMismatch, "upstream gradient size differs from input");
  }
  const double norm = Norm(raw);
  if (!(norm >= kZeroNormThreshold)) {
    Throw(ErrorCode::kZeroVector, "normalization backward at a zero vector");
  }
  // e . upstream, with e = raw / norm
  const double radial = Dot(raw, upstream) / norm;
  Vec grad(raw.size());
  for (std::size_t d = 0; d < raw.size(); ++d) {
    grad[d] = (upstream[d] - radial * raw[d] / norm) / norm;
  }
  return grad;
}

Vec Centroid(std::span<const Vec> embs) {
  if (embs.empty()) Throw(ErrorCode::kEmptyList, "centroid of an empty list");
  Vec sum(embs.front().size(), 0.0);
  for (const Vec& e : embs) Axpy(1.0, e, sum);
  for (double& x : sum) x /= static_cast<double>(embs.size());
  return sum;
}

Vec CentroidExcluding(std::span<const Vec> embs, int exclude_index) {
  if (embs.empty()) Throw(ErrorCode::kEmptyList, "centroid of an empty list");
  if (exclude_index < 0 || static_cast<std::size_t>(exclude_index) >= embs.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "exclude index " + std::to_string(exclude_index) + " out of range");
  }
  if (embs.size() < 2) {
    Throw(ErrorCode::kDegenerateExclusion,
          "excluding the only utterance of a speaker leaves nothing to average");
  }
  Vec sum(embs.front().size(), 0.0);
  for (std::size_t m = 0; m < embs.size(); ++m) {
    if (static_cast<int>(m) != exclude_index) Axpy(1.0, embs[m], sum);
  }
  for (double& x : sum) x /= static_cast<double>(embs.size() - 1);
  return sum;
}

}  // namespace svkit
