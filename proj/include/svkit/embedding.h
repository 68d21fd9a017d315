// svkit/embedding.h

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

#ifndef SVKIT_EMBEDDING_H_
#define SVKIT_EMBEDDING_H_

#include <span>
#include <vector>

#include "svkit/common.h"

namespace svkit {

/// Norms below this are treated as a dead encoder output.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Tolerance on | ||v|| - 1 | for a vector to count as a d-vector.
inline constexpr double kUnitNormTolerance = 1e-9;

/// One d-vector together with its place in a batch.
struct Embedding {
  Vec v;
  int speaker_index = 0;
  int utterance_index = 0;
};

/// N speakers x M utterances of embeddings, stored row-major with the row
/// index of (speaker j, utterance i) fixed to j * M + i. Every module that
/// indexes per-utterance data uses this convention.
///
/// The constructor checks shape and finiteness only. The loss functions are
/// defined for arbitrary nonzero vectors (cosine absorbs scale), which is
/// what finite-difference checks rely on; use IsUnitNorm() where true
/// d-vectors are required.
class EmbeddingBatch {
 public:
  EmbeddingBatch(int num_speakers, int utts_per_speaker, std::vector<Vec> vectors);

  int num_speakers() const { return num_speakers_; }
  int utts_per_speaker() const { return utts_per_speaker_; }
  int dim() const { return dim_; }
  int num_rows() const { return num_speakers_ * utts_per_speaker_; }

  static int RowIndex(int j, int i, int m) { return j * m + i; }

  const Vec& at(int j, int i) const { return vectors_[RowIndex(j, i, utts_per_speaker_)]; }
  Embedding embedding(int j, int i) const { return {at(j, i), j, i}; }
  std::span<const Vec> speaker(int j) const {
    return {vectors_.data() + static_cast<std::size_t>(j) * utts_per_speaker_,
            static_cast<std::size_t>(utts_per_speaker_)};
  }
  const std::vector<Vec>& vectors() const { return vectors_; }

  bool IsUnitNorm(double tolerance = kUnitNormTolerance) const;

 private:
  int num_speakers_;
  int utts_per_speaker_;
  int dim_;
  std::vector<Vec> vectors_;
};

/// raw / ||raw||. Throws ZeroVector when ||raw|| < kZeroNormThreshold.
Vec L2Normalize(std::span<const double> raw);

/// Vector-Jacobian product of L2Normalize at `raw`:
/// (I - e e^T) upstream / ||raw||, with e = raw / ||raw||.
Vec L2NormalizeBackward(std::span<const double> raw, std::span<const double> upstream);

/// Elementwise mean. The result is not re-normalized.
Vec Centroid(std::span<const Vec> embs);

/// Mean over all vectors except embs[exclude_index]. Needs at least two
/// vectors; with one there is nothing left to average (DegenerateExclusion).
Vec CentroidExcluding(std::span<const Vec> embs, int exclude_index);

}  // namespace svkit

#endif  // SVKIT_EMBEDDING_H_
