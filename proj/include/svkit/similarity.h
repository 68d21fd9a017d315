// svkit/similarity.h

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

#ifndef SVKIT_SIMILARITY_H_
#define SVKIT_SIMILARITY_H_

#include <span>
#include <vector>

#include "svkit/common.h"
#include "svkit/embedding.h"

namespace svkit {

/// Lower bound enforced on the cosine multiplier after every update.
inline constexpr double kMinScaleWeight = 1e-6;

/// Learnable affine map applied to cosine scores: s = w * cos + b, w > 0.
struct SimilarityScale {
  double w = 10.0;
  double b = -5.0;

  /// Clamps w to kMinScaleWeight.
  void ProjectToValid();
  bool operator==(const SimilarityScale&) const = default;
};

/// a.b / (|a| |b|). Throws ZeroVector if either norm is below
/// kZeroNormThreshold.
double Cosine(std::span<const double> a, std::span<const double> b);

/// (N*M) x N matrix of scaled cosine similarities. Row j*M+i holds
/// embedding (j, i) against every centroid k. On the diagonal block (k == j)
/// the centroid leaves out embedding (j, i) itself.
class SimilarityMatrix {
 public:
  SimilarityMatrix(int num_speakers, int utts_per_speaker);

  int num_speakers() const { return num_speakers_; }
  int utts_per_speaker() const { return utts_per_speaker_; }
  double operator()(int row, int k) const { return s_(row, k); }
  double& operator()(int row, int k) { return s_(row, k); }
  std::span<const double> Row(int row) const { return s_.Row(row); }
  const Matrix& matrix() const { return s_; }

 private:
  int num_speakers_;
  int utts_per_speaker_;
  Matrix s_;
};

SimilarityMatrix BuildSimilarityMatrix(const EmbeddingBatch& batch,
                                       const SimilarityScale& scale);

struct SimilarityGrads {
  std::vector<Vec> embeddings;  // row-major, same layout as the batch
  double w = 0.0;
  double b = 0.0;
};

/// Pulls `upstream` (dL/dS, shape (N*M) x N) back to every embedding,
/// including the paths through each centroid that contains it, and to (w, b).
SimilarityGrads SimilarityBackward(const EmbeddingBatch& batch,
                                   const SimilarityScale& scale,
                                   const Matrix& upstream);

}  // namespace svkit

#endif  // SVKIT_SIMILARITY_H_
