// svkit/ge2e_loss.h

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

#ifndef SVKIT_GE2E_LOSS_H_
#define SVKIT_GE2E_LOSS_H_

#include <span>
#include <vector>

#include "svkit/common.h"
#include "svkit/embedding.h"
#include "svkit/similarity.h"

namespace svkit {

enum class GE2EVariant { kSoftmax, kContrast };

/// Loss value with gradients w.r.t. every embedding of a batch (row-major,
/// j * M + i) and the similarity scale.
struct LossOutput {
  double value = 0.0;
  std::vector<Vec> grad_embeddings;
  double grad_w = 0.0;
  double grad_b = 0.0;
};

double Sigmoid(double x);

/// -s[j] + log sum_k exp(s[k]), evaluated with max subtraction.
double SoftmaxLossRow(std::span<const double> s_row, int true_speaker);

/// 1 - sigmoid(s[j]) + max_{k != j} sigmoid(s[k]). Throws SingleSpeaker for a
/// row of length < 2.
double ContrastLossRow(std::span<const double> s_row, int true_speaker);

/// Index of the hardest negative in a row: argmax over k != j, ties go to
/// the smallest k.
int HardestNegative(std::span<const double> s_row, int true_speaker);

/// Sum (not mean) of the per-row losses over the whole matrix.
double GE2ETotal(const SimilarityMatrix& s, GE2EVariant variant);

/// dL/dS for one row. For the contrast variant only the hardest negative
/// receives gradient.
void RowLossGradient(std::span<const double> s_row, int true_speaker,
                     GE2EVariant variant, std::span<double> out);

/// GE2E total and its exact gradients through the similarity matrix and the
/// centroids.
LossOutput GE2EBackward(const EmbeddingBatch& batch, const SimilarityScale& scale,
                        GE2EVariant variant);

}  // namespace svkit

#endif  // SVKIT_GE2E_LOSS_H_
