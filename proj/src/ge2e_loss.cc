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

#include "svkit/ge2e_loss.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace svkit {

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void CheckRow(std::span<const double> s_row, int true_speaker) {
  if (true_speaker < 0 || static_cast<std::size_t>(true_speaker) >= s_row.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "true speaker " + std::to_string(true_speaker) + " outside a row of length " +
              std::to_string(s_row.size()));
  }
  if (!AllFinite(s_row)) Throw(ErrorCode::kInvalidArgument, "non-finite similarity");
}

}  // namespace

double SoftmaxLossRow(std::span<const double> s_row, int true_speaker) {
  CheckRow(s_row, true_speaker);
  // (top - s[j]) + log(1 + sum over k != argmax of exp(s[k] - top)). The log1p
  // form keeps a saturated row's tiny loss accurate instead of cancelling.
  const auto top_it = std::max_element(s_row.begin(), s_row.end());
  const double top = *top_it;
  double rest = 0.0;
  for (auto it = s_row.begin(); it != s_row.end(); ++it) {
    if (it != top_it) rest += std::exp(*it - top);
  }
  return (top - s_row[true_speaker]) + std::log1p(rest);
}

int HardestNegative(std::span<const double> s_row, int true_speaker) {
  if (s_row.size() < 2) {
    Throw(ErrorCode::kSingleSpeaker, "no negative centroid in a row of length " +
                                         std::to_string(s_row.size()));
  }
  int best = -1;
  for (int k = 0; k < static_cast<int>(s_row.size()); ++k) {
    if (k == true_speaker) continue;
    if (best < 0 || s_row[k] > s_row[best]) best = k;
  }
  return best;
}

double ContrastLossRow(std::span<const double> s_row, int true_speaker) {
  if (s_row.size() < 2) {
    Throw(ErrorCode::kSingleSpeaker, "contrast loss needs at least two speakers");
  }
  CheckRow(s_row, true_speaker);
  // sigmoid is monotone, so the max of sigmoid(s_k) sits at the max of s_k.
  const int hard = HardestNegative(s_row, true_speaker);
  return 1.0 - Sigmoid(s_row[true_speaker]) + Sigmoid(s_row[hard]);
}

double GE2ETotal(const SimilarityMatrix& s, GE2EVariant variant) {
  const int n = s.num_speakers();
  const int m = s.utts_per_speaker();
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto row = s.Row(EmbeddingBatch::RowIndex(j, i, m));
      total += variant == GE2EVariant::kSoftmax ? SoftmaxLossRow(row, j)
                                                : ContrastLossRow(row, j);
    }
  }
  return total;
}

void RowLossGradient(std::span<const double> s_row, int true_speaker,
                     GE2EVariant variant, std::span<double> out) {
  CheckRow(s_row, true_speaker);
  std::fill(out.begin(), out.end(), 0.0);
  if (variant == GE2EVariant::kSoftmax) {
    const double top = *std::max_element(s_row.begin(), s_row.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < s_row.size(); ++k) {
      out[k] = std::exp(s_row[k] - top);
      sum += out[k];
    }
    for (double& p : out) p /= sum;
    out[true_speaker] -= 1.0;
    return;
  }
  const int hard = HardestNegative(s_row, true_speaker);
  const double pos = Sigmoid(s_row[true_speaker]);
  const double neg = Sigmoid(s_row[hard]);
  out[true_speaker] = -pos * (1.0 - pos);
  out[hard] = neg * (1.0 - neg);
}

LossOutput GE2EBackward(const EmbeddingBatch& batch, const SimilarityScale& scale,
                        GE2EVariant variant) {
  const SimilarityMatrix s = BuildSimilarityMatrix(batch, scale);
  const int n = batch.num_speakers();
  const int m = batch.utts_per_speaker();
  Matrix upstream(static_cast<std::size_t>(n) * m, n);
  LossOutput out;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = EmbeddingBatch::RowIndex(j, i, m);
      out.value += variant == GE2EVariant::kSoftmax ? SoftmaxLossRow(s.Row(row), j)
                                                    : ContrastLossRow(s.Row(row), j);
      RowLossGradient(s.Row(row), j, variant, upstream.Row(row));
    }
  }
  SimilarityGrads grads = SimilarityBackward(batch, scale, upstream);
  out.grad_embeddings = std::move(grads.embeddings);
  out.grad_w = grads.w;
  out.grad_b = grads.b;
  return out;
}

}  // namespace svkit
