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

#include "svkit/similarity.h"

#include <algorithm>
#include <string>

namespace svkit {

void SimilarityScale::ProjectToValid() { w = std::max(w, kMinScaleWeight); }

double Cosine(std::span<const double> a, std::span<const double> b) {
  const double na = Norm(a);
  const double nb = Norm(b);
  if (!(na >= kZeroNormThreshold) || !(nb >= kZeroNormThreshold)) {
    Throw(ErrorCode::kZeroVector, "cosine with a zero-norm vector");
  }
  return Dot(a, b) / (na * nb);
}

SimilarityMatrix::SimilarityMatrix(int num_speakers, int utts_per_speaker)
    : num_speakers_(num_speakers),
      utts_per_speaker_(utts_per_speaker),
      s_(static_cast<std::size_t>(num_speakers) * utts_per_speaker, num_speakers) {}

namespace {

std::vector<Vec> AllCentroids(const EmbeddingBatch& batch) {
  std::vector<Vec> centroids;
  centroids.reserve(batch.num_speakers());
  for (int k = 0; k < batch.num_speakers(); ++k) {
    centroids.push_back(Centroid(batch.speaker(k)));
  }
  return centroids;
}

void CheckTrainable(const EmbeddingBatch& batch) {
  if (batch.utts_per_speaker() < 2) {
    Throw(ErrorCode::kDegenerateExclusion,
          "the self-excluding centroid needs M >= 2 utterances per speaker");
  }
}

}  // namespace

SimilarityMatrix BuildSimilarityMatrix(const EmbeddingBatch& batch,
                                       const SimilarityScale& scale) {
  CheckTrainable(batch);
  const int n = batch.num_speakers();
  const int m = batch.utts_per_speaker();
  const std::vector<Vec> centroids = AllCentroids(batch);
  SimilarityMatrix s(n, m);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = EmbeddingBatch::RowIndex(j, i, m);
      const Vec& e = batch.at(j, i);
      for (int k = 0; k < n; ++k) {
        const double cos = (k == j) ? Cosine(e, CentroidExcluding(batch.speaker(j), i))
                                    : Cosine(e, centroids[k]);
        s(row, k) = scale.w * cos + scale.b;
      }
    }
  }
  return s;
}

SimilarityGrads SimilarityBackward(const EmbeddingBatch& batch,
                                   const SimilarityScale& scale,
                                   const Matrix& upstream) {
  CheckTrainable(batch);
  const int n = batch.num_speakers();
  const int m = batch.utts_per_speaker();
  const std::size_t dim = batch.dim();
  if (upstream.rows != static_cast<std::size_t>(n * m) ||
      upstream.cols != static_cast<std::size_t>(n)) {
    Throw(ErrorCode::kShapeMismatch,
          "upstream is " + std::to_string(upstream.rows) + "x" +
              std::to_string(upstream.cols) + ", similarity matrix is " +
              std::to_string(n * m) + "x" + std::to_string(n));
  }

  const std::vector<Vec> centroids = AllCentroids(batch);
  SimilarityGrads grads;
  grads.embeddings.assign(n * m, Vec(dim, 0.0));
  // dL/dc_k for the full centroids, and for speaker j the summed gradient
  // that reaches every member through its self-excluding centroids.
  std::vector<Vec> full_centroid_grad(n, Vec(dim, 0.0));
  std::vector<Vec> excluded_centroid_grad(n, Vec(dim, 0.0));

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = EmbeddingBatch::RowIndex(j, i, m);
      const Vec& a = batch.at(j, i);
      const double na = Norm(a);
      Vec& grad_a = grads.embeddings[row];
      for (int k = 0; k < n; ++k) {
        const double g = upstream(row, k);
        const Vec c = (k == j) ? CentroidExcluding(batch.speaker(j), i) : centroids[k];
        const double nc = Norm(c);
        if (!(na >= kZeroNormThreshold) || !(nc >= kZeroNormThreshold)) {
          Throw(ErrorCode::kZeroVector, "cosine with a zero-norm vector");
        }
        const double cos = Dot(a, c) / (na * nc);
        grads.w += g * cos;
        grads.b += g;
        if (g == 0.0) continue;
        const double coef = g * scale.w;
        Vec grad_c(dim);
        for (std::size_t d = 0; d < dim; ++d) {
          grad_a[d] += coef * (c[d] / (na * nc) - cos * a[d] / (na * na));
          grad_c[d] = coef * (a[d] / (na * nc) - cos * c[d] / (nc * nc));
        }
        if (k != j) {
          Axpy(1.0, grad_c, full_centroid_grad[k]);
        } else {
          // c_j^(-i) = (sum_m e_jm - e_ji) / (M - 1)
          const double inv = 1.0 / static_cast<double>(m - 1);
          Axpy(inv, grad_c, excluded_centroid_grad[j]);
          Axpy(-inv, grad_c, grad_a);
        }
      }
    }
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < m; ++i) {
      Vec& g = grads.embeddings[EmbeddingBatch::RowIndex(k, i, m)];
      Axpy(inv_m, full_centroid_grad[k], g);
      Axpy(1.0, excluded_centroid_grad[k], g);
    }
  }
  return grads;
}

}  // namespace svkit
