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

#include "svkit/te2e_loss.h"

#include <algorithm>
#include <limits>
#include <sstream>

namespace svkit {

namespace {

void CheckTuple(const Tuple& tuple) {
  if (tuple.enroll_embeddings.empty()) {
    Throw(ErrorCode::kEmptyList, "tuple has no enrollment embeddings");
  }
}

void CheckCountArgs(int n, int m, int p) {
  if (n < 2) Throw(ErrorCode::kInvalidArgument, "N must be >= 2");
  if (m < 1) Throw(ErrorCode::kInvalidArgument, "M must be >= 1");
  if (p < 1 || p > m) Throw(ErrorCode::kInvalidArgument, "P must lie in [1, M]");
}

}  // namespace

double TE2ESimilarity(const Tuple& tuple, const SimilarityScale& scale) {
  CheckTuple(tuple);
  return scale.w * Cosine(tuple.eval_embedding, Centroid(tuple.enroll_embeddings)) +
         scale.b;
}

TupleLossOutput TE2ELoss(const Tuple& tuple, const SimilarityScale& scale,
                         TE2EObjective objective) {
  CheckTuple(tuple);
  const Vec& a = tuple.eval_embedding;
  const Vec c = Centroid(tuple.enroll_embeddings);
  const double na = Norm(a);
  const double nc = Norm(c);
  if (!(na >= kZeroNormThreshold) || !(nc >= kZeroNormThreshold)) {
    Throw(ErrorCode::kZeroVector, "cosine with a zero-norm vector");
  }
  const double cos = Dot(a, c) / (na * nc);
  const double s = scale.w * cos + scale.b;
  const double sig = Sigmoid(s);

  // Both objectives are +/- sigmoid(s) plus a constant.
  const bool rises_with_s = (objective == TE2EObjective::kAsPrinted) == tuple.is_positive;
  TupleLossOutput out;
  out.value = rises_with_s ? sig : 1.0 - sig;
  const double dl_ds = (rises_with_s ? 1.0 : -1.0) * sig * (1.0 - sig);

  out.grad_w = dl_ds * cos;
  out.grad_b = dl_ds;
  const double coef = dl_ds * scale.w;
  const std::size_t dim = a.size();
  out.grad_eval.resize(dim);
  Vec grad_c(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    out.grad_eval[d] = coef * (c[d] / (na * nc) - cos * a[d] / (na * na));
    grad_c[d] = coef * (a[d] / (na * nc) - cos * c[d] / (nc * nc));
  }
  const double inv_p = 1.0 / static_cast<double>(tuple.enroll_embeddings.size());
  out.grad_enroll.assign(tuple.enroll_embeddings.size(), Vec(dim));
  for (Vec& g : out.grad_enroll) {
    for (std::size_t d = 0; d < dim; ++d) g[d] = inv_p * grad_c[d];
  }
  return out;
}

Tuple MakeTuple(const EmbeddingBatch& batch, const TupleIndices& indices) {
  Tuple tuple;
  tuple.eval_embedding = batch.at(indices.eval_speaker, indices.eval_utterance);
  for (int u : indices.enroll_utterances) {
    tuple.enroll_embeddings.push_back(batch.at(indices.enroll_speaker, u));
  }
  tuple.is_positive = indices.is_positive;
  return tuple;
}

TupleGenerator::TupleGenerator(int num_speakers, int utts_per_speaker, int p,
                               std::uint64_t seed)
    : TupleGenerator(num_speakers, utts_per_speaker, p, Rng(seed)) {}

TupleGenerator::TupleGenerator(int num_speakers, int utts_per_speaker, int p, Rng rng)
    : num_speakers_(num_speakers),
      utts_per_speaker_(utts_per_speaker),
      p_(p),
      rng_(std::move(rng)) {
  if (num_speakers_ < 2) {
    Throw(ErrorCode::kSingleSpeaker, "negative tuples need at least two speakers");
  }
  if (p_ < 1 || p_ > utts_per_speaker_) {
    Throw(ErrorCode::kInvalidArgument, "P must lie in [1, M]");
  }
}

std::vector<int> TupleGenerator::DrawUtterances(int pool_size, int count, int skip) {
  std::vector<int> pool;
  for (int u = 0; u < pool_size; ++u) {
    if (u != skip) pool.push_back(u);
  }
  // Partial Fisher-Yates.
  for (int t = 0; t < count; ++t) {
    std::uniform_int_distribution<int> pick(t, static_cast<int>(pool.size()) - 1);
    std::swap(pool[t], pool[pick(rng_)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

TupleIndices TupleGenerator::Next() {
  TupleIndices t;
  std::uniform_int_distribution<int> speaker(0, num_speakers_ - 1);
  std::uniform_int_distribution<int> utterance(0, utts_per_speaker_ - 1);
  t.eval_speaker = speaker(rng_);
  t.eval_utterance = utterance(rng_);
  t.is_positive = next_positive_;
  next_positive_ = !next_positive_;
  if (t.is_positive) {
    t.enroll_speaker = t.eval_speaker;
    const int skip = p_ < utts_per_speaker_ ? t.eval_utterance : -1;
    t.enroll_utterances = DrawUtterances(utts_per_speaker_, p_, skip);
  } else {
    std::uniform_int_distribution<int> other(0, num_speakers_ - 2);
    const int k = other(rng_);
    t.enroll_speaker = k >= t.eval_speaker ? k + 1 : k;
    t.enroll_utterances = DrawUtterances(utts_per_speaker_, p_, -1);
  }
  return t;
}

std::vector<Tuple> GenerateTuples(const EmbeddingBatch& batch, int p, std::uint64_t seed,
                                  std::size_t count) {
  TupleGenerator gen(batch.num_speakers(), batch.utts_per_speaker(), p, seed);
  std::vector<Tuple> tuples;
  tuples.reserve(count);
  for (std::size_t t = 0; t < count; ++t) tuples.push_back(MakeTuple(batch, gen.Next()));
  return tuples;
}

LossOutput TE2EBatchLoss(const EmbeddingBatch& batch, const SimilarityScale& scale,
                         const std::vector<TupleIndices>& tuples,
                         TE2EObjective objective) {
  const int m = batch.utts_per_speaker();
  LossOutput out;
  out.grad_embeddings.assign(batch.num_rows(), Vec(batch.dim(), 0.0));
  for (const TupleIndices& idx : tuples) {
    const TupleLossOutput t = TE2ELoss(MakeTuple(batch, idx), scale, objective);
    out.value += t.value;
    out.grad_w += t.grad_w;
    out.grad_b += t.grad_b;
    Axpy(1.0, t.grad_eval,
         out.grad_embeddings[EmbeddingBatch::RowIndex(idx.eval_speaker, idx.eval_utterance, m)]);
    for (std::size_t q = 0; q < idx.enroll_utterances.size(); ++q) {
      Axpy(1.0, t.grad_enroll[q],
           out.grad_embeddings[EmbeddingBatch::RowIndex(idx.enroll_speaker,
                                                        idx.enroll_utterances[q], m)]);
    }
  }
  return out;
}

std::uint64_t BinomialCoefficient(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t factor = static_cast<std::uint64_t>(n - k + i);
    if (result > std::numeric_limits<std::uint64_t>::max() / factor) {
      Throw(ErrorCode::kTooLarge, "binomial coefficient overflows 64 bits");
    }
    result = result * factor / static_cast<std::uint64_t>(i);
  }
  return result;
}

TupleCountReport CountTuples(int n, int m, int p) {
  CheckCountArgs(n, m, p);
  TupleCountReport r;
  r.n = n;
  r.m = m;
  r.p = p;
  r.positive_count = BinomialCoefficient(m, p);
  r.negative_count = static_cast<std::uint64_t>(n - 1) * r.positive_count;
  r.total = 2 * std::max(r.positive_count, r.negative_count);
  r.lower_bound = 2 * static_cast<std::uint64_t>(n - 1);
  r.attained = r.total == r.lower_bound;
  return r;
}

std::string FormatTupleCountLine(const TupleCountReport& report) {
  std::ostringstream os;
  os << "N=" << report.n << " M=" << report.m << " P=" << report.p
     << " total=" << report.total << " bound=" << report.lower_bound
     << " attained=" << (report.attained ? "true" : "false");
  return os.str();
}

namespace {

// Calls `visit` with every increasing k-subset of [0, n).
template <typename Visit>
void ForEachSubset(int n, int k, Visit&& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

}  // namespace

TupleEnumeration EnumerateTuplesBruteforce(int n, int m, int p) {
  CheckCountArgs(n, m, p);
  const std::uint64_t subsets = BinomialCoefficient(m, p);
  if (subsets * static_cast<std::uint64_t>(n) > 1000000) {
    Throw(ErrorCode::kTooLarge, "enumeration limited to C(m,p) * n <= 10^6");
  }
  TupleEnumeration out;
  for (int k = 0; k < n; ++k) {
    ForEachSubset(m, p, [&](const std::vector<int>& subset) {
      TupleIndices t;
      t.eval_speaker = 0;
      t.eval_utterance = 0;
      t.enroll_speaker = k;
      t.enroll_utterances = subset;
      t.is_positive = k == 0;
      (t.is_positive ? out.positives : out.negatives).push_back(std::move(t));
    });
  }
  return out;
}

}  // namespace svkit
