// svkit/te2e_loss.h

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

// Tuple-based end-to-end baseline: one evaluation embedding scored against
// the centroid of P enrollment embeddings, plus tuple generation and the
// tuple-count analysis used to compare it with the batch loss.

#ifndef SVKIT_TE2E_LOSS_H_
#define SVKIT_TE2E_LOSS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "svkit/common.h"
#include "svkit/embedding.h"
#include "svkit/ge2e_loss.h"
#include "svkit/similarity.h"

namespace svkit {

struct Tuple {
  Vec eval_embedding;
  std::vector<Vec> enroll_embeddings;
  bool is_positive = false;
};

/// A tuple expressed as indices into an EmbeddingBatch.
struct TupleIndices {
  int eval_speaker = 0;
  int eval_utterance = 0;
  int enroll_speaker = 0;
  std::vector<int> enroll_utterances;
  bool is_positive = false;
};

/// Which direction the sigmoid objective pushes the score.
///  kAsPrinted: positive -> sigmoid(s), negative -> 1 - sigmoid(s). Minimizing
///              this lowers s on positive tuples.
///  kTraining:  positive -> 1 - sigmoid(s), negative -> sigmoid(s). Raises s
///              for same-speaker tuples; the trainer uses this one.
enum class TE2EObjective { kAsPrinted, kTraining };

struct TupleLossOutput {
  double value = 0.0;
  Vec grad_eval;
  std::vector<Vec> grad_enroll;
  double grad_w = 0.0;
  double grad_b = 0.0;
};

/// w * cos(eval, centroid(enroll)) + b.
double TE2ESimilarity(const Tuple& tuple, const SimilarityScale& scale);

TupleLossOutput TE2ELoss(const Tuple& tuple, const SimilarityScale& scale,
                         TE2EObjective objective);

Tuple MakeTuple(const EmbeddingBatch& batch, const TupleIndices& indices);

/// Seeded stream of tuples over an N x M batch layout. Tuples alternate
/// positive, negative, positive, ... The evaluation utterance is uniform over
/// the batch. Positive enrollment sets draw P utterances of the same speaker
/// without replacement, leaving out the evaluation utterance when P < M.
/// Negative sets draw P utterances of one uniformly chosen other speaker.
class TupleGenerator {
 public:
  TupleGenerator(int num_speakers, int utts_per_speaker, int p, std::uint64_t seed);
  TupleGenerator(int num_speakers, int utts_per_speaker, int p, Rng rng);

  TupleIndices Next();

 private:
  std::vector<int> DrawUtterances(int pool_size, int count, int skip);

  int num_speakers_;
  int utts_per_speaker_;
  int p_;
  Rng rng_;
  bool next_positive_ = true;
};

std::vector<Tuple> GenerateTuples(const EmbeddingBatch& batch, int p, std::uint64_t seed,
                                  std::size_t count);

/// Sum of the TE2E objective over `tuples`, with gradients scattered back to
/// the batch rows.
LossOutput TE2EBatchLoss(const EmbeddingBatch& batch, const SimilarityScale& scale,
                         const std::vector<TupleIndices>& tuples,
                         TE2EObjective objective);

struct TupleCountReport {
  int n = 0;
  int m = 0;
  int p = 0;
  std::uint64_t positive_count = 0;  // per evaluation utterance: C(M, P)
  std::uint64_t negative_count = 0;  // per evaluation utterance: (N-1) C(M, P)
  std::uint64_t total = 0;           // 2 max(positive, negative)
  std::uint64_t lower_bound = 0;     // 2 (N-1)
  bool attained = false;             // total == lower_bound
};

/// Throws TooLarge if C(n, k) does not fit in 64 bits.
std::uint64_t BinomialCoefficient(int n, int k);

TupleCountReport CountTuples(int n, int m, int p);

/// "N=<n> M=<m> P=<p> total=<t> bound=<b> attained=<true|false>"
std::string FormatTupleCountLine(const TupleCountReport& report);

struct TupleEnumeration {
  std::vector<TupleIndices> positives;
  std::vector<TupleIndices> negatives;
};

/// Lists every positive and negative tuple for the evaluation utterance
/// (speaker 0, utterance 0) by explicit subset enumeration. Enrollment
/// subsets range over all M utterances of the enrollment speaker. Refuses
/// instances with C(m, p) * n > 10^6 (TooLarge).
TupleEnumeration EnumerateTuplesBruteforce(int n, int m, int p);

}  // namespace svkit

#endif  // SVKIT_TE2E_LOSS_H_
