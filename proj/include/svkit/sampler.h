// svkit/sampler.h

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

#ifndef SVKIT_SAMPLER_H_
#define SVKIT_SAMPLER_H_

#include <span>
#include <string>
#include <vector>

#include "svkit/common.h"
#include "svkit/encoder.h"
#include "svkit/utterance.h"

namespace svkit {

/// N speakers x M utterances per batch; every batch gets one crop length t
/// drawn uniformly from [lb, ub]. Text-dependent training is lb == ub.
struct BatchSpec {
  int n = 8;
  int m = 4;
  int lb = 140;
  int ub = 180;

  void Validate() const;
};

/// N x M crops of a common length, row-major (j * M + i).
struct FrameBatch {
  int n = 0;
  int m = 0;
  int t = 0;
  std::vector<Matrix> segments;
  std::vector<std::string> speakers;  // length N, ids within the source
  std::vector<int> utterances;        // length N*M, index into the speaker's list

  const Matrix& segment(int j, int i) const { return segments[j * m + i]; }
};

/// Uniform integer in [lb, ub].
int SampleSegmentLength(int lb, int ub, Rng& rng);

/// Contiguous t-frame window at a uniform offset in [0, T - t]. Throws
/// TooShort when the utterance has fewer than t frames.
Matrix CropSegment(const Matrix& utterance, int t, Rng& rng);

/// Draws t, then N distinct speakers that have at least M utterances of
/// length >= t, then M distinct such utterances per speaker, all without
/// replacement. Shorter utterances never enter a batch.
FrameBatch SampleBatch(const DataSource& source, const BatchSpec& spec, Rng& rng);

/// Loss and gradients accumulated from one source's batch.
struct SourceLoss {
  double value = 0.0;
  ParamSet grads;  // encoder (and head) arrays
  double grad_w = 0.0;
  double grad_b = 0.0;
};

/// sum_k alpha_k * loss_k, applied to the value and to every gradient.
/// Throws LengthMismatch unless the spans have the same non-zero length.
SourceLoss CombineMultiReader(std::span<const SourceLoss> per_source,
                              std::span<const double> alphas);

/// Naive mixing baseline: all sources merged into one pool. Speaker ids are
/// qualified as "<source id>/<speaker>" so equal ids in different sources
/// stay different speakers.
DataSource PoolSources(std::span<const DataSource> sources);

}  // namespace svkit

#endif  // SVKIT_SAMPLER_H_
