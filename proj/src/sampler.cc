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

#include "svkit/sampler.h"

#include <string>

namespace svkit {

void BatchSpec::Validate() const {
  if (n < 2 || m < 2) {
    Throw(ErrorCode::kInvalidArgument, "batch needs N >= 2 and M >= 2, got N=" +
                                           std::to_string(n) + " M=" + std::to_string(m));
  }
  if (lb < 1 || lb > ub) {
    Throw(ErrorCode::kInvalidArgument, "segment lengths need 1 <= lb <= ub, got [" +
                                           std::to_string(lb) + ", " + std::to_string(ub) + "]");
  }
}

int SampleSegmentLength(int lb, int ub, Rng& rng) {
  if (lb > ub) Throw(ErrorCode::kInvalidArgument, "lb > ub");
  return std::uniform_int_distribution<int>(lb, ub)(rng);
}

Matrix CropSegment(const Matrix& utterance, int t, Rng& rng) {
  if (t < 1) Throw(ErrorCode::kInvalidArgument, "crop length must be >= 1");
  if (utterance.rows < static_cast<std::size_t>(t)) {
    Throw(ErrorCode::kTooShort, "utterance has " + std::to_string(utterance.rows) +
                                    " frames, crop needs " + std::to_string(t));
  }
  const int offset = std::uniform_int_distribution<int>(
      0, static_cast<int>(utterance.rows) - t)(rng);
  Matrix crop(t, utterance.cols);
  std::copy(utterance.data.begin() + static_cast<std::ptrdiff_t>(offset * utterance.cols),
            utterance.data.begin() +
                static_cast<std::ptrdiff_t>((offset + t) * utterance.cols),
            crop.data.begin());
  return crop;
}

namespace {

// First `count` entries of a seeded partial Fisher-Yates shuffle.
std::vector<int> DrawWithoutReplacement(std::vector<int> pool, int count, Rng& rng) {
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, static_cast<int>(pool.size()) - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

FrameBatch SampleBatch(const DataSource& source, const BatchSpec& spec, Rng& rng) {
  spec.Validate();
  FrameBatch batch;
  batch.n = spec.n;
  batch.m = spec.m;
  batch.t = SampleSegmentLength(spec.lb, spec.ub, rng);

  struct Eligible {
    const std::string* speaker;
    const std::vector<Utterance>* utts;
    std::vector<int> long_enough;
  };
  std::vector<Eligible> eligible;
  for (const auto& [speaker, utts] : source.speakers) {
    Eligible e{&speaker, &utts, {}};
    for (int u = 0; u < static_cast<int>(utts.size()); ++u) {
      if (utts[u].frames.rows >= static_cast<std::size_t>(batch.t)) e.long_enough.push_back(u);
    }
    if (static_cast<int>(e.long_enough.size()) >= spec.m) eligible.push_back(std::move(e));
  }
  if (static_cast<int>(eligible.size()) < spec.n) {
    const ErrorCode code = source.speakers.size() >= static_cast<std::size_t>(spec.n)
                               ? ErrorCode::kInsufficientUtterances
                               : ErrorCode::kInsufficientSpeakers;
    Throw(code, "source " + source.id + " has " + std::to_string(eligible.size()) +
                    " speakers with >= " + std::to_string(spec.m) + " utterances of >= " +
                    std::to_string(batch.t) + " frames; batch needs " + std::to_string(spec.n));
  }

  std::vector<int> speaker_pool(eligible.size());
  for (std::size_t s = 0; s < eligible.size(); ++s) speaker_pool[s] = static_cast<int>(s);
  const std::vector<int> chosen = DrawWithoutReplacement(speaker_pool, spec.n, rng);

  batch.segments.reserve(static_cast<std::size_t>(spec.n) * spec.m);
  for (int s : chosen) {
    const Eligible& e = eligible[s];
    batch.speakers.push_back(*e.speaker);
    for (int u : DrawWithoutReplacement(e.long_enough, spec.m, rng)) {
      batch.utterances.push_back(u);
      batch.segments.push_back(CropSegment((*e.utts)[u].frames, batch.t, rng));
    }
  }
  return batch;
}

SourceLoss CombineMultiReader(std::span<const SourceLoss> per_source,
                              std::span<const double> alphas) {
  if (per_source.empty() || per_source.size() != alphas.size()) {
    Throw(ErrorCode::kLengthMismatch, std::to_string(per_source.size()) + " losses, " +
                                          std::to_string(alphas.size()) + " weights");
  }
  SourceLoss out;
  out.grads = per_source.front().grads.ZerosLike();
  for (std::size_t k = 0; k < per_source.size(); ++k) {
    const double alpha = alphas[k];
    out.value += alpha * per_source[k].value;
    out.grads.AddScaled(alpha, per_source[k].grads);
    out.grad_w += alpha * per_source[k].grad_w;
    out.grad_b += alpha * per_source[k].grad_b;
  }
  return out;
}

DataSource PoolSources(std::span<const DataSource> sources) {
  DataSource pooled;
  pooled.id = "pooled";
  for (const DataSource& s : sources) {
    pooled.id += ":" + s.id;
    for (const auto& [speaker, utts] : s.speakers) {
      pooled.speakers[s.id + "/" + speaker] = utts;
    }
  }
  return pooled;
}

}  // namespace svkit
