// svkit/trainer.h

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

// Plain SGD over the end-to-end losses. One step:
//
//   sample one batch per source -> encoder forward -> L2 normalize ->
//   loss + gradients per source -> alpha-weighted sum over sources ->
//   global L2 clipping -> per-array gradient scales ((w, b) and the final
//   projection) -> params -= lr * grad -> w clamped to >= 1e-6 -> step + 1
//
// The loss is a sum over the batch rows, so the effective step size grows
// with N * M; the learning rate is tuned together with the batch shape.

#ifndef SVKIT_TRAINER_H_
#define SVKIT_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "svkit/encoder.h"
#include "svkit/ge2e_loss.h"
#include "svkit/sampler.h"
#include "svkit/similarity.h"
#include "svkit/train_state.h"
#include "svkit/utterance.h"

namespace svkit {

enum class LossKind {
  kGE2ESoftmax,
  kGE2EContrast,
  kTE2E,
  kSoftmaxId,  // cross-entropy over training speakers through a discarded head
};

const char* LossKindName(LossKind kind);
std::optional<LossKind> ParseLossKind(const std::string& name);

struct TrainConfig {
  LossKind loss = LossKind::kGE2ESoftmax;
  double lr0 = 0.01;
  std::int64_t halve_every = 2000;
  double clip_norm = 3.0;
  double wb_grad_scale = 0.01;
  double projection_grad_scale = 0.5;
  std::int64_t steps = 4000;
  BatchSpec spec;
  std::uint64_t seed = 1;
  EncoderConfig encoder;
  SimilarityScale initial_scale;  // (10, -5)
  int te2e_enroll_size = 0;       // P; 0 means M - 1
  int prefetch_depth = 2;         // batches prepared ahead of the update loop

  void Validate() const;
  int EffectiveEnrollSize() const;
};

/// lr0 * 2^-floor(step / halve_every)
double LearningRateAt(std::int64_t step, double lr0, std::int64_t halve_every);

/// L2 norm over every gradient array and the (w, b) gradients together.
double GlobalGradNorm(const SourceLoss& grads);

/// Rescales all gradients by clip_norm / g when the global norm g exceeds
/// clip_norm. Returns the norm before clipping. Throws NonFiniteGradient.
double ClipGlobal(SourceLoss& grads, double clip_norm);

/// Gradient scales, SGD update, w clamp and step increment. `grads` must
/// already be clipped.
void ApplyUpdate(TrainState& state, SourceLoss grads, const TrainConfig& config);

struct StepReport {
  std::int64_t step = 0;  // steps completed after this update
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  double w = 0.0;
  double b = 0.0;
};

/// Tab-separated "step lr loss grad_norm w b".
std::string FormatMetricsLine(const StepReport& report);

class Trainer {
 public:
  /// `sources` must outlive the trainer. Each source's alpha is its
  /// MultiReader weight.
  Trainer(TrainConfig config, std::span<const DataSource> sources);

  const TrainConfig& config() const { return config_; }
  int num_classes() const { return static_cast<int>(class_index_.size()); }

  TrainState InitialState() const;

  /// One batch per source, drawn from streams keyed by (seed, step, source).
  std::vector<FrameBatch> SampleStepBatches(std::uint64_t seed, std::int64_t step) const;

  /// Loss and encoder/scale gradients for one source's batch.
  SourceLoss ComputeSourceLoss(const TrainState& state, const FrameBatch& batch,
                               int source_index) const;

  StepReport Step(TrainState& state, std::span<const FrameBatch> batches) const;
  StepReport Step(TrainState& state) const;

 private:
  SourceLoss EmbeddingLoss(const TrainState& state, const FrameBatch& batch,
                           int source_index) const;
  SourceLoss SpeakerIdLoss(const TrainState& state, const FrameBatch& batch,
                           int source_index) const;

  TrainConfig config_;
  std::span<const DataSource> sources_;
  std::map<std::string, int> class_index_;  // "<source index>/<speaker>"
};

struct TrainOptions {
  std::filesystem::path checkpoint_path;  // empty: no checkpoint
  std::int64_t checkpoint_every = 0;      // 0: only at the end
  std::ostream* metrics = nullptr;
  std::int64_t log_every = 100;
  std::function<void(const TrainState&, const StepReport&)> on_step;
};

struct TrainResult {
  TrainState state;
  std::vector<StepReport> log;  // the logged steps
  double min_w = 0.0;           // smallest w seen at any step boundary
};

/// Runs until state.step == config.steps, starting from `resume` if given.
TrainResult Train(const TrainConfig& config, std::span<const DataSource> sources,
                  const TrainOptions& options, std::optional<TrainState> resume = std::nullopt);

}  // namespace svkit

#endif  // SVKIT_TRAINER_H_
