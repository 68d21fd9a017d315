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

#include "svkit/trainer.h"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "svkit/data_io.h"
#include "svkit/embedding.h"
#include "svkit/te2e_loss.h"

namespace svkit {

const char* LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kGE2ESoftmax: return "ge2e-softmax";
    case LossKind::kGE2EContrast: return "ge2e-contrast";
    case LossKind::kTE2E: return "te2e";
    case LossKind::kSoftmaxId: return "softmax-id";
  }
  return "unknown";
}

std::optional<LossKind> ParseLossKind(const std::string& name) {
  for (LossKind k : {LossKind::kGE2ESoftmax, LossKind::kGE2EContrast, LossKind::kTE2E,
                     LossKind::kSoftmaxId}) {
    if (name == LossKindName(k)) return k;
  }
  return std::nullopt;
}

void TrainConfig::Validate() const {
  if (!(lr0 > 0.0)) Throw(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (!(clip_norm > 0.0)) Throw(ErrorCode::kInvalidArgument, "clip norm must be > 0");
  if (steps < 0) Throw(ErrorCode::kInvalidArgument, "steps must be >= 0");
  if (halve_every < 1) Throw(ErrorCode::kInvalidArgument, "halve_every must be >= 1");
  if (!(wb_grad_scale >= 0.0) || !(projection_grad_scale >= 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "gradient scales must be >= 0");
  }
  if (!(initial_scale.w > 0.0)) Throw(ErrorCode::kInvalidArgument, "initial w must be > 0");
  if (prefetch_depth < 0) Throw(ErrorCode::kInvalidArgument, "prefetch depth must be >= 0");
  spec.Validate();
  encoder.Validate();
  const int p = EffectiveEnrollSize();
  if (p < 1 || p > spec.m) Throw(ErrorCode::kInvalidArgument, "TE2E enrollment size outside [1, M]");
}

int TrainConfig::EffectiveEnrollSize() const {
  return te2e_enroll_size > 0 ? te2e_enroll_size : std::max(1, spec.m - 1);
}

double LearningRateAt(std::int64_t step, double lr0, std::int64_t halve_every) {
  if (step < 0 || halve_every < 1) Throw(ErrorCode::kInvalidArgument, "bad schedule arguments");
  return std::ldexp(lr0, -static_cast<int>(std::min<std::int64_t>(step / halve_every, 4096)));
}

double GlobalGradNorm(const SourceLoss& grads) {
  return std::sqrt(grads.grads.SquaredNorm() + grads.grad_w * grads.grad_w +
                   grads.grad_b * grads.grad_b);
}

double ClipGlobal(SourceLoss& grads, double clip_norm) {
  if (!grads.grads.AllFinite() || !std::isfinite(grads.grad_w) || !std::isfinite(grads.grad_b)) {
    Throw(ErrorCode::kNonFiniteGradient, "gradient contains NaN or Inf; step aborted");
  }
  const double norm = GlobalGradNorm(grads);
  if (!std::isfinite(norm)) {
    Throw(ErrorCode::kNonFiniteGradient, "gradient norm overflows; step aborted");
  }
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    grads.grads.Scale(factor);
    grads.grad_w *= factor;
    grads.grad_b *= factor;
  }
  return norm;
}

void ApplyUpdate(TrainState& state, SourceLoss grads, const TrainConfig& config) {
  const double lr = LearningRateAt(state.step, config.lr0, config.halve_every);
  for (const std::string& name : ProjectionArrayNames(config.encoder.arch)) {
    auto it = grads.grads.arrays.find(name);
    if (it == grads.grads.arrays.end()) continue;
    for (double& g : it->second.data) g *= config.projection_grad_scale;
  }
  state.params.arrays.AddScaled(-lr, grads.grads);
  state.scale.w -= lr * config.wb_grad_scale * grads.grad_w;
  state.scale.b -= lr * config.wb_grad_scale * grads.grad_b;
  state.scale.ProjectToValid();
  ++state.step;
}

std::string FormatMetricsLine(const StepReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g",
                static_cast<long long>(r.step), r.lr, r.loss, r.grad_norm, r.w, r.b);
  return buf;
}

namespace {

constexpr std::uint64_t kTupleStreamOffset = 1000;

void AddInto(ParamSet& total, const ParamSet& part) {
  for (const auto& [name, m] : part.arrays) {
    Matrix& dst = total.arrays.at(name);
    Axpy(1.0, m.data, dst.data);
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::span<const DataSource> sources)
    : config_(std::move(config)), sources_(sources) {
  config_.Validate();
  if (sources_.empty()) Throw(ErrorCode::kInvalidArgument, "training needs at least one source");
  for (const DataSource& s : sources_) {
    if (s.FeatureDim() != config_.encoder.input_dim) {
      Throw(ErrorCode::kShapeMismatch,
            "source " + s.id + " has feature dimension " + std::to_string(s.FeatureDim()) +
                ", encoder expects " + std::to_string(config_.encoder.input_dim));
    }
    if (!(s.alpha >= 0.0) || !std::isfinite(s.alpha)) {
      Throw(ErrorCode::kInvalidArgument, "source weights must be finite and >= 0");
    }
  }
  if (config_.loss == LossKind::kSoftmaxId) {
    for (std::size_t k = 0; k < sources_.size(); ++k) {
      for (const auto& [speaker, utts] : sources_[k].speakers) {
        const int next = static_cast<int>(class_index_.size());
        class_index_.emplace(std::to_string(k) + "/" + speaker, next);
      }
    }
  }
}

TrainState Trainer::InitialState() const {
  TrainState state;
  EncoderConfig enc = config_.encoder;
  enc.seed = config_.seed;
  state.params = InitParams(enc);
  if (config_.loss == LossKind::kSoftmaxId) {
    AddClassifierHead(state.params, num_classes(), config_.seed ^ 0x9e3779b97f4a7c15ull);
  }
  state.scale = config_.initial_scale;
  state.seed = config_.seed;
  state.step = 0;
  return state;
}

std::vector<FrameBatch> Trainer::SampleStepBatches(std::uint64_t seed, std::int64_t step) const {
  std::vector<FrameBatch> batches;
  batches.reserve(sources_.size());
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    Rng rng = MakeStreamRng(seed, static_cast<std::uint64_t>(step), k);
    batches.push_back(SampleBatch(sources_[k], config_.spec, rng));
  }
  return batches;
}

SourceLoss Trainer::ComputeSourceLoss(const TrainState& state, const FrameBatch& batch,
                                      int source_index) const {
  if (config_.loss == LossKind::kSoftmaxId) return SpeakerIdLoss(state, batch, source_index);
  return EmbeddingLoss(state, batch, source_index);
}

SourceLoss Trainer::EmbeddingLoss(const TrainState& state, const FrameBatch& batch,
                                  int source_index) const {
  const std::size_t rows = batch.segments.size();
  std::vector<Vec> raw(rows);
  std::vector<Vec> embs(rows);
  std::vector<EncoderTape> tapes(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    raw[r] = Forward(batch.segments[r], state.params, &tapes[r]);
    embs[r] = L2Normalize(raw[r]);
  }
  const EmbeddingBatch eb(batch.n, batch.m, std::move(embs));

  LossOutput loss;
  if (config_.loss == LossKind::kTE2E) {
    TupleGenerator gen(batch.n, batch.m, config_.EffectiveEnrollSize(),
                       MakeStreamRng(state.seed, static_cast<std::uint64_t>(state.step),
                                     kTupleStreamOffset + source_index));
    std::vector<TupleIndices> tuples(rows);
    for (auto& t : tuples) t = gen.Next();
    loss = TE2EBatchLoss(eb, state.scale, tuples, TE2EObjective::kTraining);
  } else {
    const GE2EVariant variant = config_.loss == LossKind::kGE2ESoftmax ? GE2EVariant::kSoftmax
                                                                       : GE2EVariant::kContrast;
    loss = GE2EBackward(eb, state.scale, variant);
  }

  SourceLoss out;
  out.value = loss.value;
  out.grad_w = loss.grad_w;
  out.grad_b = loss.grad_b;
  out.grads = state.params.arrays.ZerosLike();
  for (std::size_t r = 0; r < rows; ++r) {
    const Vec upstream = L2NormalizeBackward(raw[r], loss.grad_embeddings[r]);
    AddInto(out.grads, Backward(tapes[r], state.params, upstream));
  }
  return out;
}

SourceLoss Trainer::SpeakerIdLoss(const TrainState& state, const FrameBatch& batch,
                                  int source_index) const {
  const Matrix& head_w = state.params.arrays.at(kHeadWeight);
  const Matrix& head_b = state.params.arrays.at(kHeadBias);
  SourceLoss out;
  out.grads = state.params.arrays.ZerosLike();
  Matrix& g_head_w = out.grads.arrays.at(kHeadWeight);
  Matrix& g_head_b = out.grads.arrays.at(kHeadBias);
  const std::size_t classes = head_w.rows;

  for (int j = 0; j < batch.n; ++j) {
    const auto it = class_index_.find(std::to_string(source_index) + "/" + batch.speakers[j]);
    if (it == class_index_.end()) {
      Throw(ErrorCode::kInvalidArgument, "speaker " + batch.speakers[j] + " has no class");
    }
    const int label = it->second;
    for (int i = 0; i < batch.m; ++i) {
      EncoderTape tape;
      const Vec raw = Forward(batch.segment(j, i), state.params, &tape);
      const Vec e = L2Normalize(raw);
      Vec logits(classes);
      for (std::size_t c = 0; c < classes; ++c) logits[c] = Dot(head_w.Row(c), e) + head_b.data[c];
      out.value += SoftmaxLossRow(logits, label);

      Vec dlogits(classes);
      const double top = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (std::size_t c = 0; c < classes; ++c) sum += (dlogits[c] = std::exp(logits[c] - top));
      for (double& p : dlogits) p /= sum;
      dlogits[label] -= 1.0;

      Vec de(e.size(), 0.0);
      for (std::size_t c = 0; c < classes; ++c) {
        Axpy(dlogits[c], head_w.Row(c), de);
        Axpy(dlogits[c], e, g_head_w.Row(c));
        g_head_b.data[c] += dlogits[c];
      }
      AddInto(out.grads, Backward(tape, state.params, L2NormalizeBackward(raw, de)));
    }
  }
  return out;
}

StepReport Trainer::Step(TrainState& state, std::span<const FrameBatch> batches) const {
  if (batches.size() != sources_.size()) {
    Throw(ErrorCode::kLengthMismatch, "one batch per source is required");
  }
  std::vector<SourceLoss> losses;
  std::vector<double> alphas;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    losses.push_back(ComputeSourceLoss(state, batches[k], static_cast<int>(k)));
    alphas.push_back(sources_[k].alpha);
  }
  SourceLoss combined = CombineMultiReader(losses, alphas);

  StepReport report;
  report.lr = LearningRateAt(state.step, config_.lr0, config_.halve_every);
  report.loss = combined.value;
  report.grad_norm = ClipGlobal(combined, config_.clip_norm);
  ApplyUpdate(state, std::move(combined), config_);
  state.RecordLoss(report.loss);
  report.step = state.step;
  report.w = state.scale.w;
  report.b = state.scale.b;
  return report;
}

StepReport Trainer::Step(TrainState& state) const {
  const std::vector<FrameBatch> batches = SampleStepBatches(state.seed, state.step);
  return Step(state, batches);
}

namespace {

// Samples the batches of upcoming steps on a worker thread, at most `depth`
// steps ahead of the consumer. Each step's batches come from streams keyed
// by the step number, so the result does not depend on timing.
class BatchPrefetcher {
 public:
  BatchPrefetcher(const Trainer& trainer, std::uint64_t seed, std::int64_t first,
                  std::int64_t end, std::size_t depth)
      : trainer_(trainer), seed_(seed), next_(first), end_(end), depth_(depth) {
    worker_ = std::thread([this] { Run(); });
  }

  ~BatchPrefetcher() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  std::vector<FrameBatch> Pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return !queue_.empty() || error_; });
    if (queue_.empty()) std::rethrow_exception(error_);
    std::vector<FrameBatch> front = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return front;
  }

 private:
  void Run() {
    try {
      for (std::int64_t step = next_; step < end_; ++step) {
        {
          std::unique_lock<std::mutex> lock(mu_);
          cv_.wait(lock, [this] { return stop_ || queue_.size() < depth_; });
          if (stop_) return;
        }
        std::vector<FrameBatch> batches = trainer_.SampleStepBatches(seed_, step);
        {
          std::lock_guard<std::mutex> lock(mu_);
          queue_.push_back(std::move(batches));
        }
        cv_.notify_all();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      error_ = std::current_exception();
      cv_.notify_all();
    }
  }

  const Trainer& trainer_;
  std::uint64_t seed_;
  std::int64_t next_;
  std::int64_t end_;
  std::size_t depth_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<FrameBatch>> queue_;
  std::exception_ptr error_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace

TrainResult Train(const TrainConfig& config, std::span<const DataSource> sources,
                  const TrainOptions& options, std::optional<TrainState> resume) {
  const Trainer trainer(config, sources);
  TrainResult result;
  result.state = resume ? std::move(*resume) : trainer.InitialState();
  TrainState& state = result.state;
  result.min_w = state.scale.w;

  std::optional<BatchPrefetcher> prefetcher;
  if (config.prefetch_depth > 0 && state.step < config.steps) {
    prefetcher.emplace(trainer, state.seed, state.step, config.steps,
                       static_cast<std::size_t>(config.prefetch_depth));
  }
  while (state.step < config.steps) {
    const std::vector<FrameBatch> batches =
        prefetcher ? prefetcher->Pop() : trainer.SampleStepBatches(state.seed, state.step);
    const StepReport report = trainer.Step(state, batches);
    result.min_w = std::min(result.min_w, state.scale.w);
    if (options.on_step) options.on_step(state, report);
    if (options.log_every > 0 &&
        (state.step % options.log_every == 0 || state.step == config.steps)) {
      result.log.push_back(report);
      if (options.metrics != nullptr) *options.metrics << FormatMetricsLine(report) << '\n';
    }
    if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
        state.step % options.checkpoint_every == 0) {
      SaveCheckpoint(state, options.checkpoint_path);
    }
  }
  if (!options.checkpoint_path.empty()) SaveCheckpoint(state, options.checkpoint_path);
  return result;
}

}  // namespace svkit
