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

#include "svkit/gradcheck.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "svkit/embedding.h"
#include "svkit/ge2e_loss.h"
#include "svkit/similarity.h"
#include "svkit/te2e_loss.h"
#include "svkit/trainer.h"

namespace svkit {

double RelativeError(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    Throw(ErrorCode::kShapeMismatch, "gradient arrays differ in size");
  }
  double diff = 0.0;
  double scale = 1e-8;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / scale;
}

Vec NumericGradient(const std::function<double(const Vec&)>& f, const Vec& x, double eps) {
  Vec grad(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

bool GradCheckReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.passed; });
}

namespace {

Vec Flatten(const std::vector<Vec>& rows) {
  Vec flat;
  for (const Vec& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

std::vector<Vec> Unflatten(const Vec& flat, std::size_t rows, std::size_t dim) {
  std::vector<Vec> out(rows, Vec(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(flat.begin() + r * dim, flat.begin() + (r + 1) * dim, out[r].begin());
  }
  return out;
}

Vec RandomUnit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (double& x : v) x = normal(rng);
  return L2Normalize(v);
}

SimilarityScale RandomScale(Rng& rng) {
  SimilarityScale s;
  s.w = std::uniform_real_distribution<double>(0.5, 12.0)(rng);
  s.b = std::uniform_real_distribution<double>(-6.0, 2.0)(rng);
  return s;
}

double CheckGE2E(GE2EVariant variant, int n, int m, int dim, Rng& rng, double eps) {
  std::vector<Vec> rows;
  for (int r = 0; r < n * m; ++r) rows.push_back(RandomUnit(dim, rng));
  const SimilarityScale scale = RandomScale(rng);
  const LossOutput analytic = GE2EBackward(EmbeddingBatch(n, m, rows), scale, variant);

  auto loss_at = [&](const std::vector<Vec>& vs, const SimilarityScale& sc) {
    return GE2ETotal(BuildSimilarityMatrix(EmbeddingBatch(n, m, vs), sc), variant);
  };
  const Vec numeric_e = NumericGradient(
      [&](const Vec& x) { return loss_at(Unflatten(x, n * m, dim), scale); }, Flatten(rows),
      eps);
  const Vec numeric_wb = NumericGradient(
      [&](const Vec& x) { return loss_at(rows, SimilarityScale{x[0], x[1]}); },
      {scale.w, scale.b}, eps);
  Vec a = Flatten(analytic.grad_embeddings);
  a.push_back(analytic.grad_w);
  a.push_back(analytic.grad_b);
  Vec num = numeric_e;
  num.insert(num.end(), numeric_wb.begin(), numeric_wb.end());
  return RelativeError(a, num);
}

double CheckTE2E(TE2EObjective objective, Rng& rng, double eps) {
  const int dim = std::uniform_int_distribution<int>(4, 8)(rng);
  const int p = std::uniform_int_distribution<int>(1, 3)(rng);
  Tuple tuple;
  tuple.eval_embedding = RandomUnit(dim, rng);
  for (int q = 0; q < p; ++q) tuple.enroll_embeddings.push_back(RandomUnit(dim, rng));
  tuple.is_positive = std::bernoulli_distribution(0.5)(rng);
  const SimilarityScale scale = RandomScale(rng);
  const TupleLossOutput analytic = TE2ELoss(tuple, scale, objective);

  auto loss_at = [&](const Vec& flat, const SimilarityScale& sc) {
    Tuple t;
    t.is_positive = tuple.is_positive;
    const std::vector<Vec> vs = Unflatten(flat, p + 1, dim);
    t.eval_embedding = vs[0];
    t.enroll_embeddings.assign(vs.begin() + 1, vs.end());
    return TE2ELoss(t, sc, objective).value;
  };
  std::vector<Vec> all = {tuple.eval_embedding};
  all.insert(all.end(), tuple.enroll_embeddings.begin(), tuple.enroll_embeddings.end());
  const Vec flat = Flatten(all);
  const Vec numeric_e = NumericGradient([&](const Vec& x) { return loss_at(x, scale); }, flat, eps);
  const Vec numeric_wb = NumericGradient(
      [&](const Vec& x) { return loss_at(flat, SimilarityScale{x[0], x[1]}); },
      {scale.w, scale.b}, eps);
  std::vector<Vec> analytic_rows = {analytic.grad_eval};
  analytic_rows.insert(analytic_rows.end(), analytic.grad_enroll.begin(),
                       analytic.grad_enroll.end());
  Vec a = Flatten(analytic_rows);
  a.push_back(analytic.grad_w);
  a.push_back(analytic.grad_b);
  Vec num = numeric_e;
  num.insert(num.end(), numeric_wb.begin(), numeric_wb.end());
  return RelativeError(a, num);
}

// Loss through the encoder, normalization and the trainer's loss path on a
// tiny random source: N=2 speakers, M=2 utterances of T=5 frames, D=3.
double CheckChain(LossKind loss, EncoderArch arch, std::uint64_t seed, double eps) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataSource source;
  source.id = "gradcheck";
  for (int s = 0; s < 2; ++s) {
    auto& utts = source.speakers["s" + std::to_string(s)];
    for (int u = 0; u < 2; ++u) {
      Utterance utt;
      utt.speaker_id = "s" + std::to_string(s);
      utt.frames = Matrix(5, 3);
      for (double& x : utt.frames.data) x = normal(rng);
      utts.push_back(std::move(utt));
    }
  }
  TrainConfig config;
  config.loss = loss;
  config.seed = seed;
  config.spec = BatchSpec{2, 2, 5, 5};
  config.encoder.input_dim = 3;
  config.encoder.hidden_dim = 4;
  config.encoder.output_dim = 3;
  config.encoder.arch = arch;
  config.te2e_enroll_size = 1;
  const std::vector<DataSource> sources = {source};
  const Trainer trainer(config, sources);
  TrainState state = trainer.InitialState();
  state.scale = RandomScale(rng);
  const FrameBatch batch = trainer.SampleStepBatches(seed, 0).front();
  const SourceLoss analytic = trainer.ComputeSourceLoss(state, batch, 0);

  Vec a;
  Vec num;
  for (const auto& [name, array] : state.params.arrays.arrays) {
    const Vec numeric = NumericGradient(
        [&](const Vec& x) {
          TrainState probe = state;
          probe.params.arrays[name].data = x;
          return trainer.ComputeSourceLoss(probe, batch, 0).value;
        },
        array.data, eps);
    const Vec& g = analytic.grads.at(name).data;
    a.insert(a.end(), g.begin(), g.end());
    num.insert(num.end(), numeric.begin(), numeric.end());
  }
  const Vec numeric_wb = NumericGradient(
      [&](const Vec& x) {
        TrainState probe = state;
        probe.scale = SimilarityScale{x[0], x[1]};
        return trainer.ComputeSourceLoss(probe, batch, 0).value;
      },
      {state.scale.w, state.scale.b}, eps);
  a.push_back(analytic.grad_w);
  a.push_back(analytic.grad_b);
  num.insert(num.end(), numeric_wb.begin(), numeric_wb.end());
  return RelativeError(a, num);
}

}  // namespace

GradCheckReport RunGradientChecks(const GradCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;
  report.tolerance = options.tolerance;
  Rng rng(options.seed);
  auto add = [&](std::string name, double err) {
    report.entries.push_back({std::move(name), err, err <= options.tolerance});
  };

  const int ns[] = {2, 3, 4};
  const int ms[] = {2, 3};
  const int dims[] = {4, 8};
  for (GE2EVariant variant : {GE2EVariant::kSoftmax, GE2EVariant::kContrast}) {
    const char* label = variant == GE2EVariant::kSoftmax ? "ge2e-softmax" : "ge2e-contrast";
    for (int k = 0; k < options.instances; ++k) {
      const int n = ns[k % 3];
      const int m = ms[(k / 3) % 2];
      const int dim = dims[(k / 6) % 2];
      std::ostringstream name;
      name << label << " embeddings N=" << n << " M=" << m << " dim=" << dim << " #" << k;
      add(name.str(), CheckGE2E(variant, n, m, dim, rng, options.eps));
    }
  }
  for (TE2EObjective objective : {TE2EObjective::kTraining, TE2EObjective::kAsPrinted}) {
    const char* label = objective == TE2EObjective::kTraining ? "te2e-training" : "te2e-printed";
    for (int k = 0; k < options.instances; ++k) {
      add(std::string(label) + " tuple #" + std::to_string(k), CheckTE2E(objective, rng, options.eps));
    }
  }
  const int chain_seeds = std::max(1, options.instances / 4);
  for (LossKind loss : {LossKind::kGE2ESoftmax, LossKind::kGE2EContrast, LossKind::kTE2E,
                        LossKind::kSoftmaxId}) {
    for (EncoderArch arch : {EncoderArch::kMeanLinear, EncoderArch::kRecurrent}) {
      for (int k = 0; k < chain_seeds; ++k) {
        const std::uint64_t seed = options.seed * 1000 + static_cast<std::uint64_t>(k);
        add(std::string(LossKindName(loss)) + " chain " + EncoderArchName(arch) + " #" +
                std::to_string(k),
            CheckChain(loss, arch, seed, options.eps));
      }
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace svkit
