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

#include "svkit/experiments.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "svkit/sampler.h"

namespace svkit {

namespace {

double Mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

struct RunOutcome {
  double eer = 0.0;
  double seconds = 0.0;
  double min_w = 0.0;
};

RunOutcome TrainAndEvaluate(const TrainConfig& config, std::span<const DataSource> sources,
                            const DataSource& heldout, const EvalConfig& eval) {
  const auto start = std::chrono::steady_clock::now();
  TrainOptions options;
  options.log_every = 0;
  const TrainResult trained = Train(config, sources, options);
  RunOutcome out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.min_w = trained.min_w;
  out.eer = EvaluateSource(heldout, trained.state.params, eval).eer.eer;
  return out;
}

}  // namespace

std::vector<LossComparisonRow> RunLossComparison(const LossComparisonConfig& config,
                                                 std::ostream* progress) {
  if (config.seeds.empty()) Throw(ErrorCode::kInvalidArgument, "no seeds given");
  const std::vector<DataSource> train = {GenerateSynthetic(config.train_data).source};
  const DataSource heldout = GenerateSynthetic(config.heldout_data).source;

  std::vector<LossComparisonRow> rows;
  for (LossKind loss : config.losses) {
    LossComparisonRow row;
    row.loss = loss;
    row.min_w = config.train.initial_scale.w;
    for (std::uint64_t seed : config.seeds) {
      TrainConfig tc = config.train;
      tc.loss = loss;
      tc.seed = seed;
      tc.encoder.input_dim = config.train_data.dim;
      const RunOutcome run = TrainAndEvaluate(tc, train, heldout, config.eval);
      row.eers.push_back(run.eer);
      row.seconds += run.seconds;
      row.min_w = std::min(row.min_w, run.min_w);
      if (progress != nullptr) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s seed=%llu eer=%.4f time=%.1fs min_w=%.4f",
                      LossKindName(loss), static_cast<unsigned long long>(seed), run.eer,
                      run.seconds, run.min_w);
        *progress << buf << std::endl;
      }
    }
    row.mean_eer = Mean(row.eers);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string FormatLossTable(const std::vector<LossComparisonRow>& rows) {
  std::string out = "loss\tmean_eer\ttrain_seconds\tmin_w\n";
  char buf[160];
  for (const LossComparisonRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.2f\t%.6f\n", LossKindName(r.loss), r.mean_eer,
                  r.seconds, r.min_w);
    out += buf;
  }
  return out;
}

SynthConfig MultiReaderDomain(int speakers, int utts, double domain_shift, std::uint64_t seed,
                              const std::string& prefix) {
  SynthConfig c;
  c.num_speakers = speakers;
  c.utts_per_speaker = utts;
  c.speaker_separation = 0.5;
  c.channel_drift = 0.5;
  c.domain_shift = domain_shift;
  c.seed = seed;
  c.speaker_prefix = prefix;
  return c;
}

MultiReaderResult RunMultiReaderExperiment(const MultiReaderConfig& config,
                                           std::ostream* progress) {
  if (config.seeds.empty()) Throw(ErrorCode::kInvalidArgument, "no seeds given");
  if (config.large.dim != config.small.dim || config.small.dim != config.heldout.dim) {
    Throw(ErrorCode::kShapeMismatch, "sources must share the feature dimension");
  }
  std::vector<DataSource> sources = {GenerateSynthetic(config.large).source,
                                     GenerateSynthetic(config.small).source};
  sources[0].id = "large";
  sources[0].alpha = config.alpha_large;
  sources[1].id = "small";
  sources[1].alpha = config.alpha_small;
  const std::vector<DataSource> pooled = {PoolSources(sources)};
  const DataSource heldout = GenerateSynthetic(config.heldout).source;

  MultiReaderResult result;
  result.min_w = config.train.initial_scale.w;
  for (std::uint64_t seed : config.seeds) {
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.encoder.input_dim = config.large.dim;
    const RunOutcome multi = TrainAndEvaluate(tc, sources, heldout, config.eval);
    const RunOutcome pool = TrainAndEvaluate(tc, pooled, heldout, config.eval);
    result.multireader_eers.push_back(multi.eer);
    result.pooled_eers.push_back(pool.eer);
    result.min_w = std::min({result.min_w, multi.min_w, pool.min_w});
    if (progress != nullptr) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "seed=%llu multireader_eer=%.4f pooled_eer=%.4f",
                    static_cast<unsigned long long>(seed), multi.eer, pool.eer);
      *progress << buf << std::endl;
    }
  }
  result.multireader_mean = Mean(result.multireader_eers);
  result.pooled_mean = Mean(result.pooled_eers);
  return result;
}

}  // namespace svkit
