// svkit/experiments.h

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

// Synthetic benchmark drivers: the four-loss comparison and the
// MultiReader-versus-pooling comparison. Both train on one synthetic set and
// report EER on unseen speakers.

#ifndef SVKIT_EXPERIMENTS_H_
#define SVKIT_EXPERIMENTS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "svkit/data_io.h"
#include "svkit/eval.h"
#include "svkit/trainer.h"

namespace svkit {

struct LossComparisonConfig {
  SynthConfig train_data;  // defaults: 50 speakers x 20 utterances
  SynthConfig heldout_data = [] {
    SynthConfig c;
    c.num_speakers = 20;
    c.seed = 9001;
    c.speaker_prefix = "heldout";
    return c;
  }();
  TrainConfig train;  // loss and seed are overwritten per run
  EvalConfig eval;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<LossKind> losses = {LossKind::kSoftmaxId, LossKind::kTE2E,
                                  LossKind::kGE2ESoftmax, LossKind::kGE2EContrast};
};

struct LossComparisonRow {
  LossKind loss = LossKind::kGE2ESoftmax;
  std::vector<double> eers;  // one per seed
  double mean_eer = 0.0;
  double seconds = 0.0;  // training wall-clock summed over seeds
  double min_w = 0.0;    // smallest w over every step of every seed
};

/// `progress`, when non-null, receives one line per finished run.
std::vector<LossComparisonRow> RunLossComparison(const LossComparisonConfig& config,
                                                 std::ostream* progress = nullptr);

/// Header plus one row per loss.
std::string FormatLossTable(const std::vector<LossComparisonRow>& rows);

// The separation and drift are lowered from the synthetic defaults (where
// every training scheme reaches zero EER) and the small domain sits far from
// the large one, so the two schemes can be told apart.
SynthConfig MultiReaderDomain(int speakers, int utts, double domain_shift, std::uint64_t seed,
                              const std::string& prefix);

struct MultiReaderConfig {
  SynthConfig large = MultiReaderDomain(50, 20, 0.0, 101, "a");
  SynthConfig small = MultiReaderDomain(10, 10, 6.0, 202, "b");
  // Unseen speakers from the small source's domain.
  SynthConfig heldout = MultiReaderDomain(20, 20, 6.0, 303, "c");
  double alpha_large = 1.0;
  double alpha_small = 1.0;
  TrainConfig train;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct MultiReaderResult {
  std::vector<double> multireader_eers;
  std::vector<double> pooled_eers;
  double multireader_mean = 0.0;
  double pooled_mean = 0.0;
  double min_w = 0.0;
};

/// Trains once per seed with one batch per source per step (MultiReader) and
/// once on the pooled union of both sources, with equal step counts, and
/// evaluates both on the held-out set.
MultiReaderResult RunMultiReaderExperiment(const MultiReaderConfig& config,
                                           std::ostream* progress = nullptr);

}  // namespace svkit

#endif  // SVKIT_EXPERIMENTS_H_
