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

// svkit command-line entry point.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svkit/data_io.h"
#include "svkit/eval.h"
#include "svkit/experiments.h"
#include "svkit/gradcheck.h"
#include "svkit/te2e_loss.h"
#include "svkit/trainer.h"

namespace {

using namespace svkit;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs a config's Validate() and reports its complaint as a usage error.
template <typename Config>
void ValidateFlags(const Config& config) {
  try {
    config.Validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void ParseFrameRange(const std::string& text, int& lo, int& hi) {
  static const std::regex kRange(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, kRange)) {
    throw UsageError("--frames expects LO..HI, got '" + text + "'");
  }
  lo = std::stoi(m[1]);
  hi = std::stoi(m[2]);
  if (lo > hi) throw UsageError("--frames: LO must not exceed HI");
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  std::string frames = "180..300";
  SynthConfig config;
};

void AddSynth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth", "Write a synthetic speaker dataset and manifest");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--speakers", a.config.num_speakers, "Number of speakers")->capture_default_str();
  cmd->add_option("--utts", a.config.utts_per_speaker, "Utterances per speaker")
      ->capture_default_str();
  cmd->add_option("--dim", a.config.dim, "Feature dimension")->capture_default_str();
  cmd->add_option("--frames", a.frames, "Frame-count range LO..HI")->capture_default_str();
  cmd->add_option("--sep", a.config.speaker_separation, "Between-speaker std")
      ->capture_default_str();
  cmd->add_option("--noise", a.config.within_noise, "Per-frame noise std")->capture_default_str();
  cmd->add_option("--drift", a.config.channel_drift, "Per-utterance channel offset std")
      ->capture_default_str();
  cmd->add_option("--domain-shift", a.config.domain_shift, "Scale of the fixed domain offset")
      ->capture_default_str();
  cmd->add_option("--seed", a.config.seed, "Random seed")->capture_default_str();
  cmd->add_option("--prefix", a.config.speaker_prefix, "Speaker id prefix")->capture_default_str();
}

int RunSynth(SynthArgs& a) {
  ParseFrameRange(a.frames, a.config.min_frames, a.config.max_frames);
  ValidateFlags(a.config);
  const auto manifest = WriteSyntheticDataset(a.config, a.out);
  std::cout << manifest.string() << '\n';
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::vector<std::string> manifests;
  std::vector<double> alphas;
  std::string loss = "ge2e-softmax";
  std::string arch = "mean-linear";
  std::string ckpt_out;
  std::string metrics_out;
  std::string resume;
  std::int64_t ckpt_every = 0;
  std::int64_t log_every = 100;
  TrainConfig config;
};

void AddTrain(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train an embedding encoder");
  cmd->add_option("--manifest", a.manifests, "Training manifest (repeatable)")->required();
  cmd->add_option("--alpha", a.alphas, "Per-manifest loss weight (repeatable, default 1.0)");
  cmd->add_option("--loss", a.loss, "ge2e-softmax | ge2e-contrast | te2e | softmax-id")
      ->capture_default_str();
  cmd->add_option("--n", a.config.spec.n, "Speakers per batch")->capture_default_str();
  cmd->add_option("--m", a.config.spec.m, "Utterances per speaker")->capture_default_str();
  cmd->add_option("--lb", a.config.spec.lb, "Shortest segment (frames)")->capture_default_str();
  cmd->add_option("--ub", a.config.spec.ub, "Longest segment (frames)")->capture_default_str();
  cmd->add_option("--lr", a.config.lr0, "Initial learning rate")->capture_default_str();
  cmd->add_option("--halve-every", a.config.halve_every, "Steps between learning-rate halvings")
      ->capture_default_str();
  cmd->add_option("--clip", a.config.clip_norm, "Global gradient-norm clip")
      ->capture_default_str();
  cmd->add_option("--wb-scale", a.config.wb_grad_scale, "Gradient multiplier for w and b")
      ->capture_default_str();
  cmd->add_option("--proj-scale", a.config.projection_grad_scale,
                  "Gradient multiplier for the projection layer")
      ->capture_default_str();
  cmd->add_option("--steps", a.config.steps, "Training steps")->capture_default_str();
  cmd->add_option("--seed", a.config.seed, "Random seed")->capture_default_str();
  cmd->add_option("--p", a.config.te2e_enroll_size, "TE2E enrollment size (0: M-1)")
      ->capture_default_str();
  cmd->add_option("--arch", a.arch, "mean-linear | recurrent")->capture_default_str();
  cmd->add_option("--hidden", a.config.encoder.hidden_dim, "Encoder hidden size")
      ->capture_default_str();
  cmd->add_option("--embed-dim", a.config.encoder.output_dim, "Embedding size")
      ->capture_default_str();
  cmd->add_option("--ckpt-out", a.ckpt_out, "Checkpoint path")->required();
  cmd->add_option("--ckpt-every", a.ckpt_every, "Steps between checkpoints (0: end only)")
      ->capture_default_str();
  cmd->add_option("--log-every", a.log_every, "Steps between metrics lines")
      ->capture_default_str();
  cmd->add_option("--metrics-out", a.metrics_out, "Metrics file (default: stdout)");
  cmd->add_option("--resume", a.resume, "Continue from this checkpoint");
}

int RunTrain(TrainArgs& a) {
  if (a.alphas.empty()) a.alphas.assign(a.manifests.size(), 1.0);
  if (a.alphas.size() != a.manifests.size()) {
    throw UsageError("--alpha given " + std::to_string(a.alphas.size()) + " times for " +
                     std::to_string(a.manifests.size()) + " manifests");
  }
  const auto loss = ParseLossKind(a.loss);
  if (!loss) throw UsageError("unknown --loss '" + a.loss + "'");
  const auto arch = ParseEncoderArch(a.arch);
  if (!arch) throw UsageError("unknown --arch '" + a.arch + "'");
  a.config.loss = *loss;
  a.config.encoder.arch = *arch;
  a.config.encoder.seed = a.config.seed;

  std::vector<DataSource> sources;
  for (std::size_t k = 0; k < a.manifests.size(); ++k) {
    std::vector<std::string> warnings;
    sources.push_back(LoadSource(a.manifests[k], a.alphas[k], &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  }
  a.config.encoder.input_dim = sources.front().FeatureDim();
  ValidateFlags(a.config);

  std::optional<TrainState> resume;
  if (!a.resume.empty()) resume = LoadCheckpoint(a.resume);

  std::ofstream metrics_file;
  TrainOptions options;
  options.checkpoint_path = a.ckpt_out;
  options.checkpoint_every = a.ckpt_every;
  options.log_every = a.log_every;
  if (a.metrics_out.empty()) {
    options.metrics = &std::cout;
  } else {
    metrics_file.open(a.metrics_out, std::ios::trunc);
    if (!metrics_file) Throw(ErrorCode::kIo, a.metrics_out + ": cannot open for writing");
    options.metrics = &metrics_file;
  }
  Train(a.config, sources, options, std::move(resume));
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string ckpt;
  std::string manifest;
  std::string out;
  std::string det_out;
  EvalConfig config;
};

void AddEval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand("eval", "Score verification trials and report the EER");
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint")->required();
  cmd->add_option("--manifest", a.manifest, "Evaluation manifest")->required();
  cmd->add_option("--enroll-per-speaker", a.config.enroll_per_speaker,
                  "Enrollment utterances per speaker")
      ->capture_default_str();
  cmd->add_option("--window", a.config.window.window, "Window length (frames)")
      ->capture_default_str();
  cmd->add_option("--overlap", a.config.window.overlap, "Window overlap fraction")
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Trial results file")->required();
  cmd->add_option("--det-out", a.det_out, "DET points CSV (default: <out>.det.csv)");
  cmd->add_option("--seed", a.config.seed, "Enrollment shuffle seed")->capture_default_str();
}

int RunEval(EvalArgs& a) {
  ValidateFlags(a.config.window);
  if (a.config.enroll_per_speaker < 1) throw UsageError("--enroll-per-speaker must be >= 1");
  const TrainState state = LoadCheckpoint(a.ckpt);
  std::vector<std::string> warnings;
  const DataSource source = LoadSource(a.manifest, 1.0, &warnings);
  if (source.FeatureDim() != state.params.config.input_dim) {
    Throw(ErrorCode::kShapeMismatch, "features have dimension " +
                                         std::to_string(source.FeatureDim()) +
                                         ", checkpoint expects " +
                                         std::to_string(state.params.config.input_dim));
  }
  const EvaluationReport report = EvaluateSource(source, state.params, a.config);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  WriteTrialResults(report, a.out);
  WriteDetCsv(report, a.det_out.empty() ? a.out + ".det.csv" : a.det_out);
  std::cout << FormatEERSummary(report.eer) << '\n';
  return 0;
}

// ---- tuple-count ----

struct TupleCountArgs {
  int n = 0;
  int m = 0;
  int p = 0;
  bool enumerate = false;
};

void AddTupleCount(CLI::App& app, TupleCountArgs& a) {
  auto* cmd = app.add_subcommand("tuple-count", "TE2E tuple count for one evaluation utterance");
  cmd->add_option("--n", a.n, "Speakers")->required();
  cmd->add_option("--m", a.m, "Utterances per speaker")->required();
  cmd->add_option("--p", a.p, "Enrollment utterances per tuple")->required();
  cmd->add_flag("--enumerate", a.enumerate, "Cross-check against brute-force enumeration");
}

int RunTupleCount(const TupleCountArgs& a) {
  TupleCountReport report;
  try {
    report = CountTuples(a.n, a.m, a.p);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw UsageError(e.what());
    throw;
  }
  std::cout << FormatTupleCountLine(report) << '\n';
  if (!a.enumerate) return 0;
  const TupleEnumeration all = EnumerateTuplesBruteforce(a.n, a.m, a.p);
  const std::uint64_t enumerated =
      2 * std::max<std::uint64_t>(all.positives.size(), all.negatives.size());
  const bool match = enumerated == report.total &&
                     all.positives.size() == report.positive_count &&
                     all.negatives.size() == report.negative_count;
  std::cout << "enumerated positives=" << all.positives.size()
            << " negatives=" << all.negatives.size() << " total=" << enumerated
            << " match=" << (match ? "true" : "false") << '\n';
  return match ? 0 : kExitRuntime;
}

// ---- compare-losses ----

struct CompareArgs {
  std::int64_t steps = 4000;
  std::uint64_t seed = 1;
  int num_seeds = 1;
  double sep = 1.0;
  double noise = 0.5;
  double drift = 0.2;
  std::string arch = "mean-linear";
  std::string out;
  LossComparisonConfig config;
};

void AddCompare(CLI::App& app, CompareArgs& a) {
  auto* cmd = app.add_subcommand("compare-losses",
                                 "Train every loss on a synthetic set and compare held-out EER");
  cmd->add_option("--steps", a.steps, "Training steps per loss")->capture_default_str();
  cmd->add_option("--seed", a.seed, "First training seed")->capture_default_str();
  cmd->add_option("--num-seeds", a.num_seeds, "Seeds averaged per loss")->capture_default_str();
  cmd->add_option("--speakers", a.config.train_data.num_speakers, "Training speakers")
      ->capture_default_str();
  cmd->add_option("--utts", a.config.train_data.utts_per_speaker, "Utterances per speaker")
      ->capture_default_str();
  cmd->add_option("--data-seed", a.config.train_data.seed, "Training set seed")
      ->capture_default_str();
  cmd->add_option("--sep", a.sep, "Between-speaker std (training and held-out sets)")
      ->capture_default_str();
  cmd->add_option("--noise", a.noise, "Per-frame noise std")->capture_default_str();
  cmd->add_option("--drift", a.drift, "Per-utterance channel offset std")->capture_default_str();
  cmd->add_option("--arch", a.arch, "mean-linear | recurrent")->capture_default_str();
  cmd->add_option("--out", a.out, "Also write the table to this file");
}

int RunCompare(CompareArgs& a) {
  if (a.num_seeds < 1) throw UsageError("--num-seeds must be >= 1");
  const auto arch = ParseEncoderArch(a.arch);
  if (!arch) throw UsageError("unknown --arch '" + a.arch + "'");
  a.config.train.steps = a.steps;
  a.config.train.encoder.arch = *arch;
  a.config.seeds.clear();
  for (int k = 0; k < a.num_seeds; ++k) a.config.seeds.push_back(a.seed + k);
  for (SynthConfig* c : {&a.config.train_data, &a.config.heldout_data}) {
    c->speaker_separation = a.sep;
    c->within_noise = a.noise;
    c->channel_drift = a.drift;
    ValidateFlags(*c);
  }
  ValidateFlags(a.config.train);
  const auto rows = RunLossComparison(a.config, &std::cerr);
  const std::string table = FormatLossTable(rows);
  std::cout << table;
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::trunc);
    out << table;
    if (!out) Throw(ErrorCode::kIo, a.out + ": write failed");
  }
  return 0;
}

// ---- grad-check ----

void AddGradCheck(CLI::App& app, GradCheckOptions& o, bool& verbose) {
  auto* cmd = app.add_subcommand("grad-check", "Finite-difference check of every gradient");
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--instances", o.instances, "Random instances per loss family")
      ->capture_default_str();
  cmd->add_option("--eps", o.eps, "Central-difference step")->capture_default_str();
  cmd->add_option("--tol", o.tolerance, "Relative-error tolerance")->capture_default_str();
  cmd->add_flag("--verbose", verbose, "Print every instance, not only failures");
}

int RunGradCheck(const GradCheckOptions& o, bool verbose) {
  if (o.instances < 1) throw UsageError("--instances must be >= 1");
  const GradCheckReport report = RunGradientChecks(o);
  double worst = 0.0;
  std::size_t failed = 0;
  for (const GradCheckEntry& e : report.entries) {
    worst = std::max(worst, e.max_relative_error);
    if (!e.passed) ++failed;
    if (verbose || !e.passed) {
      std::printf("%s %s rel_err=%.3e\n", e.passed ? "ok  " : "FAIL", e.name.c_str(),
                  e.max_relative_error);
    }
  }
  std::printf("grad-check: %zu instances, %zu failed, max rel_err=%.3e, tol=%.1e, %.2fs\n",
              report.num_instances(), failed, worst, report.tolerance, report.seconds);
  return report.all_passed() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svkit: end-to-end speaker verification toolkit"};
  app.require_subcommand(1, 1);

  SynthArgs synth;
  TrainArgs train;
  EvalArgs eval;
  TupleCountArgs tuple_count;
  CompareArgs compare;
  GradCheckOptions grad_check;
  bool grad_check_verbose = false;
  AddSynth(app, synth);
  AddTrain(app, train);
  AddEval(app, eval);
  AddTupleCount(app, tuple_count);
  AddCompare(app, compare);
  AddGradCheck(app, grad_check, grad_check_verbose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") return RunSynth(synth);
    if (name == "train") return RunTrain(train);
    if (name == "eval") return RunEval(eval);
    if (name == "tuple-count") return RunTupleCount(tuple_count);
    if (name == "compare-losses") return RunCompare(compare);
    if (name == "grad-check") return RunGradCheck(grad_check, grad_check_verbose);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
