// svkit/gradcheck.h

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

// Finite-difference verification of every analytic gradient. The numeric
// side only ever calls forward functions (loss values), never a backward.

#ifndef SVKIT_GRADCHECK_H_
#define SVKIT_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svkit/common.h"

namespace svkit {

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, 1e-8). The checks apply
/// it to an instance's whole gradient (every input array plus w and b), so an
/// identically-zero component such as d(softmax loss)/db is judged against
/// the instance's gradient scale rather than against round-off.
double RelativeError(std::span<const double> analytic, std::span<const double> numeric);

/// Central differences of f at x, one coordinate at a time.
Vec NumericGradient(const std::function<double(const Vec&)>& f, const Vec& x, double eps);

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double seconds = 0.0;
  bool all_passed() const;
  std::size_t num_instances() const { return entries.size(); }
};

struct GradCheckOptions {
  std::uint64_t seed = 7;
  int instances = 20;       // random instances per loss family
  double eps = 1e-5;
  double tolerance = 1e-4;
};

/// Checks, on random small instances:
///  - GE2E softmax and contrast: gradients w.r.t. embeddings, w and b
///    (N in {2,3,4}, M in {2,3}, dim in {4,8});
///  - TE2E, both objectives: eval/enrollment embeddings, w and b;
///  - full chains through normalization and both encoder architectures
///    for every trainer loss (N=2, M=2, T=5, D=3, H=4, E=3).
GradCheckReport RunGradientChecks(const GradCheckOptions& options);

}  // namespace svkit

#endif  // SVKIT_GRADCHECK_H_
