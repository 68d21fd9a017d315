// svkit/train_state.h

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

#ifndef SVKIT_TRAIN_STATE_H_
#define SVKIT_TRAIN_STATE_H_

#include <cstdint>
#include <deque>

#include "svkit/encoder.h"
#include "svkit/similarity.h"

namespace svkit {

/// Everything a training run needs to continue from a step boundary.
///
/// Every random draw made for step s comes from MakeStreamRng(seed, s, ...),
/// so (seed, step) is the complete random state.
struct TrainState {
  std::int64_t step = 0;
  EncoderParams params;
  SimilarityScale scale;
  std::uint64_t seed = 0;
  std::deque<double> loss_history;  // most recent losses, bounded

  static constexpr std::size_t kLossHistorySize = 64;
  void RecordLoss(double loss);
};

}  // namespace svkit

#endif  // SVKIT_TRAIN_STATE_H_
