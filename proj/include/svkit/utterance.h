// svkit/utterance.h

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

#ifndef SVKIT_UTTERANCE_H_
#define SVKIT_UTTERANCE_H_

#include <map>
#include <string>
#include <vector>

#include "svkit/common.h"

namespace svkit {

/// A T x D sequence of feature frames (log-mel-filterbank energies or the
/// synthetic stand-in) with its speaker label.
struct Utterance {
  std::string speaker_id;
  Matrix frames;
  std::string source_path;
};

/// One training or evaluation corpus. Speakers are kept sorted by id, which
/// fixes the order every seeded sampler walks them in.
struct DataSource {
  std::string id;
  std::map<std::string, std::vector<Utterance>> speakers;
  double alpha = 1.0;

  std::size_t NumUtterances() const;
  int FeatureDim() const;  // 0 for an empty source
};

}  // namespace svkit

#endif  // SVKIT_UTTERANCE_H_
