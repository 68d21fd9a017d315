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

#include "svkit/common.h"

#include <cmath>

namespace svkit {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kDegenerateExclusion: return "DegenerateExclusion";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSingleSpeaker: return "SingleSpeaker";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kInsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorCode::kInsufficientUtterances: return "InsufficientUtterances";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kTapeMismatch: return "TapeMismatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kUnknownSection: return "UnknownSection";
    case ErrorCode::kMissingSection: return "MissingSection";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Throw(ErrorCode::kShapeMismatch, "dot product of vectors with sizes " +
                                         std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

bool AllFinite(std::span<const double> a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    Throw(ErrorCode::kShapeMismatch, "axpy size mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Rng MakeStreamRng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace svkit
