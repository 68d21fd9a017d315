// svkit/common.h

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

#ifndef SVKIT_COMMON_H_
#define SVKIT_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace svkit {

/// Dense real vector. All math in the toolkit is done in double precision.
using Vec = std::vector<double>;

/// Random engine used everywhere a seed is accepted.
using Rng = std::mt19937_64;

enum class ErrorCode {
  kInvalidArgument,
  kZeroVector,
  kEmptyList,
  kDegenerateExclusion,
  kShapeMismatch,
  kSingleSpeaker,
  kTooLarge,
  kTooShort,
  kInsufficientSpeakers,
  kInsufficientUtterances,
  kLengthMismatch,
  kNonFiniteGradient,
  kTapeMismatch,
  kBadMagic,
  kBadVersion,
  kTruncatedFile,
  kMalformedLine,
  kMissingFile,
  kUnknownSection,
  kMissingSection,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

/// Exception type thrown by every svkit operation. The code lets callers and
/// tests distinguish failure kinds without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

/// Row-major dense matrix of doubles. Used for frame sequences (T x D),
/// parameter arrays and similarity matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::span<double> Row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
  std::span<const double> Row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::size_t size() const { return data.size(); }
  bool SameShape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
  bool operator==(const Matrix& other) const = default;
};

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);
bool AllFinite(std::span<const double> a);

/// y += alpha * x
void Axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Engine for an independent, reproducible stream identified by
/// (seed, step, stream). Consumers never share engines, so the values drawn
/// for a given step do not depend on when or on which thread they are drawn.
Rng MakeStreamRng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);

}  // namespace svkit

#endif  // SVKIT_COMMON_H_
