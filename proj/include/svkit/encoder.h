// svkit/encoder.h

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

#ifndef SVKIT_ENCODER_H_
#define SVKIT_ENCODER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svkit/common.h"

namespace svkit {

enum class EncoderArch {
  kMeanLinear,  // W2 tanh(W1 mean(x) + b1) + b2
  kRecurrent,   // single tanh RNN layer, last state through a linear projection
};

const char* EncoderArchName(EncoderArch arch);
std::optional<EncoderArch> ParseEncoderArch(const std::string& name);

struct EncoderConfig {
  int input_dim = 40;
  int hidden_dim = 32;
  int output_dim = 16;
  EncoderArch arch = EncoderArch::kMeanLinear;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless every size is >= 1.
  void Validate() const;
};

/// Named parameter (or gradient) arrays. Vectors are stored as n x 1
/// matrices. Iteration order is by name, so every traversal is
/// deterministic.
struct ParamSet {
  std::map<std::string, Matrix> arrays;

  Matrix& operator[](const std::string& name) { return arrays[name]; }
  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const { return arrays.count(name) > 0; }

  ParamSet ZerosLike() const;
  /// this += alpha * other; both sets must have identical names and shapes.
  void AddScaled(double alpha, const ParamSet& other);
  void Scale(double factor);
  double SquaredNorm() const;
  bool AllFinite() const;
  std::size_t NumElements() const;
  bool operator==(const ParamSet&) const = default;
};

/// Reserved names for the speaker-classification head used by the
/// softmax-over-speakers baseline. Not touched by Forward/Backward.
inline constexpr const char* kHeadWeight = "head.W";
inline constexpr const char* kHeadBias = "head.b";

struct EncoderParams {
  EncoderConfig config;
  ParamSet arrays;

  bool operator==(const EncoderParams& other) const {
    return arrays == other.arrays;
  }
};

/// Names of the arrays forming the final linear projection; the trainer
/// applies the projection gradient scale to these.
std::vector<std::string> ProjectionArrayNames(EncoderArch arch);

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
EncoderParams InitParams(const EncoderConfig& config);

/// Adds a num_classes x E classification head (uniform init, zero bias).
void AddClassifierHead(EncoderParams& params, int num_classes, std::uint64_t seed);

/// Intermediates cached by Forward for Backward.
struct EncoderTape {
  EncoderArch arch = EncoderArch::kMeanLinear;
  int input_dim = 0;
  int hidden_dim = 0;
  int output_dim = 0;
  Matrix segment;               // T x D input (recurrent only)
  std::size_t num_frames = 0;
  Vec mean_frame;               // mean-linear only
  std::vector<Vec> states;      // hidden states; recurrent keeps h_0 .. h_T
};

/// Maps a T x D segment to the raw (unnormalized) E-dim network output.
/// `tape` may be null when no backward pass follows.
Vec Forward(const Matrix& segment, const EncoderParams& params, EncoderTape* tape);

/// Gradients of upstream . raw w.r.t. every encoder array (head arrays are
/// not included). When `input_grad` is non-null it receives dL/dsegment.
ParamSet Backward(const EncoderTape& tape, const EncoderParams& params,
                  std::span<const double> upstream, Matrix* input_grad = nullptr);

}  // namespace svkit

#endif  // SVKIT_ENCODER_H_
