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

#include "svkit/encoder.h"

#include <cmath>

namespace svkit {

const char* EncoderArchName(EncoderArch arch) {
  return arch == EncoderArch::kMeanLinear ? "mean-linear" : "recurrent";
}

std::optional<EncoderArch> ParseEncoderArch(const std::string& name) {
  if (name == "mean-linear") return EncoderArch::kMeanLinear;
  if (name == "recurrent") return EncoderArch::kRecurrent;
  return std::nullopt;
}

void EncoderConfig::Validate() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    Throw(ErrorCode::kInvalidArgument,
          "encoder sizes must be >= 1 (D=" + std::to_string(input_dim) +
              ", H=" + std::to_string(hidden_dim) + ", E=" + std::to_string(output_dim) + ")");
  }
}

const Matrix& ParamSet::at(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) Throw(ErrorCode::kInvalidArgument, "no parameter array " + name);
  return it->second;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& [name, m] : arrays) out.arrays.emplace(name, Matrix(m.rows, m.cols));
  return out;
}

void ParamSet::AddScaled(double alpha, const ParamSet& other) {
  if (arrays.size() != other.arrays.size()) {
    Throw(ErrorCode::kShapeMismatch, "parameter sets hold different arrays");
  }
  for (auto& [name, m] : arrays) {
    const Matrix& o = other.at(name);
    if (!m.SameShape(o)) Throw(ErrorCode::kShapeMismatch, "shape mismatch in " + name);
    Axpy(alpha, o.data, m.data);
  }
}

void ParamSet::Scale(double factor) {
  for (auto& [name, m] : arrays) {
    for (double& x : m.data) x *= factor;
  }
}

double ParamSet::SquaredNorm() const {
  double sum = 0.0;
  for (const auto& [name, m] : arrays) sum += Dot(m.data, m.data);
  return sum;
}

bool ParamSet::AllFinite() const {
  for (const auto& [name, m] : arrays) {
    if (!svkit::AllFinite(m.data)) return false;
  }
  return true;
}

std::size_t ParamSet::NumElements() const {
  std::size_t n = 0;
  for (const auto& [name, m] : arrays) n += m.size();
  return n;
}

std::vector<std::string> ProjectionArrayNames(EncoderArch arch) {
  if (arch == EncoderArch::kMeanLinear) return {"W2", "b2"};
  return {"Wp", "bp"};
}

namespace {

Matrix UniformWeights(std::size_t rows, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(rows, fan_in);
  for (double& x : w.data) x = dist(rng);
  return w;
}

// y = W x + b
Vec Affine(const Matrix& w, const Matrix& b, std::span<const double> x) {
  Vec y(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) y[r] = Dot(w.Row(r), x) + b.data[r];
  return y;
}

// out += W^T g
void AddTransposeTimes(const Matrix& w, std::span<const double> g, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows; ++r) Axpy(g[r], w.Row(r), out);
}

// G += g x^T
void AddOuter(std::span<const double> g, std::span<const double> x, Matrix& grad) {
  for (std::size_t r = 0; r < grad.rows; ++r) Axpy(g[r], x, grad.Row(r));
}

void CheckSegment(const Matrix& segment, const EncoderConfig& config) {
  if (segment.rows < 1) Throw(ErrorCode::kShapeMismatch, "segment has no frames");
  if (segment.cols != static_cast<std::size_t>(config.input_dim)) {
    Throw(ErrorCode::kShapeMismatch,
          "segment has " + std::to_string(segment.cols) + " features per frame, encoder expects " +
              std::to_string(config.input_dim));
  }
}

}  // namespace

EncoderParams InitParams(const EncoderConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  const std::size_t d = config.input_dim;
  const std::size_t h = config.hidden_dim;
  const std::size_t e = config.output_dim;
  EncoderParams params;
  params.config = config;
  ParamSet& p = params.arrays;
  if (config.arch == EncoderArch::kMeanLinear) {
    p["W1"] = UniformWeights(h, d, rng);
    p["b1"] = Matrix(h, 1);
    p["W2"] = UniformWeights(e, h, rng);
    p["b2"] = Matrix(e, 1);
  } else {
    p["Wx"] = UniformWeights(h, d, rng);
    p["Wh"] = UniformWeights(h, h, rng);
    p["bh"] = Matrix(h, 1);
    p["Wp"] = UniformWeights(e, h, rng);
    p["bp"] = Matrix(e, 1);
  }
  return params;
}

void AddClassifierHead(EncoderParams& params, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) Throw(ErrorCode::kInvalidArgument, "classifier head needs >= 2 classes");
  Rng rng(seed);
  params.arrays[kHeadWeight] =
      UniformWeights(num_classes, params.config.output_dim, rng);
  params.arrays[kHeadBias] = Matrix(num_classes, 1);
}

Vec Forward(const Matrix& segment, const EncoderParams& params, EncoderTape* tape) {
  const EncoderConfig& config = params.config;
  CheckSegment(segment, config);
  const ParamSet& p = params.arrays;
  const std::size_t frames = segment.rows;

  if (config.arch == EncoderArch::kMeanLinear) {
    Vec mean(segment.cols, 0.0);
    for (std::size_t t = 0; t < frames; ++t) Axpy(1.0, segment.Row(t), mean);
    for (double& x : mean) x /= static_cast<double>(frames);
    Vec hidden = Affine(p.at("W1"), p.at("b1"), mean);
    for (double& x : hidden) x = std::tanh(x);
    Vec raw = Affine(p.at("W2"), p.at("b2"), hidden);
    if (tape != nullptr) {
      *tape = EncoderTape{};
      tape->arch = config.arch;
      tape->input_dim = config.input_dim;
      tape->hidden_dim = config.hidden_dim;
      tape->output_dim = config.output_dim;
      tape->num_frames = frames;
      tape->mean_frame = std::move(mean);
      tape->states = {std::move(hidden)};
    }
    return raw;
  }

  const Matrix& wx = p.at("Wx");
  const Matrix& wh = p.at("Wh");
  const Matrix& bh = p.at("bh");
  std::vector<Vec> states;
  states.reserve(frames + 1);
  states.emplace_back(config.hidden_dim, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    Vec pre = Affine(wx, bh, segment.Row(t));
    const Vec& prev = states.back();
    for (std::size_t r = 0; r < wh.rows; ++r) pre[r] += Dot(wh.Row(r), prev);
    for (double& x : pre) x = std::tanh(x);
    states.push_back(std::move(pre));
  }
  Vec raw = Affine(p.at("Wp"), p.at("bp"), states.back());
  if (tape != nullptr) {
    *tape = EncoderTape{};
    tape->arch = config.arch;
    tape->num_frames = frames;
    tape->input_dim = config.input_dim;
    tape->hidden_dim = config.hidden_dim;
    tape->output_dim = config.output_dim;
    tape->segment = segment;
    tape->states = std::move(states);
  }
  return raw;
}

ParamSet Backward(const EncoderTape& tape, const EncoderParams& params,
                  std::span<const double> upstream, Matrix* input_grad) {
  const EncoderConfig& config = params.config;
  if (tape.arch != config.arch || tape.states.empty() ||
      tape.input_dim != config.input_dim || tape.hidden_dim != config.hidden_dim ||
      tape.output_dim != config.output_dim) {
    Throw(ErrorCode::kTapeMismatch, "tape was not produced by a forward pass of these parameters");
  }
  if (upstream.size() != static_cast<std::size_t>(config.output_dim)) {
    Throw(ErrorCode::kShapeMismatch, "upstream gradient has the wrong size");
  }
  const ParamSet& p = params.arrays;
  ParamSet grads;
  const std::size_t frames = tape.num_frames;

  if (config.arch == EncoderArch::kMeanLinear) {
    const Matrix& w1 = p.at("W1");
    const Matrix& w2 = p.at("W2");
    const Vec& hidden = tape.states.front();
    Matrix& g_w2 = grads["W2"] = Matrix(w2.rows, w2.cols);
    grads["b2"] = Matrix(w2.rows, 1);
    grads["b2"].data.assign(upstream.begin(), upstream.end());
    AddOuter(upstream, hidden, g_w2);

    Vec d_pre(hidden.size(), 0.0);
    AddTransposeTimes(w2, upstream, d_pre);
    for (std::size_t r = 0; r < d_pre.size(); ++r) d_pre[r] *= 1.0 - hidden[r] * hidden[r];

    Matrix& g_w1 = grads["W1"] = Matrix(w1.rows, w1.cols);
    grads["b1"] = Matrix(w1.rows, 1);
    grads["b1"].data = d_pre;
    AddOuter(d_pre, tape.mean_frame, g_w1);

    if (input_grad != nullptr) {
      Vec d_mean(w1.cols, 0.0);
      AddTransposeTimes(w1, d_pre, d_mean);
      *input_grad = Matrix(frames, w1.cols);
      for (std::size_t t = 0; t < frames; ++t) {
        Axpy(1.0 / static_cast<double>(frames), d_mean, input_grad->Row(t));
      }
    }
    return grads;
  }

  // Backpropagation through time.
  const Matrix& wx = p.at("Wx");
  const Matrix& wh = p.at("Wh");
  const Matrix& wp = p.at("Wp");
  Matrix& g_wx = grads["Wx"] = Matrix(wx.rows, wx.cols);
  Matrix& g_wh = grads["Wh"] = Matrix(wh.rows, wh.cols);
  Matrix& g_bh = grads["bh"] = Matrix(wh.rows, 1);
  Matrix& g_wp = grads["Wp"] = Matrix(wp.rows, wp.cols);
  grads["bp"] = Matrix(wp.rows, 1);
  grads["bp"].data.assign(upstream.begin(), upstream.end());
  AddOuter(upstream, tape.states.back(), g_wp);
  if (input_grad != nullptr) *input_grad = Matrix(frames, wx.cols);

  Vec d_h(wh.rows, 0.0);
  AddTransposeTimes(wp, upstream, d_h);
  for (std::size_t t = frames; t >= 1; --t) {
    const Vec& h = tape.states[t];
    Vec d_pre(h.size());
    for (std::size_t r = 0; r < h.size(); ++r) d_pre[r] = d_h[r] * (1.0 - h[r] * h[r]);
    AddOuter(d_pre, tape.segment.Row(t - 1), g_wx);
    AddOuter(d_pre, tape.states[t - 1], g_wh);
    Axpy(1.0, d_pre, g_bh.data);
    if (input_grad != nullptr) AddTransposeTimes(wx, d_pre, input_grad->Row(t - 1));
    std::fill(d_h.begin(), d_h.end(), 0.0);
    AddTransposeTimes(wh, d_pre, d_h);
  }
  return grads;
}

}  // namespace svkit
