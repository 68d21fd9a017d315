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
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace svkit {
namespace {

using testing::CentralDiff;
using testing::MaxRelErr;

EncoderConfig Config(EncoderArch arch, int d, int h, int e, std::uint64_t seed = 3) {
  EncoderConfig c;
  c.arch = arch;
  c.input_dim = d;
  c.hidden_dim = h;
  c.output_dim = e;
  c.seed = seed;
  return c;
}

Matrix RandomSegment(int t, int d, std::mt19937_64& rng) {
  Matrix m(t, d);
  std::normal_distribution<double> normal(0, 1);
  for (double& x : m.data) x = normal(rng);
  return m;
}

TEST(EncoderInitTest, DeterministicAndBounded) {
  for (EncoderArch arch : {EncoderArch::kMeanLinear, EncoderArch::kRecurrent}) {
    const EncoderParams a = InitParams(Config(arch, 5, 6, 4));
    const EncoderParams b = InitParams(Config(arch, 5, 6, 4));
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == InitParams(Config(arch, 5, 6, 4, 4)));
    for (const auto& [name, m] : a.arrays.arrays) {
      const bool bias = name[0] == 'b';
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
      for (double x : m.data) {
        if (bias) {
          EXPECT_EQ(x, 0.0) << name;
        } else {
          EXPECT_LE(std::abs(x), bound) << name;
        }
      }
    }
  }
}

TEST(EncoderInitTest, RejectsZeroSizes) {
  EXPECT_THROW_CODE(InitParams(Config(EncoderArch::kMeanLinear, 5, 0, 4)),
                    ErrorCode::kInvalidArgument);
  EXPECT_THROW_CODE(Config(EncoderArch::kRecurrent, 0, 3, 4).Validate(),
                    ErrorCode::kInvalidArgument);
}

TEST(EncoderInitTest, ArchNames) {
  EXPECT_EQ(ParseEncoderArch("mean-linear"), EncoderArch::kMeanLinear);
  EXPECT_EQ(ParseEncoderArch("recurrent"), EncoderArch::kRecurrent);
  EXPECT_FALSE(ParseEncoderArch("lstm").has_value());
  EXPECT_STREQ(EncoderArchName(EncoderArch::kRecurrent), "recurrent");
  EXPECT_EQ(ProjectionArrayNames(EncoderArch::kMeanLinear), (std::vector<std::string>{"W2", "b2"}));
}

TEST(EncoderForwardTest, ConstantNetwork) {
  EncoderParams p = InitParams(Config(EncoderArch::kMeanLinear, 3, 4, 2));
  for (auto& [name, m] : p.arrays.arrays) std::fill(m.data.begin(), m.data.end(), 0.0);
  p.arrays["b2"].data = {1.5, -2.0};
  std::mt19937_64 rng(1);
  EXPECT_EQ(Forward(RandomSegment(7, 3, rng), p, nullptr), (Vec{1.5, -2.0}));
}

TEST(EncoderForwardTest, MeanLinearIgnoresFrameDuplication) {
  const EncoderParams p = InitParams(Config(EncoderArch::kMeanLinear, 4, 5, 3));
  std::mt19937_64 rng(2);
  const Matrix seg = RandomSegment(6, 4, rng);
  Matrix doubled(12, 4);
  for (int t = 0; t < 6; ++t) {
    for (int d = 0; d < 4; ++d) doubled(2 * t, d) = doubled(2 * t + 1, d) = seg(t, d);
  }
  const Vec a = Forward(seg, p, nullptr);
  const Vec b = Forward(doubled, p, nullptr);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
}

// Straight-line re-evaluation, written without the library's helpers.
Vec ReferenceMeanLinear(const Matrix& seg, const ParamSet& p) {
  const Matrix& w1 = p.at("W1");
  const Matrix& b1 = p.at("b1");
  const Matrix& w2 = p.at("W2");
  const Matrix& b2 = p.at("b2");
  Vec mean(seg.cols, 0.0);
  for (std::size_t t = 0; t < seg.rows; ++t) {
    for (std::size_t d = 0; d < seg.cols; ++d) mean[d] += seg(t, d) / seg.rows;
  }
  Vec h(w1.rows);
  for (std::size_t r = 0; r < w1.rows; ++r) {
    double s = b1.data[r];
    for (std::size_t d = 0; d < w1.cols; ++d) s += w1(r, d) * mean[d];
    h[r] = std::tanh(s);
  }
  Vec out(w2.rows);
  for (std::size_t r = 0; r < w2.rows; ++r) {
    double s = b2.data[r];
    for (std::size_t c = 0; c < w2.cols; ++c) s += w2(r, c) * h[c];
    out[r] = s;
  }
  return out;
}

Vec ReferenceRecurrent(const Matrix& seg, const ParamSet& p) {
  const Matrix& wx = p.at("Wx");
  const Matrix& wh = p.at("Wh");
  const Matrix& bh = p.at("bh");
  const Matrix& wp = p.at("Wp");
  const Matrix& bp = p.at("bp");
  Vec h(wx.rows, 0.0);
  for (std::size_t t = 0; t < seg.rows; ++t) {
    Vec next(h.size());
    for (std::size_t r = 0; r < h.size(); ++r) {
      double s = bh.data[r];
      for (std::size_t d = 0; d < seg.cols; ++d) s += wx(r, d) * seg(t, d);
      for (std::size_t c = 0; c < h.size(); ++c) s += wh(r, c) * h[c];
      next[r] = std::tanh(s);
    }
    h = next;
  }
  Vec out(wp.rows);
  for (std::size_t r = 0; r < wp.rows; ++r) {
    double s = bp.data[r];
    for (std::size_t c = 0; c < h.size(); ++c) s += wp(r, c) * h[c];
    out[r] = s;
  }
  return out;
}

TEST(EncoderForwardTest, MatchesReference) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    EncoderParams ml = InitParams(Config(EncoderArch::kMeanLinear, 5, 6, 4, trial));
    EncoderParams rn = InitParams(Config(EncoderArch::kRecurrent, 5, 6, 4, trial));
    // Non-zero biases so they are exercised too.
    for (auto* p : {&ml, &rn}) {
      for (auto& [name, m] : p->arrays.arrays) {
        if (name[0] == 'b') {
          for (double& x : m.data) x = std::normal_distribution<double>(0, 0.3)(rng);
        }
      }
    }
    const Matrix seg = RandomSegment(7, 5, rng);
    const Vec a = Forward(seg, ml, nullptr);
    const Vec b = ReferenceMeanLinear(seg, ml.arrays);
    const Vec c = Forward(seg, rn, nullptr);
    const Vec d = ReferenceRecurrent(seg, rn.arrays);
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(a[k], b[k], 1e-13);
      EXPECT_NEAR(c[k], d[k], 1e-13);
    }
  }
}

TEST(EncoderForwardTest, RecurrentSingleFrameByHand) {
  EncoderParams p = InitParams(Config(EncoderArch::kRecurrent, 2, 2, 1));
  p.arrays["Wx"].data = {1.0, 0.0, 0.0, 2.0};
  p.arrays["Wh"].data = {5.0, 5.0, 5.0, 5.0};  // irrelevant: h_0 = 0
  p.arrays["bh"].data = {0.5, -0.5};
  p.arrays["Wp"].data = {1.0, -1.0};
  p.arrays["bp"].data = {0.25};
  Matrix seg(1, 2);
  seg.data = {0.3, 0.1};
  const double expected = std::tanh(0.3 + 0.5) - std::tanh(0.2 - 0.5) + 0.25;
  EXPECT_NEAR(Forward(seg, p, nullptr)[0], expected, 1e-15);
}

TEST(EncoderForwardTest, ShapeMismatch) {
  const EncoderParams p = InitParams(Config(EncoderArch::kMeanLinear, 5, 6, 4));
  EXPECT_THROW_CODE(Forward(Matrix(3, 4), p, nullptr), ErrorCode::kShapeMismatch);
}

TEST(EncoderBackwardTest, ZeroUpstream) {
  const EncoderParams p = InitParams(Config(EncoderArch::kRecurrent, 3, 4, 2));
  std::mt19937_64 rng(4);
  EncoderTape tape;
  Forward(RandomSegment(5, 3, rng), p, &tape);
  const ParamSet g = Backward(tape, p, Vec{0.0, 0.0});
  EXPECT_EQ(g.SquaredNorm(), 0.0);
  EXPECT_EQ(g.arrays.size(), p.arrays.arrays.size());
}

TEST(EncoderBackwardTest, TapeMismatch) {
  const EncoderParams ml = InitParams(Config(EncoderArch::kMeanLinear, 3, 4, 2));
  const EncoderParams rn = InitParams(Config(EncoderArch::kRecurrent, 3, 4, 2));
  std::mt19937_64 rng(5);
  EncoderTape tape;
  Forward(RandomSegment(5, 3, rng), ml, &tape);
  EXPECT_THROW_CODE(Backward(tape, rn, Vec{1, 1}), ErrorCode::kTapeMismatch);
}

// Finite differences of upstream . Forward(segment) w.r.t. every array.
void CheckParamGradients(EncoderArch arch, int t, int d, int h, int e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncoderParams p = InitParams(Config(arch, d, h, e, seed));
  for (auto& [name, m] : p.arrays.arrays) {
    for (double& x : m.data) x += std::normal_distribution<double>(0, 0.2)(rng);
  }
  const Matrix seg = RandomSegment(t, d, rng);
  Vec up(e);
  for (double& x : up) x = std::normal_distribution<double>(0, 1)(rng);
  EncoderTape tape;
  Forward(seg, p, &tape);
  Matrix input_grad;
  const ParamSet g = Backward(tape, p, up, &input_grad);
  auto contracted = [&](const EncoderParams& q, const Matrix& s) {
    const Vec raw = Forward(s, q, nullptr);
    double v = 0.0;
    for (int k = 0; k < e; ++k) v += raw[k] * up[k];
    return v;
  };
  for (const auto& [name, m] : p.arrays.arrays) {
    const Vec num = CentralDiff(
        [&](const Vec& x) {
          EncoderParams q = p;
          q.arrays[name].data = x;
          return contracted(q, seg);
        },
        m.data);
    EXPECT_LE(MaxRelErr(g.at(name).data, num), 1e-4) << EncoderArchName(arch) << " " << name;
  }
  const Vec num_in = CentralDiff(
      [&](const Vec& x) {
        Matrix s = seg;
        s.data = x;
        return contracted(p, s);
      },
      seg.data);
  EXPECT_LE(MaxRelErr(input_grad.data, num_in), 1e-4);
}

TEST(EncoderBackwardTest, MeanLinearMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CheckParamGradients(EncoderArch::kMeanLinear, 7, 5, 6, 4, seed);
  }
}

TEST(EncoderBackwardTest, RecurrentMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CheckParamGradients(EncoderArch::kRecurrent, 3, 5, 6, 4, seed);
    CheckParamGradients(EncoderArch::kRecurrent, 8, 3, 4, 3, seed);
  }
}

TEST(ParamSetTest, Arithmetic) {
  ParamSet a;
  a["x"] = Matrix(2, 1, 1.0);
  a["y"] = Matrix(1, 1, 2.0);
  ParamSet b = a.ZerosLike();
  EXPECT_EQ(b.SquaredNorm(), 0.0);
  b.AddScaled(3.0, a);
  EXPECT_EQ(b.at("y").data[0], 6.0);
  b.Scale(0.5);
  EXPECT_EQ(b.at("x").data[0], 1.5);
  EXPECT_DOUBLE_EQ(a.SquaredNorm(), 6.0);
  EXPECT_EQ(a.NumElements(), 3u);
  EXPECT_TRUE(a.AllFinite());
  EXPECT_THROW_CODE(a.at("z"), ErrorCode::kInvalidArgument);
}

TEST(ClassifierHeadTest, Shapes) {
  EncoderParams p = InitParams(Config(EncoderArch::kMeanLinear, 5, 6, 4));
  AddClassifierHead(p, 7, 9);
  EXPECT_EQ(p.arrays.at(kHeadWeight).rows, 7u);
  EXPECT_EQ(p.arrays.at(kHeadWeight).cols, 4u);
  EXPECT_EQ(p.arrays.at(kHeadBias).rows, 7u);
  // Forward ignores the head.
  std::mt19937_64 rng(1);
  const Matrix seg = RandomSegment(4, 5, rng);
  EXPECT_EQ(Forward(seg, p, nullptr), Forward(seg, InitParams(Config(EncoderArch::kMeanLinear, 5, 6, 4)), nullptr));
}

}  // namespace
}  // namespace svkit
