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


#include "svkit/embedding.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace svkit {
namespace {

using testing::CentralDiff;
using testing::MaxRelErr;
using testing::RandomVec;

TEST(L2NormalizeTest, Examples) {
  const Vec a = L2Normalize(Vec{3, 4});
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_NEAR(a[1], 0.8, 1e-15);
  EXPECT_EQ(L2Normalize(Vec{1, 0, 0}), (Vec{1, 0, 0}));
  EXPECT_THROW_CODE(L2Normalize(Vec{0, 0}), ErrorCode::kZeroVector);
}

TEST(L2NormalizeTest, BelowThresholdIsZero) {
  EXPECT_THROW_CODE(L2Normalize(Vec{1e-13, 0}), ErrorCode::kZeroVector);
}

TEST(L2NormalizeTest, Idempotent) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec once = L2Normalize(RandomVec(2 + trial % 30, rng, 3.0));
    const Vec twice = L2Normalize(once);
    for (std::size_t k = 0; k < once.size(); ++k) EXPECT_NEAR(once[k], twice[k], 1e-12);
  }
}

TEST(L2NormalizeBackwardTest, Examples) {
  const Vec g = L2NormalizeBackward(Vec{2, 0}, Vec{0, 1});
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  const Vec radial = L2NormalizeBackward(Vec{1, 0}, Vec{1, 0});
  EXPECT_NEAR(radial[0], 0.0, 1e-15);
  EXPECT_NEAR(radial[1], 0.0, 1e-15);
}

// upstream . normalize(x), differentiated numerically.
double Projected(const Vec& x, const Vec& up) {
  const Vec e = L2Normalize(x);
  double s = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) s += e[k] * up[k];
  return s;
}

TEST(L2NormalizeBackwardTest, MatchesFiniteDifferenceOnExample) {
  const Vec raw = {3, 4};
  const Vec up = {1, 1};
  const Vec numeric = CentralDiff([&](const Vec& x) { return Projected(x, up); }, raw);
  EXPECT_LE(MaxRelErr(L2NormalizeBackward(raw, up), numeric), 1e-6);
}

TEST(L2NormalizeBackwardTest, MatchesFiniteDifferenceOnRandomVectors) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dims(2, 64);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dims(rng);
    const Vec raw = RandomVec(d, rng);
    const Vec up = RandomVec(d, rng);
    const Vec numeric = CentralDiff([&](const Vec& x) { return Projected(x, up); }, raw);
    EXPECT_LE(MaxRelErr(L2NormalizeBackward(raw, up), numeric), 1e-5) << "dim " << d;
  }
}

TEST(CentroidTest, Examples) {
  EXPECT_EQ(Centroid(std::vector<Vec>{{1, 0}, {0, 1}}), (Vec{0.5, 0.5}));
  EXPECT_EQ(Centroid(std::vector<Vec>{{0.6, 0.8}}), (Vec{0.6, 0.8}));
  EXPECT_EQ(Centroid(std::vector<Vec>{{1, 0}, {1, 0}, {1, 0}}), (Vec{1, 0}));
  EXPECT_THROW_CODE(Centroid(std::vector<Vec>{}), ErrorCode::kEmptyList);
}

TEST(CentroidTest, NotNormalized) {
  const Vec c = Centroid(std::vector<Vec>{{1, 0}, {0, 1}});
  EXPECT_NEAR(Norm(c), std::sqrt(0.5), 1e-15);
}

TEST(CentroidExcludingTest, Examples) {
  EXPECT_EQ(CentroidExcluding(std::vector<Vec>{{1, 0}, {0, 1}}, 0), (Vec{0, 1}));
  EXPECT_EQ(CentroidExcluding(std::vector<Vec>{{1, 0}, {0, 1}, {1, 0}}, 1), (Vec{1, 0}));
  EXPECT_THROW_CODE(CentroidExcluding(std::vector<Vec>{{0.5, 0.5}}, 0),
                    ErrorCode::kDegenerateExclusion);
}

TEST(CentroidExcludingTest, OutOfRangeIndex) {
  EXPECT_THROW_CODE(CentroidExcluding(std::vector<Vec>{{1, 0}, {0, 1}}, 2),
                    ErrorCode::kInvalidArgument);
}

TEST(CentroidExcludingTest, IdentityWithFullCentroid) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 6;
    std::vector<Vec> embs;
    for (int i = 0; i < m; ++i) embs.push_back(RandomVec(5, rng));
    const Vec full = Centroid(embs);
    for (int i = 0; i < m; ++i) {
      const Vec excl = CentroidExcluding(embs, i);
      for (int k = 0; k < 5; ++k) {
        EXPECT_NEAR(m * full[k] - embs[i][k], (m - 1) * excl[k], 1e-9);
      }
    }
  }
}

TEST(EmbeddingBatchTest, RowIndexConvention) {
  std::vector<Vec> rows;
  for (int r = 0; r < 6; ++r) rows.push_back(Vec{static_cast<double>(r), 1.0});
  const EmbeddingBatch batch(3, 2, rows);
  EXPECT_EQ(batch.num_rows(), 6);
  EXPECT_EQ(EmbeddingBatch::RowIndex(2, 1, 2), 5);
  EXPECT_EQ(batch.at(1, 0)[0], 2.0);
  EXPECT_EQ(batch.speaker(2)[1][0], 5.0);
  EXPECT_EQ(batch.embedding(1, 1).speaker_index, 1);
}

TEST(EmbeddingBatchTest, Validation) {
  EXPECT_THROW_CODE(EmbeddingBatch(1, 2, {{1, 0}, {0, 1}}), ErrorCode::kSingleSpeaker);
  EXPECT_THROW_CODE(EmbeddingBatch(2, 2, {{1, 0}, {0, 1}}), ErrorCode::kShapeMismatch);
  EXPECT_THROW_CODE(EmbeddingBatch(2, 1, {{1, 0}, {0, 1, 0}}), ErrorCode::kShapeMismatch);
  EXPECT_THROW_CODE(EmbeddingBatch(2, 1, {{1, 0}, {std::nan(""), 1}}),
                    ErrorCode::kInvalidArgument);
}

TEST(EmbeddingBatchTest, UnitNormCheck) {
  EXPECT_TRUE(EmbeddingBatch(2, 1, {{1, 0}, {0.6, 0.8}}).IsUnitNorm());
  EXPECT_FALSE(EmbeddingBatch(2, 1, {{1, 0}, {0.6, 0.9}}).IsUnitNorm());
}

}  // namespace
}  // namespace svkit
