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

// Helpers shared by the unit tests. The finite-difference routine here is
// deliberately separate from the library's own grad-check code.

#ifndef SVKIT_TESTS_UNIT_TEST_UTIL_H_
#define SVKIT_TESTS_UNIT_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "svkit/common.h"

namespace svkit::testing {

#define EXPECT_THROW_CODE(stmt, expected)                    \
  do {                                                       \
    try {                                                    \
      stmt;                                                  \
      ADD_FAILURE() << "no exception from: " #stmt;          \
    } catch (const ::svkit::Error& e) {                      \
      EXPECT_EQ(e.code(), expected) << e.what();             \
    }                                                        \
  } while (0)

inline std::vector<double> CentralDiff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double hi = f(x);
    x[i] = keep - eps;
    const double lo = f(x);
    x[i] = keep;
    g[i] = (hi - lo) / (2 * eps);
  }
  return g;
}

inline double MaxRelErr(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

inline std::vector<double> RandomVec(std::size_t dim, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

inline std::vector<double> RandomUnitVec(std::size_t dim, std::mt19937_64& rng) {
  std::vector<double> v = RandomVec(dim, rng);
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline std::vector<double> Flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

inline std::vector<std::vector<double>> Unflatten(const std::vector<double>& flat,
                                                  std::size_t dim) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < flat.size(); i += dim) {
    out.emplace_back(flat.begin() + i, flat.begin() + i + dim);
  }
  return out;
}

}  // namespace svkit::testing

#endif  // SVKIT_TESTS_UNIT_TEST_UTIL_H_
