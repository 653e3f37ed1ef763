// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "bss/clustering.h"
#include "bss/rng.h"

using namespace bss;

TEST_CASE("k equals one gives the mean") {
  Eigen::MatrixXd points(4, 2);
  points << 0, 0, 2, 0, 0, 2, 2, 2;
  KmeansResult res = Kmeans(points, 1, 3, 0);
  for (int label : res.labels) CHECK(label == 0);
  CHECK(res.centroids(0, 0) == doctest::Approx(1.0));
  CHECK(res.centroids(0, 1) == doctest::Approx(1.0));
  CHECK(res.inertia == doctest::Approx(8.0));
}

TEST_CASE("well separated clouds partition perfectly") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 1);
    const int per_cloud = 40;
    Eigen::MatrixXd points(2 * per_cloud, 3);
    for (int i = 0; i < per_cloud; ++i)
      for (int d = 0; d < 3; ++d) {
        points(i, d) = 0.1 * rng.Normal();
        points(per_cloud + i, d) = 10.0 + 0.1 * rng.Normal();
      }
    KmeansResult res = Kmeans(points, 2, 5, seed);
    for (int i = 1; i < per_cloud; ++i) {
      CHECK(res.labels[i] == res.labels[0]);
      CHECK(res.labels[per_cloud + i] == res.labels[per_cloud]);
    }
    CHECK(res.labels[0] != res.labels[per_cloud]);
  }
}

TEST_CASE("tiny 1-d instance matches exhaustive oracle") {
  Eigen::MatrixXd points(4, 1);
  points << 0.0, 0.1, 10.0, 10.1;
  KmeansResult res = Kmeans(points, 2, 10, 7);

  // Exhaustive oracle over all 2^4 assignments with optimal centroids.
  double best = 1e300;
  for (int mask = 0; mask < 16; ++mask) {
    double sum[2] = {0, 0};
    int count[2] = {0, 0};
    for (int i = 0; i < 4; ++i) {
      int c = (mask >> i) & 1;
      sum[c] += points(i, 0);
      count[c]++;
    }
    if (count[0] == 0 || count[1] == 0) continue;
    double inertia = 0.0;
    for (int i = 0; i < 4; ++i) {
      int c = (mask >> i) & 1;
      double d = points(i, 0) - sum[c] / count[c];
      inertia += d * d;
    }
    best = std::min(best, inertia);
  }
  CHECK(res.inertia == doctest::Approx(best).epsilon(1e-12));
  CHECK(res.inertia == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(res.labels[0] == res.labels[1]);
  CHECK(res.labels[2] == res.labels[3]);
  CHECK(res.labels[0] != res.labels[2]);
}

TEST_CASE("kmeans is deterministic under a fixed seed") {
  Rng rng(9);
  Eigen::MatrixXd points(60, 4);
  for (long i = 0; i < points.size(); ++i) points(i / 4, i % 4) = rng.Normal();
  KmeansResult a = Kmeans(points, 3, 10, 42);
  KmeansResult b = Kmeans(points, 3, 10, 42);
  CHECK(a.labels == b.labels);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("identical points do not break clustering") {
  Eigen::MatrixXd points = Eigen::MatrixXd::Ones(10, 2);
  KmeansResult res = Kmeans(points, 3, 2, 1);
  CHECK(res.inertia == doctest::Approx(0.0));
}

TEST_CASE("fewer points than clusters is an error") {
  Eigen::MatrixXd points(2, 2);
  points.setZero();
  CHECK_THROWS_AS(Kmeans(points, 3, 1, 0), Error);
}

TEST_CASE("labels to masks layout and validity") {
  std::vector<int> labels = {0, 1, 2, 2, 1, 0};  // T=2, F=3, t-major
  MaskSet masks = LabelsToMasks(labels, 2, 3, 3);
  CHECK(masks.at(0, 0, 0) == 1.0);
  CHECK(masks.at(1, 0, 1) == 1.0);
  CHECK(masks.at(2, 0, 2) == 1.0);
  CHECK(masks.at(2, 1, 0) == 1.0);
  CHECK(masks.at(1, 1, 1) == 1.0);
  CHECK(masks.at(0, 1, 2) == 1.0);
  ValidateSimplex(masks);

  CHECK_THROWS_AS(LabelsToMasks({0, 5}, 1, 2, 3), Error);
  CHECK_THROWS_AS(LabelsToMasks({0, 1, 2}, 2, 3, 3), Error);
}
