// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/clustering.h"

#include <limits>

#include "bss/rng.h"

namespace bss {

namespace {

constexpr int kMaxLloydIterations = 100;

struct SingleRun {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

SingleRun RunOnce(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());

  // k-means++ seeding.
  Eigen::MatrixXd centroids(k, dim);
  std::vector<double> dist2(n, std::numeric_limits<double>::max());
  int first = static_cast<int>(rng.UniformInt(n));
  centroids.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = (points.row(i) - centroids.row(c - 1)).squaredNorm();
      dist2[i] = std::min(dist2[i], d);
      total += dist2[i];
    }
    int chosen = n - 1;
    if (total > 0.0) {
      double target = rng.Uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<int>(rng.UniformInt(n));
    }
    centroids.row(c) = points.row(chosen);
  }

  SingleRun run;
  run.labels.assign(n, 0);
  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = iter == 0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (run.labels[i] != best) changed = true;
      run.labels[i] = best;
    }
    if (!changed && iter > 0) break;

    centroids.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      centroids.row(run.labels[i]) += points.row(i);
      counts[run.labels[i]]++;
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) /= counts[c];
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      // Empty cluster: reseed at the point farthest from its centroid.
      int farthest = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        double d = (points.row(i) - centroids.row(run.labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      centroids.row(c) = points.row(farthest);
    }
  }

  run.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    run.inertia += (points.row(i) - centroids.row(run.labels[i])).squaredNorm();
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

KmeansResult Kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  Require(k >= 1, "Kmeans: k must be positive");
  Require(n >= k, "Kmeans: fewer points than clusters");
  Require(points.allFinite(), "Kmeans: non-finite points");
  Require(restarts >= 1, "Kmeans: need at least one restart");

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::max();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(SplitSeed(seed, r));
    SingleRun run = RunOnce(points, k, rng);
    if (run.inertia < best.inertia) {
      best.inertia = run.inertia;
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
    }
  }
  return best;
}

MaskSet LabelsToMasks(const std::vector<int>& labels, int T, int F, int k) {
  Require(static_cast<long>(labels.size()) == static_cast<long>(T) * F,
          "LabelsToMasks: label count mismatch");
  MaskSet masks(k, T, F);
  masks.stage = MaskStage::kFinal;
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      int label = labels[static_cast<size_t>(t) * F + f];
      Require(label >= 0 && label < k, "LabelsToMasks: label out of range");
      masks.at(label, t, f) = 1.0;
    }
  }
  return masks;
}

}  // namespace bss
