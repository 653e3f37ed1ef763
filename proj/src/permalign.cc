// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/permalign.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bss {

namespace {

constexpr int kMaxClasses = 6;
constexpr int kMaxSweeps = 20;

std::vector<std::vector<int>> AllPermutations(int k) {
  std::vector<int> base(k);
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

// Pearson correlation over time; 0 when either side is constant.
double Correlation(const double* x, const double* y, int n, int x_stride) {
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[static_cast<size_t>(i) * x_stride];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    double dx = x[static_cast<size_t>(i) * x_stride] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx < 1e-18 || syy < 1e-18) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Centroid over frequencies of each class, T values per class.
std::vector<std::vector<double>> Centroids(const MaskSet& masks) {
  std::vector<std::vector<double>> c(masks.K, std::vector<double>(masks.T, 0.0));
  for (int k = 0; k < masks.K; ++k)
    for (int t = 0; t < masks.T; ++t) {
      double acc = 0.0;
      for (int f = 0; f < masks.F; ++f) acc += masks.at(k, t, f);
      c[k][t] = acc / masks.F;
    }
  return c;
}

double ScoreAgainst(const MaskSet& masks,
                    const std::vector<std::vector<double>>& centroids) {
  double score = 0.0;
  std::vector<double> row(masks.T);
  for (int f = 0; f < masks.F; ++f)
    for (int k = 0; k < masks.K; ++k) {
      for (int t = 0; t < masks.T; ++t) row[t] = masks.at(k, t, f);
      score += Correlation(row.data(), centroids[k].data(), masks.T, 1);
    }
  return score;
}

}  // namespace

double AlignmentScore(const MaskSet& masks) {
  return ScoreAgainst(masks, Centroids(masks));
}

AlignResult Align(const MaskSet& raw) {
  const int K = raw.K, T = raw.T, F = raw.F;
  Require(K <= kMaxClasses, "Align: class count exceeds permutation budget");
  ValidateSimplex(raw);

  AlignResult result;
  result.masks = raw;
  result.map.perm.assign(F, {});
  for (int f = 0; f < F; ++f) {
    result.map.perm[f].resize(K);
    std::iota(result.map.perm[f].begin(), result.map.perm[f].end(), 0);
  }

  const auto perms = AllPermutations(K);

  // Visit bins in order of descending mask variance.
  std::vector<std::pair<double, int>> order(F);
  for (int f = 0; f < F; ++f) {
    double var = 0.0;
    for (int k = 0; k < K; ++k) {
      double mean = 0.0;
      for (int t = 0; t < T; ++t) mean += raw.at(k, t, f);
      mean /= T;
      for (int t = 0; t < T; ++t) {
        double d = raw.at(k, t, f) - mean;
        var += d * d;
      }
    }
    order[f] = {-var, f};
  }
  std::sort(order.begin(), order.end());

  MaskSet& work = result.masks;
  std::vector<double> row(T);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    auto centroids = Centroids(work);
    bool changed = false;
    for (const auto& [neg_var, f] : order) {
      (void)neg_var;
      // Correlation of every current class row against every centroid.
      Eigen::MatrixXd corr(K, K);
      for (int j = 0; j < K; ++j) {
        for (int t = 0; t < T; ++t) row[t] = work.at(j, t, f);
        for (int k = 0; k < K; ++k)
          corr(j, k) = Correlation(row.data(), centroids[k].data(), T, 1);
      }
      double current = 0.0;
      for (int k = 0; k < K; ++k) current += corr(k, k);
      const std::vector<int>* best_perm = nullptr;
      double best = current;
      for (const auto& p : perms) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += corr(p[k], k);
        if (s > best + 1e-12) {
          best = s;
          best_perm = &p;
        }
      }
      if (best_perm != nullptr) {
        changed = true;
        const std::vector<int>& p = *best_perm;
        std::vector<double> tmp(static_cast<size_t>(K) * T);
        for (int k = 0; k < K; ++k)
          for (int t = 0; t < T; ++t)
            tmp[static_cast<size_t>(k) * T + t] = work.at(p[k], t, f);
        for (int k = 0; k < K; ++k)
          for (int t = 0; t < T; ++t)
            work.at(k, t, f) = tmp[static_cast<size_t>(k) * T + t];
        std::vector<int> composed(K);
        for (int k = 0; k < K; ++k) composed[k] = result.map.perm[f][p[k]];
        result.map.perm[f] = composed;
      }
    }
    if (!changed) break;
  }

  // The identity configuration is always a valid fallback.
  if (AlignmentScore(result.masks) < AlignmentScore(raw)) {
    result.masks = raw;
    for (int f = 0; f < F; ++f)
      std::iota(result.map.perm[f].begin(), result.map.perm[f].end(), 0);
  }
  result.masks.stage = MaskStage::kAligned;
  return result;
}

}  // namespace bss
