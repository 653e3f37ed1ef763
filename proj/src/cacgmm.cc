// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/cacgmm.h"

#include <cmath>

#include "bss/parallel.h"
#include "bss/rng.h"

namespace bss {

namespace {

constexpr double kDegenerateNorm = 1e-10;
constexpr double kRidge = 1e-8;
constexpr double kWeightFloor = 1e-6;
constexpr double kStarved = 1e-12;

double LogNormConstant(int D) {
  // (D-1)! / (2 pi^D)
  return std::lgamma(D) - std::log(2.0) - D * std::log(M_PI);
}

struct ShapeFactors {
  Eigen::MatrixXcd inverse;
  double logdet = 0.0;
};

ShapeFactors Factorize(const Eigen::Ref<const Eigen::MatrixXcd>& shape) {
  Eigen::LLT<Eigen::MatrixXcd> llt(shape);
  Require(llt.info() == Eigen::Success,
          "cacgmm: shape matrix not positive definite after ridge");
  ShapeFactors out;
  int D = static_cast<int>(shape.rows());
  out.inverse = llt.solve(Eigen::MatrixXcd::Identity(D, D));
  double logdet = 0.0;
  for (int i = 0; i < D; ++i)
    logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  out.logdet = logdet;
  return out;
}

double QuadraticForm(const Eigen::MatrixXcd& inv,
                     const std::complex<double>* y, int D) {
  // y^H inv y for Hermitian inv; visit the strict upper triangle once.
  double acc = 0.0;
  for (int i = 0; i < D; ++i) {
    acc += inv(i, i).real() * std::norm(y[i]);
    for (int j = i + 1; j < D; ++j)
      acc += 2.0 * (std::conj(y[i]) * inv(i, j) * y[j]).real();
  }
  return acc;
}

}  // namespace

NormalizedObservations NormalizeObservations(const MultichannelStft& y) {
  NormalizedObservations obs;
  obs.T = y.T;
  obs.F = y.F;
  obs.D = y.D;
  obs.values.assign(static_cast<size_t>(y.T) * y.F * y.D, {0.0, 0.0});
  obs.degenerate.assign(static_cast<size_t>(y.T) * y.F, 0);
  for (int t = 0; t < y.T; ++t) {
    for (int f = 0; f < y.F; ++f) {
      double norm_sq = 0.0;
      for (int d = 0; d < y.D; ++d) norm_sq += std::norm(y.at(t, f, d));
      double norm = std::sqrt(norm_sq);
      std::complex<double>* out =
          obs.values.data() + (static_cast<size_t>(f) * y.T + t) * y.D;
      if (norm < kDegenerateNorm) {
        obs.degenerate[static_cast<size_t>(t) * y.F + f] = 1;
      } else {
        for (int d = 0; d < y.D; ++d) out[d] = y.at(t, f, d) / norm;
      }
    }
  }
  return obs;
}

double CacgLogPdf(const Eigen::VectorXcd& y_unit,
                  const Eigen::MatrixXcd& shape) {
  int D = static_cast<int>(y_unit.size());
  Require(shape.rows() == D && shape.cols() == D, "CacgLogPdf: bad shapes");
  ShapeFactors fac = Factorize(shape);
  double q = QuadraticForm(fac.inverse, y_unit.data(), D);
  Require(q > 0.0, "CacgLogPdf: non-positive quadratic form");
  return LogNormConstant(D) - fac.logdet - D * std::log(q);
}

MaskSet EStep(const NormalizedObservations& obs, const CacgmmState& state,
              int workers) {
  const int K = state.K, T = obs.T, F = obs.F, D = obs.D;
  Require(state.F == F && state.D == D, "EStep: state/observation mismatch");
  MaskSet masks(K, T, F);
  masks.stage = MaskStage::kRaw;

  ParallelFor(F, workers, [&](size_t f_idx) {
    int f = static_cast<int>(f_idx);
    std::vector<ShapeFactors> fac(K);
    std::vector<double> logw(K);
    for (int k = 0; k < K; ++k) {
      fac[k] = Factorize(state.shape(k, f));
      double w = state.weight(k, f);
      logw[k] = w > 0.0 ? std::log(w) : -1e300;
    }
    std::vector<double> logp(K);
    for (int t = 0; t < T; ++t) {
      if (obs.IsDegenerate(t, f)) {
        for (int k = 0; k < K; ++k) masks.at(k, t, f) = 1.0 / K;
        continue;
      }
      const std::complex<double>* y = obs.at(t, f);
      double best = -1e300;
      for (int k = 0; k < K; ++k) {
        double q = QuadraticForm(fac[k].inverse, y, D);
        logp[k] = logw[k] + LogNormConstant(D) - fac[k].logdet -
                  D * std::log(q);
        best = std::max(best, logp[k]);
      }
      double denom = 0.0;
      for (int k = 0; k < K; ++k) {
        logp[k] = std::exp(logp[k] - best);
        denom += logp[k];
      }
      for (int k = 0; k < K; ++k) masks.at(k, t, f) = logp[k] / denom;
    }
  });
  return masks;
}

CacgmmState MStep(const NormalizedObservations& obs, const MaskSet& masks,
                  const CacgmmState& prev_state, int workers) {
  const int K = masks.K, T = obs.T, F = obs.F, D = obs.D;
  Require(masks.T == T && masks.F == F, "MStep: mask/observation mismatch");
  Require(prev_state.K == K && prev_state.F == F && prev_state.D == D,
          "MStep: previous state mismatch");

  CacgmmState state;
  state.K = K;
  state.F = F;
  state.D = D;
  state.weights.assign(static_cast<size_t>(K) * F, 0.0);
  state.shapes.assign(static_cast<size_t>(K) * F * D * D, {0.0, 0.0});

  ParallelFor(F, workers, [&](size_t f_idx) {
    int f = static_cast<int>(f_idx);
    int valid = 0;
    for (int t = 0; t < T; ++t)
      if (!obs.IsDegenerate(t, f)) ++valid;

    std::vector<double> raw_weight(K, 1.0 / K);
    Eigen::MatrixXcd acc(D, D);
    for (int k = 0; k < K; ++k) {
      auto out = state.shape(k, f);
      if (valid == 0) {
        out = prev_state.shape(k, f);
        continue;
      }
      ShapeFactors prev = Factorize(prev_state.shape(k, f));
      acc.setZero();
      double denom = 0.0;
      for (int t = 0; t < T; ++t) {
        if (obs.IsDegenerate(t, f)) continue;
        double g = masks.at(k, t, f);
        denom += g;
        const std::complex<double>* y = obs.at(t, f);
        double q = QuadraticForm(prev.inverse, y, D);
        double w = g / q;
        for (int i = 0; i < D; ++i) {
          for (int j = i; j < D; ++j)
            acc(i, j) += w * y[i] * std::conj(y[j]);
        }
      }
      raw_weight[k] = denom / valid;
      if (denom <= kStarved) {
        out = prev_state.shape(k, f);
        raw_weight[k] = kWeightFloor;
        continue;
      }
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < i; ++j) acc(i, j) = std::conj(acc(j, i));
      Eigen::MatrixXcd shape = acc * (static_cast<double>(D) / denom);
      shape = 0.5 * (shape + shape.adjoint()).eval();
      double tr = shape.trace().real();
      shape += (kRidge * tr / D) * Eigen::MatrixXcd::Identity(D, D);
      tr = shape.trace().real();
      shape *= static_cast<double>(D) / tr;
      out = shape;
    }
    double wsum = 0.0;
    for (int k = 0; k < K; ++k) {
      raw_weight[k] = std::max(raw_weight[k], kWeightFloor);
      wsum += raw_weight[k];
    }
    for (int k = 0; k < K; ++k) state.weight(k, f) = raw_weight[k] / wsum;
  });
  return state;
}

double LogLikelihood(const NormalizedObservations& obs,
                     const CacgmmState& state, int workers) {
  const int K = state.K, T = obs.T, F = obs.F, D = obs.D;
  std::vector<double> partial(F, 0.0);
  std::vector<int> counts(F, 0);
  ParallelFor(F, workers, [&](size_t f_idx) {
    int f = static_cast<int>(f_idx);
    std::vector<ShapeFactors> fac(K);
    std::vector<double> logw(K);
    for (int k = 0; k < K; ++k) {
      fac[k] = Factorize(state.shape(k, f));
      double w = state.weight(k, f);
      logw[k] = w > 0.0 ? std::log(w) : -1e300;
    }
    std::vector<double> logp(K);
    double sum = 0.0;
    int count = 0;
    for (int t = 0; t < T; ++t) {
      if (obs.IsDegenerate(t, f)) continue;
      const std::complex<double>* y = obs.at(t, f);
      double best = -1e300;
      for (int k = 0; k < K; ++k) {
        double q = QuadraticForm(fac[k].inverse, y, D);
        logp[k] = logw[k] + LogNormConstant(D) - fac[k].logdet -
                  D * std::log(q);
        best = std::max(best, logp[k]);
      }
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += std::exp(logp[k] - best);
      sum += best + std::log(acc);
      ++count;
    }
    partial[f] = sum;
    counts[f] = count;
  });
  double total = 0.0;
  long n = 0;
  for (int f = 0; f < F; ++f) {
    total += partial[f];
    n += counts[f];
  }
  return n > 0 ? total / n : 0.0;
}

MaskSet RandomInitMasks(int K, int T, int F, uint64_t seed) {
  Rng rng(SplitSeed(seed, 0xd1f1c));
  MaskSet masks(K, T, F);
  masks.stage = MaskStage::kRaw;
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        double u = rng.Uniform();
        while (u <= 1e-300) u = rng.Uniform();
        double e = -std::log(u);  // Dirichlet(1) via normalized exponentials
        masks.at(k, t, f) = e;
        sum += e;
      }
      for (int k = 0; k < K; ++k) masks.at(k, t, f) /= sum;
    }
  }
  return masks;
}

EmResult EmFit(const MultichannelStft& y, int num_classes,
               const std::optional<MaskSet>& init_masks, int iterations,
               uint64_t seed, int workers) {
  Require(num_classes >= 2, "EmFit: need at least two classes");
  Require(iterations >= 1, "EmFit: need at least one iteration");
  Require(num_classes <= y.T, "EmFit: more classes than time frames");

  NormalizedObservations obs = NormalizeObservations(y);

  MaskSet masks;
  if (init_masks.has_value()) {
    Require(init_masks->K == num_classes && init_masks->T == y.T &&
                init_masks->F == y.F,
            "EmFit: init mask dimensions mismatch");
    ValidateSimplex(*init_masks);
    masks = *init_masks;
  } else {
    masks = RandomInitMasks(num_classes, y.T, y.F, seed);
  }

  CacgmmState prev;
  prev.K = num_classes;
  prev.F = y.F;
  prev.D = y.D;
  prev.weights.assign(static_cast<size_t>(num_classes) * y.F,
                      1.0 / num_classes);
  prev.shapes.assign(static_cast<size_t>(num_classes) * y.F * y.D * y.D,
                     {0.0, 0.0});
  for (int k = 0; k < num_classes; ++k)
    for (int f = 0; f < y.F; ++f)
      prev.shape(k, f) = Eigen::MatrixXcd::Identity(y.D, y.D);

  EmResult result;
  for (int it = 0; it < iterations; ++it) {
    CacgmmState state = MStep(obs, masks, prev, workers);
    result.loglik_trace.push_back(LogLikelihood(obs, state, workers));
    masks = EStep(obs, state, workers);
    prev = std::move(state);
  }
  result.state = std::move(prev);
  result.masks = std::move(masks);
  result.masks.stage = MaskStage::kRaw;
  return result;
}

void ValidateSimplex(const MaskSet& masks, double tol) {
  for (int t = 0; t < masks.T; ++t) {
    for (int f = 0; f < masks.F; ++f) {
      double sum = 0.0;
      for (int k = 0; k < masks.K; ++k) {
        double v = masks.at(k, t, f);
        Require(v >= -tol && v <= 1.0 + tol, "MaskSet: entry outside [0, 1]");
        sum += v;
      }
      Require(std::abs(sum - 1.0) <= tol, "MaskSet: slot does not sum to 1");
    }
  }
}

}  // namespace bss
