// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_CACGMM_H_
#define BSS_CACGMM_H_

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "bss/common.h"
#include "bss/stft.h"

namespace bss {

// Per-slot unit-normalized observation vectors. Stored frequency-major so EM
// statistics stream contiguously per bin.
struct NormalizedObservations {
  int T = 0;
  int F = 0;
  int D = 0;
  std::vector<std::complex<double>> values;  // [((f * T) + t) * D + d]
  std::vector<uint8_t> degenerate;           // [t * F + f], near-silent slots

  const std::complex<double>* at(int t, int f) const {
    return values.data() + (static_cast<size_t>(f) * T + t) * D;
  }
  bool IsDegenerate(int t, int f) const {
    return degenerate[static_cast<size_t>(t) * F + f] != 0;
  }
};

// Mixture weights pi_{kf} and Hermitian PD shape matrices B_{kf}.
struct CacgmmState {
  int K = 0;
  int F = 0;
  int D = 0;
  std::vector<double> weights;                // [k * F + f]
  std::vector<std::complex<double>> shapes;   // [(k * F + f) * D * D], row major

  double& weight(int k, int f) { return weights[static_cast<size_t>(k) * F + f]; }
  double weight(int k, int f) const { return weights[static_cast<size_t>(k) * F + f]; }
  Eigen::Map<Eigen::MatrixXcd> shape(int k, int f) {
    return {shapes.data() + (static_cast<size_t>(k) * F + f) * D * D, D, D};
  }
  Eigen::Map<const Eigen::MatrixXcd> shape(int k, int f) const {
    return {shapes.data() + (static_cast<size_t>(k) * F + f) * D * D, D, D};
  }
};

enum class MaskStage { kRaw, kAligned, kFinal };

// Per-class posterior masks, simplex-constrained over classes at every slot.
struct MaskSet {
  int K = 0;
  int T = 0;
  int F = 0;
  MaskStage stage = MaskStage::kRaw;
  std::vector<double> m;  // [(k * T + t) * F + f]

  MaskSet() = default;
  MaskSet(int k, int t, int f)
      : K(k), T(t), F(f), m(static_cast<size_t>(k) * t * f, 0.0) {}
  double& at(int k, int t, int f) {
    return m[(static_cast<size_t>(k) * T + t) * F + f];
  }
  double at(int k, int t, int f) const {
    return m[(static_cast<size_t>(k) * T + t) * F + f];
  }
};

struct EmResult {
  CacgmmState state;
  MaskSet masks;
  std::vector<double> loglik_trace;  // average loglik per EM iteration
};

NormalizedObservations NormalizeObservations(const MultichannelStft& y);

// log of the complex angular central Gaussian density at a unit vector.
double CacgLogPdf(const Eigen::VectorXcd& y_unit, const Eigen::MatrixXcd& shape);

MaskSet EStep(const NormalizedObservations& obs, const CacgmmState& state,
              int workers = 1);

CacgmmState MStep(const NormalizedObservations& obs, const MaskSet& masks,
                  const CacgmmState& prev_state, int workers = 1);

double LogLikelihood(const NormalizedObservations& obs,
                     const CacgmmState& state, int workers = 1);

// Dirichlet(1) random masks used as the "Random" initialization.
MaskSet RandomInitMasks(int K, int T, int F, uint64_t seed);

EmResult EmFit(const MultichannelStft& y, int num_classes,
               const std::optional<MaskSet>& init_masks, int iterations,
               uint64_t seed, int workers = 1);

void ValidateSimplex(const MaskSet& masks, double tol = 1e-6);

}  // namespace bss

#endif  // BSS_CACGMM_H_
