// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_BEAMFORM_H_
#define BSS_BEAMFORM_H_

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bss/cacgmm.h"
#include "bss/stft.h"

namespace bss {

// Per-frequency Hermitian PSD matrices estimated under one mask.
struct PsdEstimate {
  int F = 0;
  int D = 0;
  std::vector<Eigen::MatrixXcd> phi;  // F matrices, D x D
  std::vector<uint8_t> fallback;      // bins where the mask was all zero
};

// Per-class MVDR weights and chosen reference channels.
struct BeamformerBank {
  int K = 0;
  int F = 0;
  int D = 0;
  std::vector<Eigen::MatrixXcd> w;  // K entries, F x D (row f = w_kf^T)
  std::vector<int> reference;       // per class
  std::vector<uint8_t> degenerate;  // classes with an empty target
};

PsdEstimate EstimatePsd(const MultichannelStft& y, const Eigen::MatrixXd& mask);

Eigen::MatrixXd InterferenceMask(const MaskSet& masks, int k);

// Extract one class mask as a T x F matrix.
Eigen::MatrixXd ClassMask(const MaskSet& masks, int k);

struct MvdrWeights {
  Eigen::VectorXcd w;
  bool degenerate = false;  // lambda underflow, w forced to zero
};

MvdrWeights MvdrSouden(const Eigen::MatrixXcd& phi_target,
                       const Eigen::MatrixXcd& phi_inter, int ref);

// Reference channel maximizing the expected SNR summed over frequencies.
int SelectReference(const PsdEstimate& target, const PsdEstimate& inter);

BeamformerBank BuildBeamformerBank(const MultichannelStft& y,
                                   const MaskSet& masks);

Spectrogram ApplyBeamformer(const Eigen::MatrixXcd& w_per_f,
                            const MultichannelStft& y);

Spectrogram ApplyMask(const Eigen::MatrixXd& mask, const MultichannelStft& y,
                      int ref);

}  // namespace bss

#endif  // BSS_BEAMFORM_H_
