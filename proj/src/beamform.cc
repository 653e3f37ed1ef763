// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/beamform.h"

namespace bss {

namespace {
constexpr double kPsdRidge = 1e-8;
constexpr double kLambdaFloor = 1e-10;
}  // namespace

PsdEstimate EstimatePsd(const MultichannelStft& y,
                        const Eigen::MatrixXd& mask) {
  Require(mask.rows() == y.T && mask.cols() == y.F,
          "EstimatePsd: mask shape mismatch");
  PsdEstimate out;
  out.F = y.F;
  out.D = y.D;
  out.phi.assign(y.F, Eigen::MatrixXcd::Zero(y.D, y.D));
  out.fallback.assign(y.F, 0);

  Eigen::VectorXcd yv(y.D);
  for (int f = 0; f < y.F; ++f) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(y.D, y.D);
    double wsum = 0.0;
    for (int t = 0; t < y.T; ++t) {
      double m = mask(t, f);
      Require(m >= -1e-9 && m <= 1.0 + 1e-9, "EstimatePsd: mask outside [0,1]");
      if (m <= 0.0) continue;
      for (int d = 0; d < y.D; ++d) yv(d) = y.at(t, f, d);
      acc.noalias() += m * (yv * yv.adjoint());
      wsum += m;
    }
    if (wsum <= 0.0) {
      // Starved mask: fall back to the unweighted average.
      out.fallback[f] = 1;
      acc.setZero();
      for (int t = 0; t < y.T; ++t) {
        for (int d = 0; d < y.D; ++d) yv(d) = y.at(t, f, d);
        acc.noalias() += yv * yv.adjoint();
      }
      wsum = y.T;
    }
    acc /= wsum;
    out.phi[f] = 0.5 * (acc + acc.adjoint());
  }
  return out;
}

Eigen::MatrixXd ClassMask(const MaskSet& masks, int k) {
  Require(k >= 0 && k < masks.K, "ClassMask: class out of range");
  Eigen::MatrixXd out(masks.T, masks.F);
  for (int t = 0; t < masks.T; ++t)
    for (int f = 0; f < masks.F; ++f) out(t, f) = masks.at(k, t, f);
  return out;
}

Eigen::MatrixXd InterferenceMask(const MaskSet& masks, int k) {
  return Eigen::MatrixXd::Ones(masks.T, masks.F) - ClassMask(masks, k);
}

MvdrWeights MvdrSouden(const Eigen::MatrixXcd& phi_target,
                       const Eigen::MatrixXcd& phi_inter, int ref) {
  const int D = static_cast<int>(phi_target.rows());
  Require(ref >= 0 && ref < D, "MvdrSouden: reference out of range");
  Eigen::MatrixXcd inter = phi_inter;
  inter += (kPsdRidge * inter.trace().real() / D) *
           Eigen::MatrixXcd::Identity(D, D);
  Eigen::LLT<Eigen::MatrixXcd> llt(inter);
  Require(llt.info() == Eigen::Success,
          "MvdrSouden: interference PSD not invertible after ridge");
  Eigen::MatrixXcd phi = llt.solve(phi_target);
  double lambda = phi.trace().real();
  MvdrWeights out;
  if (lambda <= kLambdaFloor) {
    out.w = Eigen::VectorXcd::Zero(D);
    out.degenerate = true;
    return out;
  }
  out.w = phi.col(ref) / lambda;
  return out;
}

int SelectReference(const PsdEstimate& target, const PsdEstimate& inter) {
  Require(target.F == inter.F && target.D == inter.D,
          "SelectReference: PSD shape mismatch");
  const int D = target.D;
  int best_ref = 0;
  double best_snr = -1.0;
  for (int r = 0; r < D; ++r) {
    double num = 0.0, den = 0.0;
    for (int f = 0; f < target.F; ++f) {
      MvdrWeights mv = MvdrSouden(target.phi[f], inter.phi[f], r);
      if (mv.degenerate) continue;
      num += (mv.w.adjoint() * target.phi[f] * mv.w)(0, 0).real();
      den += (mv.w.adjoint() * inter.phi[f] * mv.w)(0, 0).real();
    }
    double snr = den > 0.0 ? num / den : 0.0;
    if (snr > best_snr + 1e-12) {
      best_snr = snr;
      best_ref = r;
    }
  }
  return best_ref;
}

BeamformerBank BuildBeamformerBank(const MultichannelStft& y,
                                   const MaskSet& masks) {
  Require(masks.T == y.T && masks.F == y.F,
          "BuildBeamformerBank: mask shape mismatch");
  BeamformerBank bank;
  bank.K = masks.K;
  bank.F = y.F;
  bank.D = y.D;
  bank.w.assign(masks.K, Eigen::MatrixXcd::Zero(y.F, y.D));
  bank.reference.assign(masks.K, 0);
  bank.degenerate.assign(masks.K, 0);

  for (int k = 0; k < masks.K; ++k) {
    Eigen::MatrixXd target_mask = ClassMask(masks, k);
    Eigen::MatrixXd inter_mask = InterferenceMask(masks, k);
    PsdEstimate target = EstimatePsd(y, target_mask);
    PsdEstimate inter = EstimatePsd(y, inter_mask);
    int ref = SelectReference(target, inter);
    bank.reference[k] = ref;
    bool all_degenerate = true;
    for (int f = 0; f < y.F; ++f) {
      MvdrWeights mv = MvdrSouden(target.phi[f], inter.phi[f], ref);
      bank.w[k].row(f) = mv.w.transpose();
      if (!mv.degenerate) all_degenerate = false;
    }
    bank.degenerate[k] = all_degenerate ? 1 : 0;
  }
  return bank;
}

Spectrogram ApplyBeamformer(const Eigen::MatrixXcd& w_per_f,
                            const MultichannelStft& y) {
  Require(w_per_f.rows() == y.F && w_per_f.cols() == y.D,
          "ApplyBeamformer: weight shape mismatch");
  Spectrogram z(y.T, y.F);
  for (int t = 0; t < y.T; ++t)
    for (int f = 0; f < y.F; ++f) {
      std::complex<double> acc = 0.0;
      for (int d = 0; d < y.D; ++d)
        acc += std::conj(w_per_f(f, d)) * y.at(t, f, d);
      z(t, f) = acc;
    }
  return z;
}

Spectrogram ApplyMask(const Eigen::MatrixXd& mask, const MultichannelStft& y,
                      int ref) {
  Require(mask.rows() == y.T && mask.cols() == y.F,
          "ApplyMask: mask shape mismatch");
  Require(ref >= 0 && ref < y.D, "ApplyMask: reference out of range");
  Spectrogram z(y.T, y.F);
  for (int t = 0; t < y.T; ++t)
    for (int f = 0; f < y.F; ++f) z(t, f) = mask(t, f) * y.at(t, f, ref);
  return z;
}

}  // namespace bss
