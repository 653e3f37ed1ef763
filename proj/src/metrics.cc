// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bss {

namespace {

double PowerRatioDb(double num, double den) {
  // Zero-interference cases cap at +100 dB; fully cancelled targets at -100.
  if (den < 1e-10 * num) return kSdrCapDb;
  if (num < 1e-10 * den) return -kSdrCapDb;
  return 10.0 * std::log10(num / den);
}

}  // namespace

std::optional<double> InvasiveSdrMask(
    const Eigen::MatrixXd& mask, const std::vector<MultichannelStft>& images,
    const MultichannelStft& noise, int target, int ref) {
  const int K = static_cast<int>(images.size());
  Require(target >= 0 && target < K, "InvasiveSdrMask: bad target");
  const MultichannelStft& x = images[target];
  Require(mask.rows() == x.T && mask.cols() == x.F,
          "InvasiveSdrMask: mask shape mismatch");

  double num = 0.0, den = 0.0, target_energy = 0.0;
  for (int t = 0; t < x.T; ++t) {
    for (int f = 0; f < x.F; ++f) {
      double m2 = mask(t, f) * mask(t, f);
      double xe = std::norm(x.at(t, f, ref));
      target_energy += xe;
      num += m2 * xe;
      std::complex<double> inter = noise.at(t, f, ref);
      for (int k = 0; k < K; ++k)
        if (k != target) inter += images[k].at(t, f, ref);
      den += m2 * std::norm(inter);
    }
  }
  if (target_energy <= 0.0) return std::nullopt;
  return PowerRatioDb(num, den);
}

std::optional<double> InvasiveSdrBf(const Eigen::MatrixXcd& w_per_f,
                                    const std::vector<MultichannelStft>& images,
                                    const MultichannelStft& noise, int target) {
  const int K = static_cast<int>(images.size());
  Require(target >= 0 && target < K, "InvasiveSdrBf: bad target");
  const MultichannelStft& x = images[target];
  Require(w_per_f.rows() == x.F && w_per_f.cols() == x.D,
          "InvasiveSdrBf: weight shape mismatch");
  if (w_per_f.norm() == 0.0) return std::nullopt;

  double num = 0.0, den = 0.0, target_energy = 0.0;
  for (int t = 0; t < x.T; ++t) {
    for (int f = 0; f < x.F; ++f) {
      std::complex<double> zx = 0.0, zi = 0.0;
      for (int d = 0; d < x.D; ++d) {
        std::complex<double> wc = std::conj(w_per_f(f, d));
        zx += wc * x.at(t, f, d);
        target_energy += std::norm(x.at(t, f, d));
        std::complex<double> inter = noise.at(t, f, d);
        for (int k = 0; k < K; ++k)
          if (k != target) inter += images[k].at(t, f, d);
        zi += wc * inter;
      }
      num += std::norm(zx);
      den += std::norm(zi);
    }
  }
  if (target_energy <= 0.0) return std::nullopt;
  return PowerRatioDb(num, den);
}

double InputSdr(const std::vector<MultichannelStft>& images,
                const MultichannelStft& noise, int target, int ref) {
  const int K = static_cast<int>(images.size());
  double num = 0.0, den = 0.0;
  for (int t = 0; t < images[target].T; ++t)
    for (int f = 0; f < images[target].F; ++f) {
      num += std::norm(images[target].at(t, f, ref));
      std::complex<double> inter = noise.at(t, f, ref);
      for (int k = 0; k < K; ++k)
        if (k != target) inter += images[k].at(t, f, ref);
      den += std::norm(inter);
    }
  return PowerRatioDb(num, den);
}

PermutationChoice BestPermutation(const Eigen::MatrixXd& sdr_matrix) {
  const int K = static_cast<int>(sdr_matrix.rows());
  Require(sdr_matrix.cols() == K, "BestPermutation: matrix not square");
  Require(K >= 1 && K <= 4, "BestPermutation: K out of supported range");

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  PermutationChoice best;
  best.total = -std::numeric_limits<double>::max();
  do {
    double total = 0.0;
    for (int i = 0; i < K; ++i) total += sdr_matrix(i, perm[i]);
    if (total > best.total) {
      best.total = total;
      best.assignment = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double SiSdr(const std::vector<double>& estimate,
             const std::vector<double>& reference) {
  Require(estimate.size() == reference.size(), "SiSdr: length mismatch");
  double ref_energy = 0.0, dot = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += estimate[i] * reference[i];
  }
  Require(ref_energy > 0.0, "SiSdr: silent reference");
  double alpha = dot / ref_energy;
  double target_energy = alpha * alpha * ref_energy;
  double err_energy = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    double e = estimate[i] - alpha * reference[i];
    err_energy += e * e;
  }
  if (err_energy < 1e-10 * target_energy) return kSdrCapDb;
  if (target_energy <= 0.0) return -kSdrCapDb;
  return 10.0 * std::log10(target_energy / err_energy);
}

void FinalizeReport(EvalReport* report) {
  double in = 0.0, out = 0.0, si = 0.0;
  std::vector<double> gains;
  int n = 0;
  for (const auto& mix : report->mixtures) {
    if (mix.excluded) continue;
    double g = 0.0;
    for (const auto& s : mix.speakers) {
      in += s.input_sdr;
      out += s.output_sdr;
      si += s.si_sdr;
      g += s.gain;
      ++n;
    }
    gains.push_back(g / mix.speakers.size());
  }
  report->num_evaluated = static_cast<int>(gains.size());
  if (n == 0) return;
  report->mean_input_sdr = in / n;
  report->mean_output_sdr = out / n;
  report->mean_si_sdr = si / n;
  double mg = std::accumulate(gains.begin(), gains.end(), 0.0) / gains.size();
  report->mean_gain = mg;
  double var = 0.0;
  for (double g : gains) var += (g - mg) * (g - mg);
  report->std_gain =
      gains.size() > 1 ? std::sqrt(var / (gains.size() - 1)) : 0.0;
}

}  // namespace bss
