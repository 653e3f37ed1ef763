// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_STFT_H_
#define BSS_STFT_H_

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "bss/audio.h"
#include "bss/common.h"

namespace bss {

// Single-channel complex spectrogram, frames x frequency bins.
using Spectrogram = Eigen::MatrixXcd;

struct StftConfig {
  int dft_size = 512;
  int shift = 128;
  std::string window = "sqrt_hann";

  void Validate() const {
    Require(dft_size > 0 && shift > 0, "StftConfig: sizes must be positive");
    Require(shift <= dft_size, "StftConfig: shift must not exceed dft_size");
    Require(dft_size % shift == 0, "StftConfig: shift must divide dft_size");
    Require(dft_size % 2 == 0, "StftConfig: dft_size must be even");
    Require(window == "sqrt_hann", "StftConfig: unknown window " + window);
  }
  int NumBins() const { return dft_size / 2 + 1; }
  int NumFrames(int num_samples) const {
    // Pre/post padding of dft_size - shift samples gives every input sample
    // full window coverage.
    return static_cast<int>(
        (static_cast<long>(num_samples) + dft_size - shift + shift - 1) / shift);
  }
};

// Complex STFT tensor of a multichannel signal, T x F x D.
struct MultichannelStft {
  int T = 0;
  int F = 0;
  int D = 0;
  int sample_rate = 0;
  StftConfig config;
  std::vector<std::complex<double>> values;  // [(t * F + f) * D + d]

  MultichannelStft() = default;
  MultichannelStft(int t, int f, int d, StftConfig cfg)
      : T(t), F(f), D(d), config(cfg),
        values(static_cast<size_t>(t) * f * d, {0.0, 0.0}) {}

  std::complex<double>& at(int t, int f, int d) {
    return values[(static_cast<size_t>(t) * F + f) * D + d];
  }
  std::complex<double> at(int t, int f, int d) const {
    return values[(static_cast<size_t>(t) * F + f) * D + d];
  }
  // T x F view of one channel.
  Spectrogram Channel(int d) const {
    Spectrogram out(T, F);
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) out(t, f) = at(t, f, d);
    return out;
  }
};

MultichannelStft Stft(const AudioBuffer& audio, const StftConfig& config);
AudioBuffer Istft(const MultichannelStft& spec, int num_samples);

// Synthesis of a single-channel spectrogram back to audio.
AudioBuffer IstftSingle(const Spectrogram& spec, const StftConfig& config,
                        int num_samples, int sample_rate);

}  // namespace bss

#endif  // BSS_STFT_H_
