// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/stft.h"

#include <cmath>

#include "bss/fft.h"

namespace bss {

namespace {

std::vector<double> SqrtHann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = std::sqrt(0.5 * (1.0 - std::cos(2.0 * M_PI * i / n)));
  return w;
}

}  // namespace

MultichannelStft Stft(const AudioBuffer& audio, const StftConfig& config) {
  config.Validate();
  Require(audio.num_samples > 0 && audio.num_channels > 0,
          "Stft: empty audio");

  const int W = config.dft_size;
  const int S = config.shift;
  const int pad = W - S;
  const int T = config.NumFrames(audio.num_samples);
  const int F = config.NumBins();
  const int padded_len = (T - 1) * S + W;

  MultichannelStft spec(T, F, audio.num_channels, config);
  spec.sample_rate = audio.sample_rate;
  std::vector<double> window = SqrtHann(W);
  RealFft fft(W);

  std::vector<double> padded(padded_len, 0.0);
  std::vector<double> frame(W);
  std::vector<std::complex<double>> bins(F);
  for (int d = 0; d < audio.num_channels; ++d) {
    std::fill(padded.begin(), padded.end(), 0.0);
    const double* x = audio.channel(d);
    for (int i = 0; i < audio.num_samples; ++i) padded[pad + i] = x[i];
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < W; ++i) frame[i] = padded[t * S + i] * window[i];
      fft.Forward(frame.data(), bins.data());
      for (int f = 0; f < F; ++f) spec.at(t, f, d) = bins[f];
    }
  }
  return spec;
}

AudioBuffer Istft(const MultichannelStft& spec, int num_samples) {
  spec.config.Validate();
  const int W = spec.config.dft_size;
  const int S = spec.config.shift;
  const int pad = W - S;
  Require(spec.config.NumFrames(num_samples) == spec.T,
          "Istft: num_samples inconsistent with frame count");
  Require(spec.F == spec.config.NumBins(), "Istft: bad bin count");

  const int padded_len = (spec.T - 1) * S + W;
  std::vector<double> window = SqrtHann(W);
  RealFft fft(W);

  AudioBuffer audio(spec.D, num_samples,
                    spec.sample_rate > 0 ? spec.sample_rate : 8000);
  std::vector<double> acc(padded_len);
  std::vector<double> wsum(padded_len);
  std::vector<double> frame(W);
  std::vector<std::complex<double>> bins(spec.F);

  for (int d = 0; d < spec.D; ++d) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(wsum.begin(), wsum.end(), 0.0);
    for (int t = 0; t < spec.T; ++t) {
      for (int f = 0; f < spec.F; ++f) bins[f] = spec.at(t, f, d);
      fft.Inverse(bins.data(), frame.data());
      for (int i = 0; i < W; ++i) {
        acc[t * S + i] += frame[i] * window[i];
        wsum[t * S + i] += window[i] * window[i];
      }
    }
    for (int i = 0; i < num_samples; ++i) {
      double w = wsum[pad + i];
      audio.at(d, i) = w > 1e-12 ? acc[pad + i] / w : 0.0;
    }
  }
  return audio;
}

AudioBuffer IstftSingle(const Spectrogram& spec, const StftConfig& config,
                        int num_samples, int sample_rate) {
  MultichannelStft mc(static_cast<int>(spec.rows()),
                      static_cast<int>(spec.cols()), 1, config);
  mc.sample_rate = sample_rate;
  for (int t = 0; t < mc.T; ++t)
    for (int f = 0; f < mc.F; ++f) mc.at(t, f, 0) = spec(t, f);
  AudioBuffer out = Istft(mc, num_samples);
  out.sample_rate = sample_rate;
  return out;
}

}  // namespace bss
