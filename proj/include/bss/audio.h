// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_AUDIO_H_
#define BSS_AUDIO_H_

#include <string>
#include <vector>

#include "bss/common.h"

namespace bss {

// Multichannel time-domain audio. Samples are stored channel-major,
// nominally in [-1, 1].
struct AudioBuffer {
  int num_channels = 0;
  int num_samples = 0;
  int sample_rate = 0;
  std::vector<double> samples;  // [ch * num_samples + i]

  AudioBuffer() = default;
  AudioBuffer(int channels, int n, int rate)
      : num_channels(channels),
        num_samples(n),
        sample_rate(rate),
        samples(static_cast<size_t>(channels) * n, 0.0) {}

  double& at(int ch, int i) {
    return samples[static_cast<size_t>(ch) * num_samples + i];
  }
  double at(int ch, int i) const {
    return samples[static_cast<size_t>(ch) * num_samples + i];
  }
  const double* channel(int ch) const {
    return samples.data() + static_cast<size_t>(ch) * num_samples;
  }
  double* channel(int ch) {
    return samples.data() + static_cast<size_t>(ch) * num_samples;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

AudioBuffer ReadWav(const std::string& path);
void WriteWav(const AudioBuffer& buffer, const std::string& path,
              WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace bss

#endif  // BSS_AUDIO_H_
