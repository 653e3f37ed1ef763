// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_MIXSIM_H_
#define BSS_MIXSIM_H_

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bss/audio.h"
#include "bss/rng.h"

namespace bss {

struct RoomSpec {
  Eigen::Vector3d dimensions;  // meters
  double t60 = 0.3;            // seconds
  double speed_of_sound = 343.0;
  int sample_rate = 8000;
};

struct SceneSpec {
  RoomSpec room;
  Eigen::Vector3d array_center;
  std::vector<Eigen::Vector3d> mic_positions;
  std::vector<Eigen::Vector3d> source_positions;
  std::vector<AudioBuffer> dry_sources;
  double snr_db = 25.0;
  uint64_t seed = 0;
};

struct RoomImpulseResponse {
  std::vector<double> taps;
  int sample_rate = 8000;
};

struct MixtureScene {
  AudioBuffer observation;                // D channels
  std::vector<AudioBuffer> source_images;  // K buffers of D channels
  AudioBuffer noise_image;
  SceneSpec metadata;
};

// Ranges and geometry knobs for scene sampling.
struct SimConfig {
  int sample_rate = 8000;
  int num_mics = 4;
  int num_speakers = 2;
  Eigen::Vector3d room_min{4.5, 3.5, 2.6};
  Eigen::Vector3d room_max{8.0, 6.0, 3.5};
  double t60_min = 0.2;
  double t60_max = 0.5;
  double snr_min_db = 20.0;
  double snr_max_db = 30.0;
  double array_radius = 0.1;
  double min_angle_deg = 15.0;
  double duration_min_s = 2.6;
  double duration_max_s = 3.0;
  double source_dist_min = 1.0;
  double source_dist_max = 2.2;
  double wall_margin = 0.5;
  int max_order = 10;
  std::string source_dir;  // empty: synthesize speech-like sources

  void Validate() const;
};

SceneSpec SampleScene(uint64_t seed, const SimConfig& config);

RoomImpulseResponse ImageMethodRir(const RoomSpec& room,
                                   const Eigen::Vector3d& source_pos,
                                   const Eigen::Vector3d& mic_pos,
                                   int max_order);

MixtureScene RenderScene(const SceneSpec& scene, int max_order);

// Harmonic "speech-like" test source: voiced segments with pitch drift and
// amplitude modulation, separated by near-silent pauses. The fundamental is
// drawn from [f0_min, f0_max].
std::vector<double> SynthSpeechLike(Rng& rng, int num_samples, int sample_rate,
                                    double f0_min = 95.0,
                                    double f0_max = 280.0);

}  // namespace bss

#endif  // BSS_MIXSIM_H_
