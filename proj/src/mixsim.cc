// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/mixsim.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "bss/common.h"
#include "bss/fft.h"

namespace bss {

namespace {

constexpr int kFracKernelTaps = 81;
constexpr int kFracKernelHalf = kFracKernelTaps / 2;
// Interpolation cutoff slightly below Nyquist so the kernel energy is flat
// over fractional offsets.
constexpr double kFracKernelCutoff = 0.94;

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

// Hann-windowed sinc centered at `frac` in [0, 1).
void FracDelayKernel(double frac, double* kernel) {
  for (int n = 0; n < kFracKernelTaps; ++n) {
    double t = n - kFracKernelHalf - frac;
    double x = (t + kFracKernelHalf + 0.5) / kFracKernelTaps;
    double w =
        (x <= 0.0 || x >= 1.0) ? 0.0 : 0.5 * (1.0 - std::cos(2.0 * M_PI * x));
    kernel[n] = w * Sinc(kFracKernelCutoff * t);
  }
}

// Uniform wall reflection coefficient from T60 via Eyring's formula.
double ReflectionCoefficient(const RoomSpec& room) {
  const Eigen::Vector3d& L = room.dimensions;
  double volume = L.x() * L.y() * L.z();
  double surface =
      2.0 * (L.x() * L.y() + L.x() * L.z() + L.y() * L.z());
  Require(room.t60 > 0.0, "ImageMethodRir: t60 must be positive");
  double alpha = 1.0 - std::exp(-0.161 * volume / (surface * room.t60));
  if (alpha > 0.9999) alpha = 0.9999;
  return std::sqrt(1.0 - alpha);
}

bool InsideRoom(const Eigen::Vector3d& p, const Eigen::Vector3d& dims,
                double margin) {
  for (int i = 0; i < 3; ++i)
    if (p[i] < margin || p[i] > dims[i] - margin) return false;
  return true;
}

double AngleBetweenDeg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  double c = a.dot(b) / (a.norm() * b.norm());
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

std::vector<double> LoadDrySource(const std::string& dir, Rng& rng,
                                  int num_samples) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".wav") files.push_back(entry.path());
  }
  Require(!files.empty(), "SampleScene: no WAV files in " + dir);
  std::sort(files.begin(), files.end());
  AudioBuffer wav = ReadWav(files[rng.UniformInt(files.size())]);
  std::vector<double> out(num_samples, 0.0);
  if (wav.num_samples <= num_samples) {
    for (int i = 0; i < wav.num_samples; ++i) out[i] = wav.at(0, i);
  } else {
    int offset =
        static_cast<int>(rng.UniformInt(wav.num_samples - num_samples + 1));
    for (int i = 0; i < num_samples; ++i) out[i] = wav.at(0, offset + i);
  }
  return out;
}

}  // namespace

void SimConfig::Validate() const {
  Require(sample_rate > 0, "SimConfig: sample_rate must be positive");
  Require(num_mics >= 1, "SimConfig: need at least one mic");
  Require(num_speakers >= 1, "SimConfig: need at least one speaker");
  for (int i = 0; i < 3; ++i) {
    Require(room_min[i] > 1.0, "SimConfig: room dimensions must exceed 1 m");
    Require(room_max[i] >= room_min[i], "SimConfig: room_max below room_min");
  }
  Require(t60_min > 0 && t60_max >= t60_min, "SimConfig: bad t60 range");
  Require(snr_max_db >= snr_min_db, "SimConfig: bad SNR range");
  Require(duration_min_s > 0 && duration_max_s >= duration_min_s,
          "SimConfig: bad duration range");
  Require(array_radius > 0, "SimConfig: bad array radius");
  Require(max_order >= 0, "SimConfig: max_order must be >= 0");
}

std::vector<double> SynthSpeechLike(Rng& rng, int num_samples,
                                    int sample_rate, double f0_min,
                                    double f0_max) {
  std::vector<double> x(num_samples, 0.0);
  const double fs = sample_rate;

  double f0_base = rng.Uniform(f0_min, f0_max);
  int num_harmonics = std::max(3, static_cast<int>(3600.0 / f0_base));
  std::vector<double> timbre(num_harmonics);
  std::vector<double> phase(num_harmonics);
  for (int h = 0; h < num_harmonics; ++h) {
    // Formant-like envelope: mid band emphasized, rolloff at both ends.
    double freq = (h + 1) * f0_base;
    double env = freq / (freq + 250.0) / (1.0 + (freq / 1100.0) * (freq / 1100.0));
    timbre[h] = rng.Uniform(0.5, 1.3) * env;
    phase[h] = rng.Uniform(0.0, 2.0 * M_PI);
  }
  double lfo_rate = rng.Uniform(2.2, 4.5);
  double lfo_phase = rng.Uniform(0.0, 2.0 * M_PI);
  double vib_rate = rng.Uniform(4.0, 6.5);
  double vib_phase = rng.Uniform(0.0, 2.0 * M_PI);

  const int ramp = static_cast<int>(0.025 * fs);
  enum Seg { kVoiced, kFricative, kPause };
  Seg seg = rng.Uniform() < 0.75 ? kVoiced : kPause;
  int pos = 0;
  double drift = 0.0;
  double hp_state = 0.0;
  while (pos < num_samples) {
    int seg_len;
    switch (seg) {
      case kVoiced:
        seg_len = static_cast<int>(rng.Uniform(0.22, 0.5) * fs);
        break;
      case kFricative:
        seg_len = static_cast<int>(rng.Uniform(0.06, 0.18) * fs);
        break;
      default:
        seg_len = static_cast<int>(rng.Uniform(0.08, 0.22) * fs);
    }
    seg_len = std::min(seg_len, num_samples - pos);
    if (seg == kVoiced) {
      double target_drift = rng.Uniform(-0.06, 0.06);
      for (int i = 0; i < seg_len; ++i) {
        int n = pos + i;
        double tsec = n / fs;
        drift += (target_drift - drift) / (0.15 * fs);
        double vibrato = 0.015 * std::sin(2.0 * M_PI * vib_rate * tsec + vib_phase);
        double f0 = f0_base * (1.0 + drift + vibrato);
        double env = 0.85 + 0.15 * std::sin(2.0 * M_PI * lfo_rate * tsec + lfo_phase);
        if (i < ramp) env *= 0.5 * (1.0 - std::cos(M_PI * i / ramp));
        if (seg_len - 1 - i < ramp)
          env *= 0.5 * (1.0 - std::cos(M_PI * (seg_len - 1 - i) / ramp));
        double s = 0.0;
        for (int h = 0; h < num_harmonics; ++h) {
          double freq = (h + 1) * f0;
          if (freq > 0.48 * fs) break;
          phase[h] += 2.0 * M_PI * freq / fs;
          s += timbre[h] * std::sin(phase[h]);
        }
        // Aspiration keeps voiced stretches weakly broadband.
        double breath = rng.Normal();
        hp_state = breath - 0.95 * hp_state;
        x[n] = env * (s + 0.025 * hp_state);
      }
    } else if (seg == kFricative) {
      for (int i = 0; i < seg_len; ++i) {
        int n = pos + i;
        double env = 1.0;
        if (i < ramp) env *= 0.5 * (1.0 - std::cos(M_PI * i / ramp));
        if (seg_len - 1 - i < ramp)
          env *= 0.5 * (1.0 - std::cos(M_PI * (seg_len - 1 - i) / ramp));
        double noise = rng.Normal();
        hp_state = noise - 0.7 * hp_state;  // high-pass shaped hiss
        x[n] = env * 0.9 * hp_state;
      }
    } else {
      for (int i = 0; i < seg_len; ++i) x[pos + i] = 0.0004 * rng.Normal();
    }
    pos += seg_len;
    double u = rng.Uniform();
    switch (seg) {
      case kVoiced:
        seg = u < 0.55 ? kPause : (u < 0.85 ? kFricative : kVoiced);
        break;
      case kFricative:
        seg = u < 0.5 ? kVoiced : kPause;
        break;
      default:
        seg = u < 0.75 ? kVoiced : kFricative;
    }
  }

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.5 / peak;
  return x;
}

SceneSpec SampleScene(uint64_t seed, const SimConfig& config) {
  config.Validate();
  Rng rng(SplitSeed(seed, 0));

  SceneSpec scene;
  scene.seed = seed;
  scene.room.sample_rate = config.sample_rate;
  for (int i = 0; i < 3; ++i)
    scene.room.dimensions[i] = rng.Uniform(config.room_min[i], config.room_max[i]);
  scene.room.t60 = rng.Uniform(config.t60_min, config.t60_max);
  scene.snr_db = rng.Uniform(config.snr_min_db, config.snr_max_db);

  const Eigen::Vector3d& dims = scene.room.dimensions;
  double margin = config.wall_margin;
  double array_margin = margin + config.array_radius + 0.05;
  scene.array_center = Eigen::Vector3d(
      rng.Uniform(array_margin, dims.x() - array_margin),
      rng.Uniform(array_margin, dims.y() - array_margin),
      rng.Uniform(1.0, std::min(1.6, dims.z() - 0.7)));

  double mic_phase = rng.Uniform(0.0, 2.0 * M_PI);
  for (int d = 0; d < config.num_mics; ++d) {
    double angle = mic_phase + 2.0 * M_PI * d / config.num_mics;
    scene.mic_positions.push_back(
        scene.array_center +
        config.array_radius *
            Eigen::Vector3d(std::cos(angle), std::sin(angle), 0.0));
  }

  const int kMaxAttempts = 500;
  for (int k = 0; k < config.num_speakers; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      double azimuth = rng.Uniform(0.0, 2.0 * M_PI);
      double dist = rng.Uniform(config.source_dist_min, config.source_dist_max);
      double z = rng.Uniform(1.1, std::min(1.9, dims.z() - 0.5));
      Eigen::Vector3d pos =
          scene.array_center +
          dist * Eigen::Vector3d(std::cos(azimuth), std::sin(azimuth), 0.0);
      pos.z() = z;
      if (!InsideRoom(pos, dims, margin)) continue;
      bool separated = true;
      for (const auto& other : scene.source_positions) {
        if (AngleBetweenDeg(pos - scene.array_center,
                            other - scene.array_center) <
            config.min_angle_deg) {
          separated = false;
          break;
        }
      }
      if (!separated) continue;
      scene.source_positions.push_back(pos);
      placed = true;
    }
    Require(placed, "SampleScene: geometry constraints unsatisfiable");
  }

  int num_samples = static_cast<int>(
      rng.Uniform(config.duration_min_s, config.duration_max_s) *
      config.sample_rate);
  // Distinct voices per scene: each speaker draws its fundamental from its
  // own log-spaced band so concurrent talkers are spectrally tellable apart.
  const double f0_lo = 95.0, f0_hi = 280.0;
  const int K = config.num_speakers;
  std::vector<int> band(K);
  std::iota(band.begin(), band.end(), 0);
  for (size_t i = band.size(); i > 1; --i)
    std::swap(band[i - 1], band[rng.UniformInt(i)]);
  for (int k = 0; k < K; ++k) {
    double lo = f0_lo * std::pow(f0_hi / f0_lo, static_cast<double>(band[k]) / K);
    double hi = f0_lo * std::pow(f0_hi / f0_lo, (band[k] + 0.85) / K);
    std::vector<double> dry =
        config.source_dir.empty()
            ? SynthSpeechLike(rng, num_samples, config.sample_rate, lo, hi)
            : LoadDrySource(config.source_dir, rng, num_samples);
    AudioBuffer buf(1, num_samples, config.sample_rate);
    std::copy(dry.begin(), dry.end(), buf.channel(0));
    scene.dry_sources.push_back(std::move(buf));
  }
  return scene;
}

RoomImpulseResponse ImageMethodRir(const RoomSpec& room,
                                   const Eigen::Vector3d& source_pos,
                                   const Eigen::Vector3d& mic_pos,
                                   int max_order) {
  Require(max_order >= 0, "ImageMethodRir: max_order must be >= 0");
  for (int i = 0; i < 3; ++i) {
    Require(room.dimensions[i] > 1.0, "ImageMethodRir: room too small");
    Require(source_pos[i] > 0 && source_pos[i] < room.dimensions[i],
            "ImageMethodRir: source outside room");
    Require(mic_pos[i] > 0 && mic_pos[i] < room.dimensions[i],
            "ImageMethodRir: mic outside room");
  }
  Require((source_pos - mic_pos).norm() > 1e-6,
          "ImageMethodRir: source and mic coincide");

  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;
  const double beta = ReflectionCoefficient(room);
  const Eigen::Vector3d& L = room.dimensions;

  double direct_delay = (source_pos - mic_pos).norm() / c * fs;
  int num_taps = static_cast<int>(std::ceil(room.t60 * fs * 1.2));
  num_taps = std::max(num_taps,
                      static_cast<int>(direct_delay) + kFracKernelTaps + 2);

  RoomImpulseResponse rir;
  rir.sample_rate = room.sample_rate;
  rir.taps.assign(num_taps, 0.0);

  // Lattice bound: images beyond the RIR tail cannot contribute.
  double max_dist_m = (num_taps + kFracKernelHalf) / fs * c;
  int lattice = static_cast<int>(max_order / 2) + 1;
  std::array<int, 3> n_max;
  for (int i = 0; i < 3; ++i) {
    n_max[i] = std::min<int>(lattice,
                             static_cast<int>(max_dist_m / (2.0 * L[i])) + 1);
  }

  double kernel[kFracKernelTaps];
  for (int mx = -n_max[0]; mx <= n_max[0]; ++mx) {
    for (int my = -n_max[1]; my <= n_max[1]; ++my) {
      for (int mz = -n_max[2]; mz <= n_max[2]; ++mz) {
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int p = 0; p <= 1; ++p) {
              int order = std::abs(2 * mx - q) + std::abs(2 * my - j) +
                          std::abs(2 * mz - p);
              if (order > max_order) continue;
              Eigen::Vector3d image(
                  (1 - 2 * q) * source_pos.x() + 2 * mx * L.x(),
                  (1 - 2 * j) * source_pos.y() + 2 * my * L.y(),
                  (1 - 2 * p) * source_pos.z() + 2 * mz * L.z());
              double dist = (image - mic_pos).norm();
              double delay = dist / c * fs;
              int reflections = std::abs(2 * mx - q) + std::abs(mx) +
                                std::abs(2 * my - j) + std::abs(my) +
                                std::abs(2 * mz - p) + std::abs(mz);
              double gain = std::pow(beta, reflections) / (4.0 * M_PI * dist);

              int idx0 = static_cast<int>(std::floor(delay));
              double frac = delay - idx0;
              if (idx0 - kFracKernelHalf >= num_taps) continue;
              FracDelayKernel(frac, kernel);
              for (int n = 0; n < kFracKernelTaps; ++n) {
                int idx = idx0 - kFracKernelHalf + n;
                if (idx >= 0 && idx < num_taps)
                  rir.taps[idx] += gain * kernel[n];
              }
            }
          }
        }
      }
    }
  }
  return rir;
}

MixtureScene RenderScene(const SceneSpec& scene, int max_order) {
  const int K = static_cast<int>(scene.dry_sources.size());
  const int D = static_cast<int>(scene.mic_positions.size());
  Require(K >= 1 && D >= 1, "RenderScene: empty scene");
  Require(scene.source_positions.size() == static_cast<size_t>(K),
          "RenderScene: source count mismatch");

  int dry_len = 0;
  for (const auto& s : scene.dry_sources) {
    Require(s.sample_rate == scene.room.sample_rate,
            "RenderScene: sample rate mismatch");
    double energy = 0.0;
    for (int i = 0; i < s.num_samples; ++i) energy += s.at(0, i) * s.at(0, i);
    Require(energy > 1e-12, "RenderScene: silent dry source");
    dry_len = std::max(dry_len, s.num_samples);
  }

  int rir_len = 0;
  std::vector<std::vector<RoomImpulseResponse>> rirs(K);
  for (int k = 0; k < K; ++k) {
    rirs[k].reserve(D);
    for (int d = 0; d < D; ++d) {
      rirs[k].push_back(ImageMethodRir(scene.room, scene.source_positions[k],
                                       scene.mic_positions[d], max_order));
      rir_len = std::max(rir_len, static_cast<int>(rirs[k][d].taps.size()));
    }
  }
  const int out_len = dry_len + rir_len - 1;

  MixtureScene mix;
  mix.metadata = scene;
  mix.observation = AudioBuffer(D, out_len, scene.room.sample_rate);

  double signal_energy = 0.0;
  for (int k = 0; k < K; ++k) {
    AudioBuffer image(D, out_len, scene.room.sample_rate);
    std::vector<double> dry(dry_len, 0.0);
    for (int i = 0; i < scene.dry_sources[k].num_samples; ++i)
      dry[i] = scene.dry_sources[k].at(0, i);
    for (int d = 0; d < D; ++d) {
      std::vector<double> conv = FftConvolve(dry, rirs[k][d].taps);
      for (size_t i = 0; i < conv.size() && i < static_cast<size_t>(out_len); ++i)
        image.at(d, static_cast<int>(i)) = conv[i];
      for (int i = 0; i < out_len; ++i) signal_energy += image.at(d, i) * image.at(d, i);
    }
    mix.source_images.push_back(std::move(image));
  }

  Rng noise_rng(SplitSeed(scene.seed, 0x6e6f6973));
  mix.noise_image = AudioBuffer(D, out_len, scene.room.sample_rate);
  double noise_energy = 0.0;
  for (int d = 0; d < D; ++d) {
    for (int i = 0; i < out_len; ++i) {
      double v = noise_rng.Normal();
      mix.noise_image.at(d, i) = v;
      noise_energy += v * v;
    }
  }
  Require(noise_energy > 0, "RenderScene: degenerate noise draw");
  double scale = std::sqrt(signal_energy / noise_energy *
                           std::pow(10.0, -scene.snr_db / 10.0));
  for (double& v : mix.noise_image.samples) v *= scale;

  for (int d = 0; d < D; ++d) {
    for (int i = 0; i < out_len; ++i) {
      double acc = mix.noise_image.at(d, i);
      for (int k = 0; k < K; ++k) acc += mix.source_images[k].at(d, i);
      mix.observation.at(d, i) = acc;
    }
  }
  return mix;
}

}  // namespace bss
