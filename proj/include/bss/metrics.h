// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_METRICS_H_
#define BSS_METRICS_H_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bss/beamform.h"
#include "bss/stft.h"

namespace bss {

constexpr double kSdrCapDb = 100.0;

// Power ratio of a mask applied to the target image versus the same mask
// applied to the summed interference images plus noise, at one reference
// channel. Returns nullopt for a silent target image.
std::optional<double> InvasiveSdrMask(
    const Eigen::MatrixXd& mask, const std::vector<MultichannelStft>& images,
    const MultichannelStft& noise, int target, int ref);

// Beamformer variant of the invasive SDR; nullopt for a zero beamformer.
std::optional<double> InvasiveSdrBf(const Eigen::MatrixXcd& w_per_f,
                                    const std::vector<MultichannelStft>& images,
                                    const MultichannelStft& noise, int target);

// Input SDR of the unprocessed observation at one channel.
double InputSdr(const std::vector<MultichannelStft>& images,
                const MultichannelStft& noise, int target, int ref);

struct PermutationChoice {
  std::vector<int> assignment;  // row i (speaker) -> column (class)
  double total = 0.0;
};

// Exhaustive best assignment for a square score matrix, K <= 4.
PermutationChoice BestPermutation(const Eigen::MatrixXd& sdr_matrix);

double SiSdr(const std::vector<double>& estimate,
             const std::vector<double>& reference);

struct SpeakerEval {
  int speaker = 0;
  int assigned_class = 0;
  double input_sdr = 0.0;
  double output_sdr = 0.0;
  double gain = 0.0;
  double si_sdr = 0.0;
};

struct MixtureEval {
  std::string id;
  bool excluded = false;
  std::string exclude_reason;
  std::vector<SpeakerEval> speakers;
  double mean_gain = 0.0;
};

struct EvalReport {
  std::string mode;  // "mask" or "mvdr"
  std::vector<MixtureEval> mixtures;
  std::vector<std::string> missing;  // scenes without estimates
  double mean_input_sdr = 0.0;
  double mean_output_sdr = 0.0;
  double mean_gain = 0.0;
  double std_gain = 0.0;
  double mean_si_sdr = 0.0;
  int num_evaluated = 0;
};

// Aggregate per-mixture gains into the report means/stds.
void FinalizeReport(EvalReport* report);

// Full-corpus evaluation lives in pipeline.h (needs manifest I/O).

}  // namespace bss

#endif  // BSS_METRICS_H_
