// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_PIPELINE_H_
#define BSS_PIPELINE_H_

#include <optional>
#include <string>
#include <vector>

#include "bss/dc_student.h"
#include "bss/metrics.h"
#include "bss/mixsim.h"
#include "bss/stft.h"

namespace bss {

struct SceneEntry {
  std::string id;
  uint64_t seed = 0;
  std::string observation;
  std::vector<std::string> images;
  std::string noise;
  double t60 = 0.0;
  double snr_db = 0.0;
  std::vector<double> room;
  std::vector<double> array_center;
  std::vector<std::vector<double>> mics;
  std::vector<std::vector<double>> sources;
};

struct Manifest {
  int sample_rate = 8000;
  int num_mics = 0;
  int num_speakers = 0;
  std::vector<SceneEntry> scenes;
  std::string dir;  // directory holding the manifest and scene files
};

Manifest ReadManifest(const std::string& path);
void WriteManifest(const Manifest& manifest, const std::string& path);

SimConfig SimConfigFromJson(const std::string& json_text);

struct SimulateOptions {
  SimConfig config;
  int count = 1;
  uint64_t seed = 0;
  int workers = 1;
};

Manifest RunSimulate(const SimulateOptions& opts, const std::string& out_dir);

struct StageFailure {
  std::string id;
  std::string error;
};

struct TeachOptions {
  int classes = 3;
  int iterations = 100;
  uint64_t seed = 0;
  StftConfig stft;
  int workers = 1;
  bool dump_pgm = false;
};

struct TeachResult {
  int processed = 0;
  std::vector<StageFailure> failures;
};

// Fit the spatial teacher on one observation and align the class labels
// across frequency.
MaskSet TeachOne(const AudioBuffer& observation, const TeachOptions& opts);

TeachResult RunTeach(const Manifest& manifest, const TeachOptions& opts,
                     const std::string& out_dir);

void SaveMasks(const MaskSet& masks, const std::string& path);
MaskSet LoadMasks(const std::string& path);
void DumpMaskPgm(const MaskSet& masks, const std::string& prefix);

struct TrainOptions {
  int embed_dim = 20;
  int hidden = 256;
  int context = 5;
  TrainConfig train;
  StftConfig stft;
};

// Build the training corpus from observations and teacher masks, train the
// student, and serialize it to net_path (+ .json descriptor).
StudentNet RunTrain(const Manifest& manifest, const std::string& masks_dir,
                    const TrainOptions& opts, const std::string& net_path,
                    TrainLog* log);

enum class PredictMode { kTeacherOnly, kStudentKmeans, kStudentInitCacgmm };
enum class ExtractMode { kMask, kMvdr };

PredictMode PredictModeFromString(const std::string& s);
ExtractMode ExtractModeFromString(const std::string& s);

struct SeparateOptions {
  PredictMode mode = PredictMode::kTeacherOnly;
  ExtractMode extract = ExtractMode::kMvdr;
  StftConfig stft;
  std::string masks_dir;  // teacher-only mode
  std::string net_path;   // student modes
  int refit_iterations = 50;
  int kmeans_restarts = 10;
  uint64_t seed = 0;
  int workers = 1;
  int mask_ref_channel = 0;
};

struct SeparateResult {
  int processed = 0;
  std::vector<StageFailure> failures;
};

SeparateResult RunSeparate(const Manifest& manifest,
                           const SeparateOptions& opts,
                           const std::string& out_dir);

// Stages executed for one scene, as recorded in <id>.meta.json.
std::vector<std::string> ReadStageLog(const std::string& est_dir,
                                      const std::string& id);

struct EvaluateOptions {
  ExtractMode mode = ExtractMode::kMvdr;
  StftConfig stft;
  int workers = 1;
};

EvalReport RunEvaluate(const Manifest& manifest, const std::string& est_dir,
                       const EvaluateOptions& opts);

void WriteReport(const EvalReport& report, const std::string& path);

struct PipelineOptions {
  SimConfig sim;
  int train_count = 220;
  int test_count = 25;
  uint64_t sim_seed = 1;
  StftConfig stft;
  TeachOptions teacher;
  TrainOptions student;
  SeparateOptions predict;
  int workers = 1;
};

PipelineOptions PipelineOptionsFromJson(const std::string& json_text);

struct PipelineSummary {
  EvalReport report;
  std::string report_path;
};

PipelineSummary RunPipeline(const PipelineOptions& opts,
                            const std::string& out_dir);

}  // namespace bss

#endif  // BSS_PIPELINE_H_
