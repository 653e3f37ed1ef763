// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Blind source separation pipeline driver. Subcommands cover the full
// unsupervised student-teacher loop: simulate reverberant mixtures, fit the
// spatial teacher, align its masks, train the embedding student, separate by
// masking or MVDR beamforming, and evaluate against the simulated images.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bss/parallel.h"
#include "bss/permalign.h"
#include "bss/pipeline.h"

namespace fs = std::filesystem;
using namespace bss;

namespace {

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int ReportFailures(const std::vector<StageFailure>& failures, int processed,
                   const char* stage) {
  for (const auto& f : failures)
    std::cerr << stage << " failed for " << f.id << ": " << f.error << "\n";
  std::cerr << stage << ": " << processed << " scenes processed, "
            << failures.size() << " failed\n";
  return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised student-teacher source separation pipeline"};
  app.require_subcommand(1);

  int workers = std::min(DefaultWorkers(), 4);
  app.add_option("--workers", workers, "Worker threads for parallel stages");

  StftConfig stft;
  app.add_option("--dft-size", stft.dft_size, "STFT DFT size")
      ->capture_default_str();
  app.add_option("--shift", stft.shift, "STFT shift in samples")
      ->capture_default_str();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Render mixture scenes");
  std::string sim_config_path, sim_out;
  int sim_count = 10;
  uint64_t sim_seed = 0;
  sim_cmd->add_option("--config", sim_config_path,
                      "JSON file with simulation ranges");
  sim_cmd->add_option("--out", sim_out, "Output corpus directory")->required();
  sim_cmd->add_option("--count", sim_count, "Number of scenes");
  sim_cmd->add_option("--seed", sim_seed, "Base seed");

  // teach
  auto* teach_cmd =
      app.add_subcommand("teach", "Fit the spatial teacher and emit masks");
  std::string teach_manifest, teach_out_dir, teach_in, teach_out;
  int teach_classes = 3, teach_iters = 100;
  uint64_t teach_seed = 0;
  bool teach_pgm = false;
  teach_cmd->add_option("--manifest", teach_manifest, "Corpus manifest JSON");
  teach_cmd->add_option("--out-dir", teach_out_dir, "Mask output directory");
  teach_cmd->add_option("--in", teach_in, "Single multichannel WAV input");
  teach_cmd->add_option("--out", teach_out, "Single mask tensor output");
  teach_cmd->add_option("--classes", teach_classes, "Number of classes")
      ->capture_default_str();
  teach_cmd->add_option("--iters", teach_iters, "EM iterations")
      ->capture_default_str();
  teach_cmd->add_option("--seed", teach_seed, "Init seed");
  teach_cmd->add_flag("--dump-pgm", teach_pgm, "Write per-class PGM images");

  // align
  auto* align_cmd =
      app.add_subcommand("align", "Align mask classes across frequency");
  std::string align_in, align_out;
  align_cmd->add_option("--in", align_in, "Input mask tensor")->required();
  align_cmd->add_option("--out", align_out, "Output mask tensor")->required();

  // train
  auto* train_cmd =
      app.add_subcommand("train", "Train the embedding student from masks");
  std::string train_manifest, train_masks_dir, train_out;
  TrainOptions train_opts;
  train_cmd->add_option("--manifest", train_manifest, "Corpus manifest JSON")
      ->required();
  train_cmd->add_option("--masks-dir", train_masks_dir, "Teacher mask dir")
      ->required();
  train_cmd->add_option("--out", train_out, "Output net tensor")->required();
  train_cmd->add_option("--embed-dim", train_opts.embed_dim, "Embedding size")
      ->capture_default_str();
  train_cmd->add_option("--hidden", train_opts.hidden, "Hidden width")
      ->capture_default_str();
  train_cmd->add_option("--context", train_opts.context, "Context frames")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_opts.train.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd->add_option("--batch", train_opts.train.batch_size, "Batch size")
      ->capture_default_str();
  train_cmd->add_option("--max-steps", train_opts.train.max_steps, "Step cap")
      ->capture_default_str();
  train_cmd->add_option("--patience", train_opts.train.patience,
                        "Early stop patience in evaluations")
      ->capture_default_str();
  train_cmd->add_option("--val-fraction", train_opts.train.validation_fraction,
                        "Validation fraction")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opts.train.seed, "Training seed");

  // separate
  auto* sep_cmd = app.add_subcommand(
      "separate", "Predict masks and extract per-class signals");
  std::string sep_manifest, sep_out, sep_mode = "teacher-only",
                                     sep_extract = "mvdr";
  SeparateOptions sep_opts;
  sep_cmd->add_option("--manifest", sep_manifest, "Corpus manifest JSON")
      ->required();
  sep_cmd->add_option("--out-dir", sep_out, "Estimate output directory")
      ->required();
  sep_cmd->add_option("--mode", sep_mode,
                      "teacher-only | student-kmeans | student-init-cacgmm")
      ->capture_default_str();
  sep_cmd->add_option("--extract", sep_extract, "mask | mvdr")
      ->capture_default_str();
  sep_cmd->add_option("--masks-dir", sep_opts.masks_dir,
                      "Teacher mask dir (teacher-only mode)");
  sep_cmd->add_option("--net", sep_opts.net_path, "Student net tensor");
  sep_cmd->add_option("--refit-iters", sep_opts.refit_iterations,
                      "cACGMM refit iterations (student-init mode)")
      ->capture_default_str();
  sep_cmd->add_option("--kmeans-restarts", sep_opts.kmeans_restarts,
                      "k-means restarts")
      ->capture_default_str();
  sep_cmd->add_option("--seed", sep_opts.seed, "Prediction seed");
  sep_cmd->add_option("--mask-ref", sep_opts.mask_ref_channel,
                      "Reference channel for mask extraction")
      ->capture_default_str();

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Invasive SDR evaluation from images");
  std::string eval_manifest, eval_est_dir, eval_out, eval_mode = "mvdr";
  eval_cmd->add_option("--manifest", eval_manifest, "Corpus manifest JSON")
      ->required();
  eval_cmd->add_option("--est-dir", eval_est_dir, "Estimate directory")
      ->required();
  eval_cmd->add_option("--mode", eval_mode, "mask | mvdr")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Report JSON path")->required();

  // pipeline
  auto* pipe_cmd =
      app.add_subcommand("pipeline", "Run the full loop from a config file");
  std::string pipe_config, pipe_out;
  pipe_cmd->add_option("--config", pipe_config, "Pipeline config JSON")
      ->required();
  pipe_cmd->add_option("--out", pipe_out, "Working directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    stft.Validate();

    if (sim_cmd->parsed()) {
      SimulateOptions opts;
      if (!sim_config_path.empty())
        opts.config = SimConfigFromJson(ReadTextFile(sim_config_path));
      opts.count = sim_count;
      opts.seed = sim_seed;
      opts.workers = workers;
      Manifest m = RunSimulate(opts, sim_out);
      std::cerr << "simulate: wrote " << m.scenes.size() << " scenes to "
                << sim_out << "\n";
      return 0;
    }

    if (teach_cmd->parsed()) {
      TeachOptions opts;
      opts.classes = teach_classes;
      opts.iterations = teach_iters;
      opts.seed = teach_seed;
      opts.stft = stft;
      opts.workers = workers;
      opts.dump_pgm = teach_pgm;
      if (!teach_in.empty()) {
        Require(!teach_out.empty(), "teach: --in requires --out");
        MaskSet masks = TeachOne(ReadWav(teach_in), opts);
        SaveMasks(masks, teach_out);
        if (teach_pgm)
          DumpMaskPgm(masks, fs::path(teach_out).replace_extension().string());
        std::cerr << "teach: wrote " << teach_out << "\n";
        return 0;
      }
      Require(!teach_manifest.empty() && !teach_out_dir.empty(),
              "teach: need --manifest and --out-dir (or --in/--out)");
      Manifest m = ReadManifest(teach_manifest);
      TeachResult res = RunTeach(m, opts, teach_out_dir);
      return ReportFailures(res.failures, res.processed, "teach");
    }

    if (align_cmd->parsed()) {
      MaskSet masks = LoadMasks(align_in);
      AlignResult res = Align(masks);
      SaveMasks(res.masks, align_out);
      std::cerr << "align: wrote " << align_out << "\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      train_opts.stft = stft;
      train_opts.train.workers = workers;
      Manifest m = ReadManifest(train_manifest);
      TrainLog log;
      RunTrain(m, train_masks_dir, train_opts, train_out, &log);
      std::cerr << "train: " << log.steps_run << " steps, best val loss "
                << log.best_val << ", wrote " << train_out << "\n";
      return 0;
    }

    if (sep_cmd->parsed()) {
      sep_opts.mode = PredictModeFromString(sep_mode);
      sep_opts.extract = ExtractModeFromString(sep_extract);
      sep_opts.stft = stft;
      sep_opts.workers = workers;
      Manifest m = ReadManifest(sep_manifest);
      SeparateResult res = RunSeparate(m, sep_opts, sep_out);
      return ReportFailures(res.failures, res.processed, "separate");
    }

    if (eval_cmd->parsed()) {
      EvaluateOptions opts;
      opts.mode = ExtractModeFromString(eval_mode);
      opts.stft = stft;
      opts.workers = workers;
      Manifest m = ReadManifest(eval_manifest);
      EvalReport report = RunEvaluate(m, eval_est_dir, opts);
      WriteReport(report, eval_out);
      std::cerr << "evaluate: mean gain " << report.mean_gain << " dB over "
                << report.num_evaluated << " mixtures, wrote " << eval_out
                << "\n";
      return report.missing.empty() ? 0 : 1;
    }

    if (pipe_cmd->parsed()) {
      PipelineOptions opts = PipelineOptionsFromJson(ReadTextFile(pipe_config));
      opts.stft = stft;
      opts.workers = workers;
      PipelineSummary summary = RunPipeline(opts, pipe_out);
      std::cerr << "pipeline: mean gain " << summary.report.mean_gain
                << " dB, report at " << summary.report_path << "\n";
      return summary.report.missing.empty() ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
