// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bss/pipeline.h"

using namespace bss;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "bss_cli_test";

int RunCli(const std::string& args) {
  std::string cmd = std::string(BSS_CLI_PATH) + " " + args + " 2>>" +
                    (kWork / "cli.log").string();
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("cli end-to-end smoke") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  std::string work = kWork.string();

  // Simulation config with small scenes.
  {
    std::ofstream cfg(kWork / "sim.json");
    cfg << R"({"duration_min_s": 1.1, "duration_max_s": 1.3, "max_order": 4})";
  }

  REQUIRE(RunCli("simulate --config " + work + "/sim.json --out " + work +
                 "/corpus --count 4 --seed 5") == 0);
  REQUIRE(fs::exists(kWork / "corpus" / "manifest.json"));

  REQUIRE(RunCli("teach --manifest " + work + "/corpus/manifest.json --iters 15"
                 " --out-dir " + work + "/masks --seed 3 --dump-pgm") == 0);
  REQUIRE(fs::exists(kWork / "masks" / "scene_0000.masks.tensor"));
  CHECK(fs::exists(kWork / "masks" / "scene_0000_class0.pgm"));

  // Single-file teach.
  REQUIRE(RunCli("teach --in " + work + "/corpus/scene_0000_obs.wav --iters 5"
                 " --out " + work + "/single.masks.tensor") == 0);
  CHECK(fs::exists(kWork / "single.masks.tensor"));

  // Standalone alignment on the emitted tensor.
  REQUIRE(RunCli("align --in " + work + "/masks/scene_0000.masks.tensor --out " +
                 work + "/aligned.tensor") == 0);
  CHECK(fs::exists(kWork / "aligned.tensor"));

  REQUIRE(RunCli("train --manifest " + work + "/corpus/manifest.json"
                 " --masks-dir " + work + "/masks --out " + work +
                 "/net.tensor --embed-dim 6 --hidden 16 --context 3"
                 " --max-steps 20 --batch 2 --val-fraction 0.25 --lr 1.0") == 0);
  REQUIRE(fs::exists(kWork / "net.tensor"));

  REQUIRE(RunCli("separate --manifest " + work + "/corpus/manifest.json"
                 " --out-dir " + work + "/est --mode student-init-cacgmm"
                 " --extract mvdr --net " + work + "/net.tensor"
                 " --refit-iters 5 --kmeans-restarts 2 --seed 1") == 0);
  REQUIRE(fs::exists(kWork / "est" / "scene_0000.est0.wav"));
  REQUIRE(fs::exists(kWork / "est" / "scene_0000.bf.tensor"));

  REQUIRE(RunCli("evaluate --manifest " + work + "/corpus/manifest.json"
                 " --est-dir " + work + "/est --mode mvdr --out " + work +
                 "/report.json") == 0);
  std::ifstream in(kWork / "report.json");
  REQUIRE(in.good());
  nlohmann::json report = nlohmann::json::parse(in);
  CHECK(report.at("aggregate").at("num_evaluated") == 4);
  CHECK(report.at("mixtures").size() == 4);

  // A corrupt corpus entry produces a nonzero exit but the others complete.
  fs::resize_file(kWork / "corpus" / "scene_0002_obs.wav", 64);
  CHECK(RunCli("teach --manifest " + work + "/corpus/manifest.json --iters 5"
               " --out-dir " + work + "/masks2") != 0);
  CHECK(fs::exists(kWork / "masks2" / "scene_0000.masks.tensor"));
  CHECK(!fs::exists(kWork / "masks2" / "scene_0002.masks.tensor"));

  // Unknown mode is rejected.
  CHECK(RunCli("separate --manifest " + work + "/corpus/manifest.json"
               " --out-dir " + work + "/x --mode nonsense") != 0);

  fs::remove_all(kWork);
}

TEST_CASE("cli pipeline subcommand runs the whole loop") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  std::string work = kWork.string();
  {
    std::ofstream cfg(kWork / "pipe.json");
    cfg << R"({
      "simulate": {"duration_min_s": 1.1, "duration_max_s": 1.3, "max_order": 4},
      "train_count": 5,
      "test_count": 2,
      "sim_seed": 9,
      "teacher": {"classes": 3, "iterations": 12, "seed": 1},
      "student": {"embed_dim": 6, "hidden": 16, "context": 3,
                  "train": {"learning_rate": 1.0, "batch_size": 2,
                             "max_steps": 25, "patience": 5,
                             "validation_fraction": 0.2, "seed": 2}},
      "predict": {"mode": "student-init-cacgmm", "refit_iterations": 8,
                   "kmeans_restarts": 2, "seed": 3},
      "extract": "mvdr"
    })";
  }
  REQUIRE(RunCli("pipeline --config " + work + "/pipe.json --out " + work +
                 "/run") == 0);
  std::ifstream in(kWork / "run" / "report.json");
  REQUIRE(in.good());
  nlohmann::json report = nlohmann::json::parse(in);
  CHECK(report.at("aggregate").at("num_evaluated") == 2);
  CHECK(report.at("mode") == "mvdr");
  fs::remove_all(kWork);
}
