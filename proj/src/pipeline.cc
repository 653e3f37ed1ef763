// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/pipeline.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bss/beamform.h"
#include "bss/cacgmm.h"
#include "bss/clustering.h"
#include "bss/parallel.h"
#include "bss/permalign.h"
#include "bss/rng.h"
#include "bss/tensor_file.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bss {

namespace {

std::string ScenePath(const Manifest& manifest, const std::string& rel) {
  return (fs::path(manifest.dir) / rel).string();
}

void AtomicWriteText(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    Require(out.good(), "cannot open " + tmp);
    out << text;
  }
  fs::rename(tmp, path);
}

json LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), "cannot open " + path);
  return json::parse(in);
}

std::string EstBase(const std::string& est_dir, const std::string& id) {
  return (fs::path(est_dir) / id).string();
}

}  // namespace

Manifest ReadManifest(const std::string& path) {
  json j = LoadJsonFile(path);
  Manifest m;
  m.sample_rate = j.at("sample_rate");
  m.num_mics = j.at("num_mics");
  m.num_speakers = j.at("num_speakers");
  m.dir = fs::path(path).parent_path().string();
  if (m.dir.empty()) m.dir = ".";
  for (const auto& s : j.at("scenes")) {
    SceneEntry e;
    e.id = s.at("id");
    e.seed = s.at("seed");
    e.observation = s.at("observation");
    e.images = s.at("images").get<std::vector<std::string>>();
    e.noise = s.at("noise");
    e.t60 = s.at("t60");
    e.snr_db = s.at("snr_db");
    e.room = s.at("room").get<std::vector<double>>();
    e.array_center = s.at("array_center").get<std::vector<double>>();
    e.mics = s.at("mics").get<std::vector<std::vector<double>>>();
    e.sources = s.at("sources").get<std::vector<std::vector<double>>>();
    m.scenes.push_back(std::move(e));
  }
  return m;
}

void WriteManifest(const Manifest& manifest, const std::string& path) {
  json j;
  j["sample_rate"] = manifest.sample_rate;
  j["num_mics"] = manifest.num_mics;
  j["num_speakers"] = manifest.num_speakers;
  j["scenes"] = json::array();
  for (const auto& e : manifest.scenes) {
    json s;
    s["id"] = e.id;
    s["seed"] = e.seed;
    s["observation"] = e.observation;
    s["images"] = e.images;
    s["noise"] = e.noise;
    s["t60"] = e.t60;
    s["snr_db"] = e.snr_db;
    s["room"] = e.room;
    s["array_center"] = e.array_center;
    s["mics"] = e.mics;
    s["sources"] = e.sources;
    j["scenes"].push_back(std::move(s));
  }
  AtomicWriteText(path, j.dump(2) + "\n");
}

SimConfig SimConfigFromJson(const std::string& json_text) {
  json j = json::parse(json_text);
  SimConfig cfg;
  cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
  cfg.num_mics = j.value("num_mics", cfg.num_mics);
  cfg.num_speakers = j.value("num_speakers", cfg.num_speakers);
  if (j.contains("room_min")) {
    auto v = j.at("room_min").get<std::vector<double>>();
    Require(v.size() == 3, "SimConfig: room_min needs 3 entries");
    cfg.room_min = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  if (j.contains("room_max")) {
    auto v = j.at("room_max").get<std::vector<double>>();
    Require(v.size() == 3, "SimConfig: room_max needs 3 entries");
    cfg.room_max = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  cfg.t60_min = j.value("t60_min", cfg.t60_min);
  cfg.t60_max = j.value("t60_max", cfg.t60_max);
  cfg.snr_min_db = j.value("snr_min_db", cfg.snr_min_db);
  cfg.snr_max_db = j.value("snr_max_db", cfg.snr_max_db);
  cfg.array_radius = j.value("array_radius", cfg.array_radius);
  cfg.min_angle_deg = j.value("min_angle_deg", cfg.min_angle_deg);
  cfg.duration_min_s = j.value("duration_min_s", cfg.duration_min_s);
  cfg.duration_max_s = j.value("duration_max_s", cfg.duration_max_s);
  cfg.source_dist_min = j.value("source_dist_min", cfg.source_dist_min);
  cfg.source_dist_max = j.value("source_dist_max", cfg.source_dist_max);
  cfg.wall_margin = j.value("wall_margin", cfg.wall_margin);
  cfg.max_order = j.value("max_order", cfg.max_order);
  cfg.source_dir = j.value("source_dir", cfg.source_dir);
  cfg.Validate();
  return cfg;
}

Manifest RunSimulate(const SimulateOptions& opts, const std::string& out_dir) {
  opts.config.Validate();
  Require(opts.count >= 1, "RunSimulate: count must be positive");
  fs::create_directories(out_dir);

  Manifest manifest;
  manifest.sample_rate = opts.config.sample_rate;
  manifest.num_mics = opts.config.num_mics;
  manifest.num_speakers = opts.config.num_speakers;
  manifest.dir = out_dir;
  manifest.scenes.resize(opts.count);

  ParallelFor(opts.count, opts.workers, [&](size_t i) {
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%04zu", i);
    uint64_t scene_seed = SplitSeed(opts.seed, i);
    SceneSpec scene = SampleScene(scene_seed, opts.config);
    MixtureScene mix = RenderScene(scene, opts.config.max_order);

    SceneEntry e;
    e.id = id;
    e.seed = scene_seed;
    e.observation = std::string(id) + "_obs.wav";
    e.noise = std::string(id) + "_noise.wav";
    WriteWav(mix.observation, (fs::path(out_dir) / e.observation).string());
    WriteWav(mix.noise_image, (fs::path(out_dir) / e.noise).string());
    for (size_t k = 0; k < mix.source_images.size(); ++k) {
      std::string name = std::string(id) + "_img" + std::to_string(k) + ".wav";
      WriteWav(mix.source_images[k], (fs::path(out_dir) / name).string());
      e.images.push_back(name);
    }
    e.t60 = scene.room.t60;
    e.snr_db = scene.snr_db;
    e.room = {scene.room.dimensions.x(), scene.room.dimensions.y(),
              scene.room.dimensions.z()};
    e.array_center = {scene.array_center.x(), scene.array_center.y(),
                      scene.array_center.z()};
    for (const auto& p : scene.mic_positions)
      e.mics.push_back({p.x(), p.y(), p.z()});
    for (const auto& p : scene.source_positions)
      e.sources.push_back({p.x(), p.y(), p.z()});
    manifest.scenes[i] = std::move(e);
  });

  WriteManifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

MaskSet TeachOne(const AudioBuffer& observation, const TeachOptions& opts) {
  MultichannelStft y = Stft(observation, opts.stft);
  EmResult em = EmFit(y, opts.classes, std::nullopt, opts.iterations,
                      opts.seed, opts.workers);
  AlignResult aligned = Align(em.masks);
  return aligned.masks;
}

void SaveMasks(const MaskSet& masks, const std::string& path) {
  std::vector<uint64_t> dims = {static_cast<uint64_t>(masks.K),
                                static_cast<uint64_t>(masks.T),
                                static_cast<uint64_t>(masks.F)};
  WriteRealTensor(path, dims, masks.m);
}

MaskSet LoadMasks(const std::string& path) {
  TensorFile t = ReadTensor(path);
  Require(t.dims.size() == 3, "LoadMasks: tensor must be K x T x F");
  MaskSet masks(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                static_cast<int>(t.dims[2]));
  std::vector<double> values = RealValues(t);
  masks.m = std::move(values);
  // Snap float32 rounding back onto the simplex.
  for (int t_i = 0; t_i < masks.T; ++t_i)
    for (int f = 0; f < masks.F; ++f) {
      double sum = 0.0;
      for (int k = 0; k < masks.K; ++k) sum += masks.at(k, t_i, f);
      if (sum > 0.0)
        for (int k = 0; k < masks.K; ++k) masks.at(k, t_i, f) /= sum;
    }
  return masks;
}

void DumpMaskPgm(const MaskSet& masks, const std::string& prefix) {
  for (int k = 0; k < masks.K; ++k) {
    std::string path = prefix + "_class" + std::to_string(k) + ".pgm";
    std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      Require(out.good(), "DumpMaskPgm: cannot open " + tmp);
      out << "P5\n" << masks.T << " " << masks.F << "\n255\n";
      // Row 0 is the highest frequency bin so the image reads like a
      // spectrogram.
      for (int f = masks.F - 1; f >= 0; --f)
        for (int t = 0; t < masks.T; ++t) {
          double v = std::clamp(masks.at(k, t, f), 0.0, 1.0);
          out.put(static_cast<char>(std::lround(v * 255.0)));
        }
    }
    fs::rename(tmp, path);
  }
}

TeachResult RunTeach(const Manifest& manifest, const TeachOptions& opts,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  TeachResult result;
  std::vector<std::optional<StageFailure>> failures(manifest.scenes.size());
  std::vector<int> ok(manifest.scenes.size(), 0);

  // Scenes run sequentially; the EM itself parallelizes over bins.
  for (size_t i = 0; i < manifest.scenes.size(); ++i) {
    const SceneEntry& e = manifest.scenes[i];
    try {
      TeachOptions scene_opts = opts;
      scene_opts.seed = SplitSeed(opts.seed, i);
      AudioBuffer obs = ReadWav(ScenePath(manifest, e.observation));
      MaskSet masks = TeachOne(obs, scene_opts);
      SaveMasks(masks, EstBase(out_dir, e.id) + ".masks.tensor");
      if (opts.dump_pgm) DumpMaskPgm(masks, EstBase(out_dir, e.id));
      ok[i] = 1;
    } catch (const std::exception& ex) {
      failures[i] = StageFailure{e.id, ex.what()};
    }
  }
  for (size_t i = 0; i < manifest.scenes.size(); ++i) {
    result.processed += ok[i];
    if (failures[i].has_value()) result.failures.push_back(*failures[i]);
  }
  return result;
}

StudentNet RunTrain(const Manifest& manifest, const std::string& masks_dir,
                    const TrainOptions& opts, const std::string& net_path,
                    TrainLog* log) {
  std::vector<TrainExample> corpus;
  int classes = 0;
  for (const auto& e : manifest.scenes) {
    std::string mask_path = EstBase(masks_dir, e.id) + ".masks.tensor";
    if (!fs::exists(mask_path)) continue;
    MaskSet masks = LoadMasks(mask_path);
    AudioBuffer obs = ReadWav(ScenePath(manifest, e.observation));
    MultichannelStft y = Stft(obs, opts.stft);
    Require(masks.T == y.T && masks.F == y.F,
            "RunTrain: mask/STFT shape mismatch for " + e.id);
    TrainExample ex;
    ex.features = ExtractFeatures(y.Channel(0));
    ex.targets = HardenTargets(masks);
    classes = masks.K;
    corpus.push_back(std::move(ex));
  }
  Require(corpus.size() >= 2, "RunTrain: need at least two teacher-labeled scenes");

  StudentNet net = InitStudent(opts.stft.NumBins(), opts.embed_dim, opts.hidden,
                               opts.context, classes, opts.train.seed);
  TrainLog local = Train(&net, corpus, opts.train);
  if (log != nullptr) *log = local;
  SaveStudent(net, net_path);
  return net;
}

PredictMode PredictModeFromString(const std::string& s) {
  if (s == "teacher-only") return PredictMode::kTeacherOnly;
  if (s == "student-kmeans") return PredictMode::kStudentKmeans;
  if (s == "student-init-cacgmm") return PredictMode::kStudentInitCacgmm;
  Fail("unknown prediction mode: " + s);
}

ExtractMode ExtractModeFromString(const std::string& s) {
  if (s == "mask") return ExtractMode::kMask;
  if (s == "mvdr") return ExtractMode::kMvdr;
  Fail("unknown extraction mode: " + s);
}

SeparateResult RunSeparate(const Manifest& manifest,
                           const SeparateOptions& opts,
                           const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::optional<StudentNet> net;
  if (opts.mode != PredictMode::kTeacherOnly) {
    Require(!opts.net_path.empty(), "RunSeparate: student modes need a net");
    net = LoadStudent(opts.net_path);
  } else {
    Require(!opts.masks_dir.empty(),
            "RunSeparate: teacher-only mode needs --masks-dir");
  }

  SeparateResult result;
  std::vector<std::optional<StageFailure>> failures(manifest.scenes.size());
  std::vector<int> ok(manifest.scenes.size(), 0);

  for (size_t i = 0; i < manifest.scenes.size(); ++i) {
    const SceneEntry& e = manifest.scenes[i];
    try {
      uint64_t scene_seed = SplitSeed(opts.seed, i);
      AudioBuffer obs = ReadWav(ScenePath(manifest, e.observation));
      MultichannelStft y = Stft(obs, opts.stft);

      std::vector<std::string> stages = {"stft"};
      MaskSet masks;
      if (opts.mode == PredictMode::kTeacherOnly) {
        masks = LoadMasks(EstBase(opts.masks_dir, e.id) + ".masks.tensor");
        stages.push_back("teacher-masks");
      } else {
        FeatureField feats = ExtractFeatures(y.Channel(0));
        stages.push_back("student-forward");
        MaskSet kmeans_masks =
            PredictMasks(*net, feats, opts.kmeans_restarts, scene_seed);
        stages.push_back("kmeans");
        if (opts.mode == PredictMode::kStudentKmeans) {
          masks = std::move(kmeans_masks);
        } else {
          EmResult em = EmFit(y, kmeans_masks.K, kmeans_masks,
                              opts.refit_iterations, scene_seed, opts.workers);
          masks = std::move(em.masks);
          stages.push_back("cacgmm-refit");
        }
      }
      ValidateSimplex(masks, 1e-5);
      SaveMasks(masks, EstBase(out_dir, e.id) + ".masks.tensor");

      json meta;
      meta["mode"] = opts.mode == PredictMode::kTeacherOnly ? "teacher-only"
                     : opts.mode == PredictMode::kStudentKmeans
                         ? "student-kmeans"
                         : "student-init-cacgmm";
      meta["mask_ref"] = opts.mask_ref_channel;

      if (opts.extract == ExtractMode::kMask) {
        stages.push_back("mask-extract");
        for (int k = 0; k < masks.K; ++k) {
          Spectrogram z = ApplyMask(ClassMask(masks, k), y,
                                    opts.mask_ref_channel);
          AudioBuffer est = IstftSingle(z, opts.stft, obs.num_samples,
                                        obs.sample_rate);
          WriteWav(est, EstBase(out_dir, e.id) + ".est" + std::to_string(k) +
                            ".wav");
        }
        meta["extract"] = "mask";
      } else {
        stages.push_back("mvdr");
        BeamformerBank bank = BuildBeamformerBank(y, masks);
        std::vector<std::complex<double>> flat;
        flat.reserve(static_cast<size_t>(bank.K) * bank.F * bank.D);
        for (int k = 0; k < bank.K; ++k)
          for (int f = 0; f < bank.F; ++f)
            for (int d = 0; d < bank.D; ++d) flat.push_back(bank.w[k](f, d));
        WriteComplexTensor(EstBase(out_dir, e.id) + ".bf.tensor",
                           {static_cast<uint64_t>(bank.K),
                            static_cast<uint64_t>(bank.F),
                            static_cast<uint64_t>(bank.D)},
                           flat);
        for (int k = 0; k < bank.K; ++k) {
          Spectrogram z = ApplyBeamformer(bank.w[k], y);
          AudioBuffer est = IstftSingle(z, opts.stft, obs.num_samples,
                                        obs.sample_rate);
          WriteWav(est, EstBase(out_dir, e.id) + ".est" + std::to_string(k) +
                            ".wav");
        }
        meta["extract"] = "mvdr";
        meta["references"] = bank.reference;
        meta["degenerate"] = bank.degenerate;
      }
      meta["stages"] = stages;
      AtomicWriteText(EstBase(out_dir, e.id) + ".meta.json",
                      meta.dump(2) + "\n");
      ok[i] = 1;
    } catch (const std::exception& ex) {
      failures[i] = StageFailure{e.id, ex.what()};
    }
  }
  for (size_t i = 0; i < manifest.scenes.size(); ++i) {
    result.processed += ok[i];
    if (failures[i].has_value()) result.failures.push_back(*failures[i]);
  }
  return result;
}

std::vector<std::string> ReadStageLog(const std::string& est_dir,
                                      const std::string& id) {
  json meta = LoadJsonFile(EstBase(est_dir, id) + ".meta.json");
  return meta.at("stages").get<std::vector<std::string>>();
}

EvalReport RunEvaluate(const Manifest& manifest, const std::string& est_dir,
                       const EvaluateOptions& opts) {
  EvalReport report;
  report.mode = opts.mode == ExtractMode::kMask ? "mask" : "mvdr";
  report.mixtures.resize(manifest.scenes.size());

  ParallelFor(manifest.scenes.size(), opts.workers, [&](size_t i) {
    const SceneEntry& e = manifest.scenes[i];
    MixtureEval eval;
    eval.id = e.id;
    std::string base = EstBase(est_dir, e.id);
    if (!fs::exists(base + ".masks.tensor") ||
        !fs::exists(base + ".meta.json")) {
      eval.excluded = true;
      eval.exclude_reason = "missing estimates";
      report.mixtures[i] = std::move(eval);
      return;
    }
    json meta = LoadJsonFile(base + ".meta.json");

    std::vector<MultichannelStft> images;
    std::vector<AudioBuffer> image_wavs;
    for (const auto& img : e.images) {
      image_wavs.push_back(ReadWav(ScenePath(manifest, img)));
      images.push_back(Stft(image_wavs.back(), opts.stft));
    }
    AudioBuffer noise_wav = ReadWav(ScenePath(manifest, e.noise));
    MultichannelStft noise = Stft(noise_wav, opts.stft);
    const int num_speakers = static_cast<int>(images.size());

    int num_classes = 0;
    std::vector<Eigen::MatrixXd> class_masks;
    std::vector<Eigen::MatrixXcd> class_w;
    std::vector<int> references;
    int mask_ref = meta.value("mask_ref", 0);
    if (opts.mode == ExtractMode::kMask) {
      MaskSet masks = LoadMasks(base + ".masks.tensor");
      num_classes = masks.K;
      for (int k = 0; k < masks.K; ++k)
        class_masks.push_back(ClassMask(masks, k));
    } else {
      TensorFile t = ReadTensor(base + ".bf.tensor");
      Require(t.dims.size() == 3, "RunEvaluate: bad beamformer tensor");
      num_classes = static_cast<int>(t.dims[0]);
      int F = static_cast<int>(t.dims[1]);
      int D = static_cast<int>(t.dims[2]);
      std::vector<std::complex<double>> flat = ComplexValues(t);
      for (int k = 0; k < num_classes; ++k) {
        Eigen::MatrixXcd w(F, D);
        for (int f = 0; f < F; ++f)
          for (int d = 0; d < D; ++d)
            w(f, d) = flat[(static_cast<size_t>(k) * F + f) * D + d];
        class_w.push_back(std::move(w));
      }
      references = meta.value("references", std::vector<int>());
      Require(static_cast<int>(references.size()) == num_classes,
              "RunEvaluate: missing beamformer references");
    }
    Require(num_classes <= 4, "RunEvaluate: too many classes for matching");

    // Speaker-by-class SDR matrix, padded square with zeros so the
    // exhaustive matcher can assign classes to the real speakers.
    Eigen::MatrixXd sdr = Eigen::MatrixXd::Zero(num_classes, num_classes);
    Eigen::MatrixXd valid = Eigen::MatrixXd::Zero(num_classes, num_classes);
    bool silent_target = false;
    for (int spk = 0; spk < num_speakers; ++spk) {
      for (int k = 0; k < num_classes; ++k) {
        std::optional<double> v;
        if (opts.mode == ExtractMode::kMask)
          v = InvasiveSdrMask(class_masks[k], images, noise, spk, mask_ref);
        else
          v = InvasiveSdrBf(class_w[k], images, noise, spk);
        if (v.has_value()) {
          sdr(spk, k) = *v;
          valid(spk, k) = 1.0;
        } else {
          sdr(spk, k) = -2.0 * kSdrCapDb;
        }
      }
      bool any_valid = false;
      for (int k = 0; k < num_classes; ++k)
        if (valid(spk, k) > 0) any_valid = true;
      if (!any_valid) silent_target = true;
    }
    if (silent_target) {
      eval.excluded = true;
      eval.exclude_reason = "silent target or degenerate estimates";
      report.mixtures[i] = std::move(eval);
      return;
    }

    PermutationChoice choice = BestPermutation(sdr);
    double gain_acc = 0.0;
    for (int spk = 0; spk < num_speakers; ++spk) {
      SpeakerEval se;
      se.speaker = spk;
      se.assigned_class = choice.assignment[spk];
      se.output_sdr = sdr(spk, se.assigned_class);
      // Mask path: baseline at its extraction channel. MVDR path: channel 0.
      int in_ref = opts.mode == ExtractMode::kMask ? mask_ref : 0;
      se.input_sdr = InputSdr(images, noise, spk, in_ref);
      se.gain = se.output_sdr - se.input_sdr;

      std::string est_path =
          base + ".est" + std::to_string(se.assigned_class) + ".wav";
      if (fs::exists(est_path)) {
        AudioBuffer est = ReadWav(est_path);
        int si_ref = opts.mode == ExtractMode::kMask
                         ? mask_ref
                         : references[se.assigned_class];
        const AudioBuffer& img = image_wavs[spk];
        int n = std::min(est.num_samples, img.num_samples);
        std::vector<double> est_v(est.channel(0), est.channel(0) + n);
        std::vector<double> ref_v(img.channel(si_ref), img.channel(si_ref) + n);
        se.si_sdr = SiSdr(est_v, ref_v);
      }
      gain_acc += se.gain;
      eval.speakers.push_back(se);
    }
    eval.mean_gain = gain_acc / num_speakers;
    report.mixtures[i] = std::move(eval);
  });

  for (const auto& mix : report.mixtures)
    if (mix.excluded) report.missing.push_back(mix.id);
  FinalizeReport(&report);
  return report;
}

void WriteReport(const EvalReport& report, const std::string& path) {
  json j;
  j["mode"] = report.mode;
  j["aggregate"] = {
      {"mean_input_sdr_db", report.mean_input_sdr},
      {"mean_output_sdr_db", report.mean_output_sdr},
      {"mean_gain_db", report.mean_gain},
      {"std_gain_db", report.std_gain},
      {"mean_si_sdr_db", report.mean_si_sdr},
      {"num_evaluated", report.num_evaluated},
  };
  j["missing"] = report.missing;
  j["mixtures"] = json::array();
  for (const auto& mix : report.mixtures) {
    json m;
    m["id"] = mix.id;
    m["excluded"] = mix.excluded;
    if (mix.excluded) {
      m["reason"] = mix.exclude_reason;
    } else {
      m["mean_gain_db"] = mix.mean_gain;
      m["speakers"] = json::array();
      for (const auto& s : mix.speakers) {
        m["speakers"].push_back({{"speaker", s.speaker},
                                 {"assigned_class", s.assigned_class},
                                 {"input_sdr_db", s.input_sdr},
                                 {"output_sdr_db", s.output_sdr},
                                 {"gain_db", s.gain},
                                 {"si_sdr_db", s.si_sdr}});
      }
    }
    j["mixtures"].push_back(std::move(m));
  }
  AtomicWriteText(path, j.dump(2) + "\n");
}

PipelineOptions PipelineOptionsFromJson(const std::string& json_text) {
  json j = json::parse(json_text);
  PipelineOptions opts;
  if (j.contains("simulate"))
    opts.sim = SimConfigFromJson(j.at("simulate").dump());
  opts.train_count = j.value("train_count", opts.train_count);
  opts.test_count = j.value("test_count", opts.test_count);
  opts.sim_seed = j.value("sim_seed", opts.sim_seed);
  if (j.contains("stft")) {
    opts.stft.dft_size = j.at("stft").value("dft_size", opts.stft.dft_size);
    opts.stft.shift = j.at("stft").value("shift", opts.stft.shift);
    opts.stft.Validate();
  }
  if (j.contains("teacher")) {
    const auto& t = j.at("teacher");
    opts.teacher.classes = t.value("classes", opts.teacher.classes);
    opts.teacher.iterations = t.value("iterations", opts.teacher.iterations);
    opts.teacher.seed = t.value("seed", opts.teacher.seed);
  }
  if (j.contains("student")) {
    const auto& s = j.at("student");
    opts.student.embed_dim = s.value("embed_dim", opts.student.embed_dim);
    opts.student.hidden = s.value("hidden", opts.student.hidden);
    opts.student.context = s.value("context", opts.student.context);
    if (s.contains("train")) {
      const auto& t = s.at("train");
      TrainConfig& c = opts.student.train;
      c.learning_rate = t.value("learning_rate", c.learning_rate);
      c.batch_size = t.value("batch_size", c.batch_size);
      c.max_steps = t.value("max_steps", c.max_steps);
      c.patience = t.value("patience", c.patience);
      c.validation_fraction =
          t.value("validation_fraction", c.validation_fraction);
      c.seed = t.value("seed", c.seed);
    }
  }
  if (j.contains("predict")) {
    const auto& p = j.at("predict");
    opts.predict.mode = PredictModeFromString(p.value("mode", "student-init-cacgmm"));
    opts.predict.refit_iterations =
        p.value("refit_iterations", opts.predict.refit_iterations);
    opts.predict.kmeans_restarts =
        p.value("kmeans_restarts", opts.predict.kmeans_restarts);
    opts.predict.seed = p.value("seed", opts.predict.seed);
  }
  if (j.contains("extract"))
    opts.predict.extract = ExtractModeFromString(j.at("extract"));
  opts.workers = j.value("workers", opts.workers);
  return opts;
}

PipelineSummary RunPipeline(const PipelineOptions& opts,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  fs::path base(out_dir);

  SimulateOptions train_sim{opts.sim, opts.train_count, opts.sim_seed,
                            opts.workers};
  Manifest train_manifest = RunSimulate(train_sim, (base / "train").string());
  SimulateOptions test_sim{opts.sim, opts.test_count,
                           SplitSeed(opts.sim_seed, 0x7e57), opts.workers};
  Manifest test_manifest = RunSimulate(test_sim, (base / "test").string());

  TeachOptions teach = opts.teacher;
  teach.stft = opts.stft;
  teach.workers = opts.workers;
  TeachResult tr = RunTeach(train_manifest, teach, (base / "masks").string());
  Require(tr.processed >= 2, "RunPipeline: teaching failed everywhere");

  TrainOptions train_opts = opts.student;
  train_opts.stft = opts.stft;
  train_opts.train.workers = opts.workers;
  std::string net_path = (base / "student.tensor").string();
  TrainLog log;
  RunTrain(train_manifest, (base / "masks").string(), train_opts, net_path,
           &log);

  SeparateOptions sep = opts.predict;
  sep.stft = opts.stft;
  sep.workers = opts.workers;
  sep.net_path = net_path;
  if (sep.mode == PredictMode::kTeacherOnly) {
    TeachOptions test_teach = teach;
    TeachResult ttr =
        RunTeach(test_manifest, test_teach, (base / "test_masks").string());
    Require(ttr.processed > 0, "RunPipeline: test teaching failed");
    sep.masks_dir = (base / "test_masks").string();
  }
  std::string est_dir = (base / "est").string();
  SeparateResult sres = RunSeparate(test_manifest, sep, est_dir);
  Require(sres.processed > 0, "RunPipeline: separation failed everywhere");

  EvaluateOptions eval;
  eval.mode = sep.extract;
  eval.stft = opts.stft;
  eval.workers = opts.workers;
  PipelineSummary summary;
  summary.report = RunEvaluate(test_manifest, est_dir, eval);
  summary.report_path = (base / "report.json").string();
  WriteReport(summary.report, summary.report_path);
  return summary;
}

}  // namespace bss
