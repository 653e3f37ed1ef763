// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the binary exits nonzero if any criterion fails. Criteria 2 and 3 share
// a held-out evaluation corpus; criterion 3 additionally trains the student
// on a 220-scene teacher-labeled corpus and is the long pole.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bss/beamform.h"
#include "bss/cacgmm.h"
#include "bss/clustering.h"
#include "bss/dc_student.h"
#include "bss/metrics.h"
#include "bss/mixsim.h"
#include "bss/parallel.h"
#include "bss/permalign.h"
#include "bss/pipeline.h"
#include "bss/rng.h"
#include "bss/stft.h"

using namespace bss;
namespace fs = std::filesystem;

namespace {

int g_workers = 2;
fs::path g_work;

// Shared state between criteria 2 and 3.
Manifest g_test_manifest;
double g_teacher_gain = 0.0;
bool g_teacher_ready = false;

struct Outcome {
  bool pass = false;
  std::string detail;
};

SimConfig EvalProtocolConfig() {
  SimConfig cfg;  // T60 in [0.2, 0.5] s, SNR in [20, 30] dB, D=4, >=15 deg
  cfg.duration_min_s = 5.0;
  cfg.duration_max_s = 6.0;
  return cfg;
}

SimConfig TrainProtocolConfig() {
  SimConfig cfg;
  cfg.duration_min_s = 2.5;
  cfg.duration_max_s = 3.0;
  return cfg;
}

Eigen::MatrixXcd RandomPdShape(int D, Rng& rng) {
  Eigen::MatrixXcd g(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) g(i, j) = {rng.Normal(), rng.Normal()};
  Eigen::MatrixXcd b =
      g * g.adjoint() + 0.25 * Eigen::MatrixXcd::Identity(D, D);
  return b * (static_cast<double>(D) / b.trace().real());
}

// --- criterion 1: EM monotonicity --------------------------------------

Outcome Criterion1() {
  SimConfig cfg = TrainProtocolConfig();
  const int mixtures = 20, iterations = 100;
  StftConfig stft;
  std::vector<int> violations(mixtures, 0);
  double worst_rel = 0.0;
  for (int i = 0; i < mixtures; ++i) {
    SceneSpec scene = SampleScene(SplitSeed(90210, i), cfg);
    MixtureScene mix = RenderScene(scene, cfg.max_order);
    MultichannelStft y = Stft(mix.observation, stft);
    EmResult em = EmFit(y, 3, std::nullopt, iterations, 1000 + i, g_workers);
    for (size_t s = 1; s < em.loglik_trace.size(); ++s) {
      double prev = em.loglik_trace[s - 1];
      double cur = em.loglik_trace[s];
      if (cur < prev - 1e-6 * std::abs(prev)) violations[i]++;
      if (prev > cur)
        worst_rel = std::max(worst_rel, (prev - cur) / std::abs(prev));
    }
  }
  int bad = std::accumulate(violations.begin(), violations.end(), 0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d mixtures x %d iterations, %d violations, worst backslide "
                "%.2e relative",
                mixtures, iterations, bad, worst_rel);
  return {bad == 0, buf};
}

// --- criterion 2: teacher efficacy --------------------------------------

Outcome Criterion2() {
  SimulateOptions sim{EvalProtocolConfig(), 25, 777, g_workers};
  g_test_manifest = RunSimulate(sim, (g_work / "test").string());

  TeachOptions teach;
  teach.iterations = 100;
  teach.seed = 0;
  teach.workers = g_workers;
  TeachResult tr =
      RunTeach(g_test_manifest, teach, (g_work / "test_masks").string());
  if (tr.processed != 25) return {false, "teacher failed on some mixtures"};

  SeparateOptions sep;
  sep.mode = PredictMode::kTeacherOnly;
  sep.extract = ExtractMode::kMvdr;
  sep.masks_dir = (g_work / "test_masks").string();
  sep.workers = g_workers;
  SeparateResult sres =
      RunSeparate(g_test_manifest, sep, (g_work / "est_teacher").string());
  if (sres.processed != 25) return {false, "separation failed on some mixtures"};

  EvaluateOptions eval;
  eval.mode = ExtractMode::kMvdr;
  eval.workers = g_workers;
  EvalReport report =
      RunEvaluate(g_test_manifest, (g_work / "est_teacher").string(), eval);
  g_teacher_gain = report.mean_gain;
  g_teacher_ready = report.num_evaluated == 25;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "random-init cACGMM + align + MVDR: mean invasive SDR gain "
                "%.2f dB (std %.2f) over %d held-out mixtures (need >= 5)",
                report.mean_gain, report.std_gain, report.num_evaluated);
  return {g_teacher_ready && report.mean_gain >= 5.0, buf};
}

// --- criterion 3: student-initialized cACGMM beats the teacher ----------

Outcome Criterion3() {
  if (!g_teacher_ready) return {false, "criterion 2 artifacts unavailable"};

  SimulateOptions sim{TrainProtocolConfig(), 220, 424242, g_workers};
  Manifest train_manifest = RunSimulate(sim, (g_work / "train").string());

  TeachOptions teach;
  teach.iterations = 100;
  teach.seed = 0;
  teach.workers = g_workers;
  TeachResult tr =
      RunTeach(train_manifest, teach, (g_work / "train_masks").string());
  if (tr.processed < 200)
    return {false, "fewer than 200 teacher-labeled training mixtures"};

  TrainOptions opts;
  opts.embed_dim = 20;
  opts.hidden = 256;
  opts.context = 5;
  opts.train.learning_rate = 3.0;
  opts.train.batch_size = 4;
  opts.train.max_steps = 3000;
  opts.train.patience = 12;
  opts.train.eval_every = 50;
  opts.train.validation_fraction = 0.1;
  opts.train.seed = 7;
  opts.train.workers = g_workers;
  TrainLog log;
  std::string net_path = (g_work / "student.tensor").string();
  RunTrain(train_manifest, (g_work / "train_masks").string(), opts, net_path,
           &log);

  SeparateOptions sep;
  sep.mode = PredictMode::kStudentInitCacgmm;
  sep.extract = ExtractMode::kMvdr;
  sep.net_path = net_path;
  sep.refit_iterations = 50;
  sep.workers = g_workers;
  std::string est_dir = (g_work / "est_student_init").string();
  SeparateResult sres = RunSeparate(g_test_manifest, sep, est_dir);
  if (sres.processed != 25) return {false, "separation failed on some mixtures"};

  // The frequency alignment stage must not run in this mode.
  bool align_skipped = true;
  for (const auto& e : g_test_manifest.scenes) {
    for (const auto& stage : ReadStageLog(est_dir, e.id))
      if (stage.find("align") != std::string::npos) align_skipped = false;
  }

  EvaluateOptions eval;
  eval.mode = ExtractMode::kMvdr;
  eval.workers = g_workers;
  EvalReport report = RunEvaluate(g_test_manifest, est_dir, eval);

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "student-init cACGMM + MVDR %.2f dB vs random-init %.2f dB "
                "(need >= +0.5 dB), %d training mixtures, %d steps, "
                "permalign skipped: %s",
                report.mean_gain, g_teacher_gain, tr.processed, log.steps_run,
                align_skipped ? "yes" : "NO");
  bool pass = report.num_evaluated == 25 && align_skipped &&
              report.mean_gain >= g_teacher_gain + 0.5;
  return {pass, buf};
}

// --- criterion 4: gradient correctness ----------------------------------

Outcome Criterion4() {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(500 + trial);
    StudentNet net = InitStudent(4, 3, 5, 3, 2, 600 + trial);
    if (net.NumParams() > 5000) return {false, "test net too large"};
    FeatureField feats;
    feats.T = 6;
    feats.F = 4;
    feats.values.resize(6, 4);
    for (int t = 0; t < 6; ++t)
      for (int f = 0; f < 4; ++f) feats.values(t, f) = rng.Normal();
    TargetAssignment targets;
    targets.num_classes = 2;
    targets.labels.resize(24);
    for (int& l : targets.labels) l = static_cast<int>(rng.UniformInt(2));

    double loss = 0.0;
    ParamGrads grads = BackwardUtterance(net, feats, targets, &loss);
    const double eps = 1e-4;
    double max_analytic = 0.0, max_err = 0.0;
    auto probe = [&](double* param, double analytic) {
      double saved = *param;
      *param = saved + eps;
      double up = DcLoss(Forward(net, feats).rows, targets);
      *param = saved - eps;
      double down = DcLoss(Forward(net, feats).rows, targets);
      *param = saved;
      double fd = (up - down) / (2.0 * eps);
      max_analytic = std::max(max_analytic, std::abs(analytic));
      max_err = std::max(max_err, std::abs(analytic - fd));
    };
    for (long i = 0; i < net.w1.size(); ++i) probe(net.w1.data() + i, grads.w1(i));
    for (long i = 0; i < net.w2.size(); ++i) probe(net.w2.data() + i, grads.w2(i));
    for (long i = 0; i < net.w3.size(); ++i) probe(net.w3.data() + i, grads.w3(i));
    for (long i = 0; i < net.b1.size(); ++i) probe(net.b1.data() + i, grads.b1(i));
    for (long i = 0; i < net.b2.size(); ++i) probe(net.b2.data() + i, grads.b2(i));
    for (long i = 0; i < net.b3.size(); ++i) probe(net.b3.data() + i, grads.b3(i));
    worst = std::max(worst, max_err / std::max(max_analytic, 1e-12));
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "10 nets, worst relative max-norm error %.2e (need < 1e-4)",
                worst);
  return {worst < 1e-4, buf};
}

// --- criterion 5: loss oracle equivalence -------------------------------

Outcome Criterion5() {
  Rng rng(71);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int N = 4 + static_cast<int>(rng.UniformInt(61));  // T*F <= 64
    int E = 2 + static_cast<int>(rng.UniformInt(6));
    int K = 2 + static_cast<int>(rng.UniformInt(3));
    Eigen::MatrixXd emb(N, E);
    for (int n = 0; n < N; ++n) {
      for (int e = 0; e < E; ++e) emb(n, e) = rng.Normal();
      emb.row(n).normalize();
    }
    TargetAssignment targets;
    targets.num_classes = K;
    targets.labels.resize(N);
    for (int& l : targets.labels) l = static_cast<int>(rng.UniformInt(K));

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, K);
    for (int n = 0; n < N; ++n) c(n, targets.labels[n]) = 1.0;
    Eigen::MatrixXd diff = emb * emb.transpose() - c * c.transpose();
    double oracle = diff.squaredNorm() / (static_cast<double>(N) * N);
    worst = std::max(worst, std::abs(DcLoss(emb, targets) - oracle));
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "50 instances, worst |expansion - materialized| = %.2e "
                "(need < 1e-10)",
                worst);
  return {worst < 1e-10, buf};
}

// --- criterion 6: MVDR closed form --------------------------------------

Outcome Criterion6() {
  Rng rng(81);
  double worst_w = 0.0, worst_distortion = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int D = 2 + static_cast<int>(rng.UniformInt(3));
    Eigen::VectorXcd d(D);
    for (int i = 0; i < D; ++i) d(i) = {rng.Normal(), rng.Normal()};
    double sigma2 = rng.Uniform(0.1, 5.0);
    int ref = static_cast<int>(rng.UniformInt(D));
    MvdrWeights mv =
        MvdrSouden(d * d.adjoint(), sigma2 * Eigen::MatrixXcd::Identity(D, D),
                   ref);
    if (mv.degenerate) return {false, "unexpected degenerate beamformer"};
    Eigen::VectorXcd want = d * std::conj(d(ref)) / d.squaredNorm();
    worst_w = std::max(worst_w, (mv.w - want).norm());
    std::complex<double> response = (mv.w.adjoint() * d)(0, 0);
    worst_distortion = std::max(worst_distortion, std::abs(response - d(ref)));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rank-1 target + isotropic noise: worst |w - closed form| = "
                "%.2e, worst |w^H d - d_ref| = %.2e (need < 1e-10)",
                worst_w, worst_distortion);
  return {worst_w < 1e-10 && worst_distortion < 1e-10, buf};
}

// --- criterion 7: STFT perfect reconstruction ---------------------------

Outcome Criterion7() {
  StftConfig cfg;  // 512 / 128
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(900 + trial);
    int n = 6000 + static_cast<int>(rng.UniformInt(6000));
    AudioBuffer buf(1, n, 8000);
    for (double& s : buf.samples) s = rng.Uniform(-1.0, 1.0);
    MultichannelStft spec = Stft(buf, cfg);
    AudioBuffer rec = Istft(spec, n);
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(rec.at(0, i) - buf.at(0, i)));
  }
  char text[120];
  std::snprintf(text, sizeof(text),
                "20 signals at 512/128, worst |x - istft(stft(x))| = %.2e "
                "(need < 1e-6)",
                worst);
  return {worst < 1e-6, text};
}

// --- criterion 8: permutation alignment recovery ------------------------

Outcome Criterion8() {
  long permuted_total = 0, recovered_total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(3000 + trial);
    const int K = trial % 2 == 0 ? 2 : 3;
    const int T = 48, F = 40;

    // Consistent base masks: smooth per-class activity patterns over time,
    // softmax-normalized, shared across bins with mild bin-dependent jitter.
    MaskSet base(K, T, F);
    std::vector<std::vector<double>> pattern(K, std::vector<double>(T));
    for (int k = 0; k < K; ++k) {
      double phase = rng.Uniform(0.0, 2.0 * M_PI);
      double rate = rng.Uniform(0.25, 0.9);
      for (int t = 0; t < T; ++t)
        pattern[k][t] = std::sin(rate * t + phase) + 0.4 * rng.Normal() * 0.2;
    }
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
          double v = std::exp(2.0 * (pattern[k][t] + 0.15 * rng.Normal()));
          base.at(k, t, f) = v;
          sum += v;
        }
        for (int k = 0; k < K; ++k) base.at(k, t, f) /= sum;
      }

    // Artificially permute a random subset of bins.
    std::vector<std::vector<int>> applied(F);
    std::vector<int> identity(K);
    std::iota(identity.begin(), identity.end(), 0);
    MaskSet scrambled = base;
    std::vector<int> permuted_bins;
    for (int f = 0; f < F; ++f) {
      applied[f] = identity;
      if (rng.Uniform() < 0.35) {
        std::vector<int> p = identity;
        for (size_t i = p.size(); i > 1; --i)
          std::swap(p[i - 1], p[rng.UniformInt(i)]);
        if (p != identity) {
          applied[f] = p;
          permuted_bins.push_back(f);
          for (int k = 0; k < K; ++k)
            for (int t = 0; t < T; ++t)
              scrambled.at(k, t, f) = base.at(p[k], t, f);
        }
      }
    }
    if (permuted_bins.empty()) continue;

    AlignResult res = Align(scrambled);
    // Recovery: a permuted bin is recovered when the aligned masks match the
    // base masks there up to the fixture's global class relabeling. Estimate
    // the global relabeling from the non-permuted bins.
    std::vector<int> global(K, -1);
    {
      int witness = -1;
      for (int f = 0; f < F; ++f)
        if (applied[f] == identity) witness = f;
      if (witness < 0) continue;
      // aligned[k] should equal base[global[k]] at the witness bin
      for (int k = 0; k < K; ++k) {
        double best = 1e300;
        for (int j = 0; j < K; ++j) {
          double err = 0.0;
          for (int t = 0; t < T; ++t)
            err += std::abs(res.masks.at(k, t, witness) - base.at(j, t, witness));
          if (err < best) {
            best = err;
            global[k] = j;
          }
        }
      }
    }
    for (int f : permuted_bins) {
      double err = 0.0;
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          err += std::abs(res.masks.at(k, t, f) - base.at(global[k], t, f));
      ++permuted_total;
      if (err < 1e-9) ++recovered_total;
    }
  }
  double rate = static_cast<double>(recovered_total) / permuted_total;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%ld/%ld artificially permuted bins recovered (%.1f%%, need "
                ">= 95%%) over 200 fixtures",
                recovered_total, permuted_total, 100.0 * rate);
  return {rate >= 0.95, buf};
}

// --- criterion 9: cACG normalization ------------------------------------

Outcome Criterion9() {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(4000 + trial);
    int D = trial % 2 == 0 ? 2 : 3;
    Eigen::MatrixXcd shape = RandomPdShape(D, rng);
    const long n = 1000000;
    double acc = 0.0;
    Eigen::VectorXcd y(D);
    for (long i = 0; i < n; ++i) {
      for (int d = 0; d < D; ++d) y(d) = {rng.Normal(), rng.Normal()};
      y.normalize();
      acc += std::exp(CacgLogPdf(y, shape));
    }
    double area = 2.0 * std::pow(M_PI, D) / std::tgamma(D);
    double integral = acc / n * area;
    worst = std::max(worst, std::abs(integral - 1.0));
  }
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "10 shapes (D=2,3), 1e6 samples each, worst |integral - 1| = "
                "%.3f (need <= 0.02)",
                worst);
  return {worst <= 0.02, buf};
}

// --- criterion 10: simplex property everywhere --------------------------

Outcome Criterion10() {
  SimConfig cfg = TrainProtocolConfig();
  cfg.duration_min_s = 1.5;
  cfg.duration_max_s = 1.8;
  SceneSpec scene = SampleScene(5150, cfg);
  MixtureScene mix = RenderScene(scene, cfg.max_order);
  StftConfig stft;
  MultichannelStft y = Stft(mix.observation, stft);

  try {
    // Per-iteration masks of a manual EM loop.
    NormalizedObservations obs = NormalizeObservations(y);
    MaskSet masks = RandomInitMasks(3, y.T, y.F, 99);
    ValidateSimplex(masks);
    CacgmmState state;
    state.K = 3;
    state.F = y.F;
    state.D = y.D;
    state.weights.assign(3 * y.F, 1.0 / 3.0);
    state.shapes.assign(static_cast<size_t>(3) * y.F * y.D * y.D, {0.0, 0.0});
    for (int k = 0; k < 3; ++k)
      for (int f = 0; f < y.F; ++f)
        state.shape(k, f) = Eigen::MatrixXcd::Identity(y.D, y.D);
    for (int it = 0; it < 30; ++it) {
      state = MStep(obs, masks, state, g_workers);
      masks = EStep(obs, state, g_workers);
      ValidateSimplex(masks);
    }

    // Pipeline stages: teacher alignment, hardening, k-means labels, refit.
    AlignResult aligned = Align(masks);
    ValidateSimplex(aligned.masks);
    TargetAssignment targets = HardenTargets(aligned.masks);
    MaskSet onehot = LabelsToMasks(targets.labels, y.T, y.F, 3);
    ValidateSimplex(onehot);
    EmResult refit = EmFit(y, 3, onehot, 10, 1, g_workers);
    ValidateSimplex(refit.masks);
  } catch (const std::exception& ex) {
    return {false, std::string("simplex violated: ") + ex.what()};
  }
  return {true,
          "masks on the simplex at every EM iteration and pipeline stage"};
}

}  // namespace

int main(int argc, char** argv) {
  g_workers = std::min(DefaultWorkers(), 4);
  if (argc > 1) g_workers = std::atoi(argv[1]);
  // Optional second argument: comma-separated criterion numbers to run.
  std::vector<bool> enabled(10, true);
  if (argc > 2) {
    enabled.assign(10, false);
    std::string spec(argv[2]);
    for (size_t pos = 0; pos < spec.size();) {
      size_t comma = spec.find(',', pos);
      if (comma == std::string::npos) comma = spec.size();
      int idx = std::atoi(spec.substr(pos, comma - pos).c_str());
      if (idx >= 1 && idx <= 10) enabled[idx - 1] = true;
      pos = comma + 1;
    }
  }
  g_work = fs::temp_directory_path() / "bss_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {"EM log-likelihood monotonicity", Criterion1},
      {"teacher efficacy (random-init cACGMM + MVDR)", Criterion2},
      {"student-initialized cACGMM beats the teacher", Criterion3},
      {"embedding gradient vs finite differences", Criterion4},
      {"affinity loss expansion vs materialized oracle", Criterion5},
      {"Souden MVDR closed form", Criterion6},
      {"STFT perfect reconstruction at 512/128", Criterion7},
      {"frequency permutation recovery", Criterion8},
      {"cACG density normalization (Monte Carlo)", Criterion9},
      {"mask simplex at every stage", Criterion10},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (!enabled[i]) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %zu: %s — %s (%.1f s)\n",
                out.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
