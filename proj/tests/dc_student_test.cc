// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bss/dc_student.h"
#include "bss/rng.h"

using namespace bss;

namespace {

FeatureField RandomFeatures(int T, int F, uint64_t seed) {
  FeatureField f;
  f.T = T;
  f.F = F;
  f.values.resize(T, F);
  Rng rng(seed);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < F; ++j) f.values(t, j) = rng.Normal();
  return f;
}

TargetAssignment RandomTargets(int N, int K, uint64_t seed) {
  TargetAssignment t;
  t.num_classes = K;
  Rng rng(seed);
  t.labels.resize(N);
  for (int& l : t.labels) l = static_cast<int>(rng.UniformInt(K));
  return t;
}

// Materialized-affinity oracle: ||E E^T - C C^T||_F^2 / N^2.
double MaterializedLoss(const Eigen::MatrixXd& emb,
                        const TargetAssignment& targets) {
  const long N = emb.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, targets.num_classes);
  for (long n = 0; n < N; ++n) c(n, targets.labels[n]) = 1.0;
  Eigen::MatrixXd diff = emb * emb.transpose() - c * c.transpose();
  return diff.squaredNorm() / (static_cast<double>(N) * N);
}

}  // namespace

TEST_CASE("features: constant magnitude maps to zeros") {
  Spectrogram y(6, 4);
  y.setConstant(std::complex<double>(0.3, 0.4));  // |y| = 0.5 everywhere
  FeatureField f = ExtractFeatures(y);
  CHECK(f.values.norm() == doctest::Approx(0.0));
}

TEST_CASE("features: standardization removes global scaling") {
  Rng rng(1);
  Spectrogram y(10, 8);
  for (int t = 0; t < 10; ++t)
    for (int f = 0; f < 8; ++f)
      y(t, f) = std::complex<double>(rng.Normal(), rng.Normal());
  FeatureField a = ExtractFeatures(y);
  FeatureField b = ExtractFeatures(10.0 * y);
  // The log floor perturbs very small magnitudes slightly.
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("features: output is standardized") {
  Rng rng(2);
  Spectrogram y(20, 16);
  for (int t = 0; t < 20; ++t)
    for (int f = 0; f < 16; ++f)
      y(t, f) = std::complex<double>(2.0 * rng.Normal(), rng.Normal());
  FeatureField feat = ExtractFeatures(y);
  CHECK(std::abs(feat.values.mean()) < 1e-3);
  double var = feat.values.squaredNorm() / feat.values.size();
  CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("forward produces unit norms and is frame-local") {
  StudentNet net = InitStudent(6, 4, 8, 3, 3, 5);
  FeatureField feats = RandomFeatures(7, 6, 3);
  EmbeddingField emb = Forward(net, feats);
  for (long n = 0; n < emb.rows.rows(); ++n)
    CHECK(emb.rows.row(n).norm() == doctest::Approx(1.0).epsilon(1e-6));

  // Identical frames map to identical embeddings.
  FeatureField constant;
  constant.T = 5;
  constant.F = 6;
  constant.values.resize(5, 6);
  for (int t = 0; t < 5; ++t)
    for (int f = 0; f < 6; ++f) constant.values(t, f) = 0.1 * f - 0.2;
  EmbeddingField ce = Forward(net, constant);
  for (int t = 1; t < 5; ++t)
    for (int f = 0; f < 6; ++f) {
      long a = static_cast<long>(t) * 6 + f;
      long b = f;
      CHECK((ce.rows.row(a) - ce.rows.row(b)).norm() < 1e-12);
    }
}

TEST_CASE("harden targets argmax with low-index ties") {
  MaskSet masks(3, 1, 3);
  masks.at(0, 0, 0) = 0.9;
  masks.at(1, 0, 0) = 0.05;
  masks.at(2, 0, 0) = 0.05;
  masks.at(0, 0, 1) = 0.5;
  masks.at(1, 0, 1) = 0.5;
  masks.at(2, 0, 1) = 0.0;
  masks.at(0, 0, 2) = 0.0;
  masks.at(1, 0, 2) = 0.0;
  masks.at(2, 0, 2) = 1.0;
  TargetAssignment t = HardenTargets(masks);
  CHECK(t.labels == std::vector<int>{0, 0, 2});

  // Idempotent on one-hot masks.
  MaskSet onehot(2, 1, 2);
  onehot.at(0, 0, 0) = 1.0;
  onehot.at(1, 0, 1) = 1.0;
  TargetAssignment t2 = HardenTargets(onehot);
  CHECK(t2.labels == std::vector<int>{0, 1});
}

TEST_CASE("dc loss is zero at a perfect one-hot embedding") {
  const int N = 12, K = 3;
  TargetAssignment targets = RandomTargets(N, K, 7);
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(N, K);
  for (int n = 0; n < N; ++n) emb(n, targets.labels[n]) = 1.0;
  CHECK(DcLoss(emb, targets) == doctest::Approx(0.0).epsilon(1e-15));
  Eigen::MatrixXd grad = DcLossGrad(emb, targets);
  CHECK(grad.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("dc loss equals the materialized-affinity oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    int N = 4 + static_cast<int>(rng.UniformInt(13));
    int E = 2 + static_cast<int>(rng.UniformInt(3));
    int K = 2 + static_cast<int>(rng.UniformInt(2));
    Eigen::MatrixXd emb(N, E);
    for (int n = 0; n < N; ++n) {
      for (int e = 0; e < E; ++e) emb(n, e) = rng.Normal();
      emb.row(n).normalize();
    }
    TargetAssignment targets = RandomTargets(N, K, 100 + trial);
    CHECK(DcLoss(emb, targets) ==
          doctest::Approx(MaterializedLoss(emb, targets)).epsilon(1e-10));
  }
}

TEST_CASE("identical embeddings with balanced classes cost one half") {
  const int N = 16;
  TargetAssignment targets;
  targets.num_classes = 2;
  for (int n = 0; n < N; ++n) targets.labels.push_back(n % 2);
  Eigen::MatrixXd emb(N, 3);
  Eigen::RowVector3d v(1.0, 0.0, 0.0);
  for (int n = 0; n < N; ++n) emb.row(n) = v;
  CHECK(DcLoss(emb, targets) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("dc loss is invariant to class relabeling") {
  Rng rng(9);
  const int N = 20, E = 4, K = 3;
  Eigen::MatrixXd emb(N, E);
  for (int n = 0; n < N; ++n) {
    for (int e = 0; e < E; ++e) emb(n, e) = rng.Normal();
    emb.row(n).normalize();
  }
  TargetAssignment targets = RandomTargets(N, K, 10);
  TargetAssignment permuted = targets;
  for (int& l : permuted.labels) l = (l + 1) % K;
  CHECK(DcLoss(emb, targets) ==
        doctest::Approx(DcLoss(emb, permuted)).epsilon(1e-12));
}

TEST_CASE("normalization backward output is orthogonal to embeddings") {
  StudentNet net = InitStudent(5, 3, 6, 3, 2, 11);
  FeatureField feats = RandomFeatures(6, 5, 12);
  ForwardCache cache;
  EmbeddingField emb = ForwardWithCache(net, feats, &cache);
  TargetAssignment targets = RandomTargets(6 * 5, 2, 13);
  Eigen::MatrixXd grad_emb = DcLossGrad(emb.rows, targets);
  Eigen::MatrixXd grad_v = NormalizationBackward(emb, cache.norms, grad_emb);
  for (long n = 0; n < grad_v.rows(); ++n)
    CHECK(std::abs(emb.rows.row(n).dot(grad_v.row(n))) < 1e-8);
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    StudentNet net = InitStudent(4, 3, 5, 3, 2, 20 + seed);
    REQUIRE(net.NumParams() <= 5000);
    FeatureField feats = RandomFeatures(6, 4, 30 + seed);
    TargetAssignment targets = RandomTargets(6 * 4, 2, 40 + seed);

    double loss = 0.0;
    ParamGrads grads = BackwardUtterance(net, feats, targets, &loss);

    const double eps = 1e-4;
    auto loss_at = [&](StudentNet& n) {
      EmbeddingField emb = Forward(n, feats);
      return DcLoss(emb.rows, targets);
    };
    double max_abs_analytic = 0.0, max_abs_err = 0.0;

    auto check_block = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& g) {
      for (long i = 0; i < param.size(); ++i) {
        double saved = param(i / param.cols(), i % param.cols());
        double* slot = &param(i / param.cols(), i % param.cols());
        *slot = saved + eps;
        double up = loss_at(net);
        *slot = saved - eps;
        double down = loss_at(net);
        *slot = saved;
        double fd = (up - down) / (2.0 * eps);
        double an = g(i / g.cols(), i % g.cols());
        max_abs_analytic = std::max(max_abs_analytic, std::abs(an));
        max_abs_err = std::max(max_abs_err, std::abs(an - fd));
      }
    };
    check_block(net.w1, grads.w1);
    check_block(net.w2, grads.w2);
    check_block(net.w3, grads.w3);
    Eigen::MatrixXd b1m = net.b1, g1m = grads.b1;
    Eigen::MatrixXd b2m = net.b2, g2m = grads.b2;
    Eigen::MatrixXd b3m = net.b3, g3m = grads.b3;
    auto check_vec = [&](Eigen::VectorXd& param, const Eigen::VectorXd& g) {
      for (long i = 0; i < param.size(); ++i) {
        double saved = param(i);
        param(i) = saved + eps;
        double up = loss_at(net);
        param(i) = saved - eps;
        double down = loss_at(net);
        param(i) = saved;
        double fd = (up - down) / (2.0 * eps);
        max_abs_analytic = std::max(max_abs_analytic, std::abs(g(i)));
        max_abs_err = std::max(max_abs_err, std::abs(g(i) - fd));
      }
    };
    check_vec(net.b1, grads.b1);
    check_vec(net.b2, grads.b2);
    check_vec(net.b3, grads.b3);

    CHECK(max_abs_err / std::max(max_abs_analytic, 1e-12) < 1e-4);
  }
}

TEST_CASE("training lowers the loss on a learnable toy corpus") {
  // Feature sign decides the slot class; the context MLP can read it off.
  const int T = 12, F = 8;
  Rng rng(55);
  std::vector<TrainExample> corpus;
  for (int u = 0; u < 20; ++u) {
    TrainExample ex;
    ex.features.T = T;
    ex.features.F = F;
    ex.features.values.resize(T, F);
    ex.targets.num_classes = 2;
    ex.targets.labels.resize(T * F);
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double sign = rng.Uniform() < 0.5 ? -1.0 : 1.0;
        ex.features.values(t, f) = sign + 0.05 * rng.Normal();
        ex.targets.labels[t * F + f] = sign > 0 ? 1 : 0;
      }
    corpus.push_back(std::move(ex));
  }

  StudentNet net = InitStudent(F, 4, 16, 3, 2, 99);
  TrainConfig cfg;
  cfg.learning_rate = 2.0;
  cfg.batch_size = 4;
  cfg.max_steps = 300;
  cfg.patience = 20;
  cfg.validation_fraction = 0.2;
  cfg.seed = 5;
  TrainLog log = Train(&net, corpus, cfg);

  REQUIRE(log.step_loss.size() > 10);
  double early = log.step_loss[0];
  double late = log.step_loss.back();
  CHECK(late <= 0.5 * early);

  // Early stopping: the returned checkpoint is at least as good as the last
  // evaluation.
  CHECK(log.best_val <= log.val_loss.back() + 1e-15);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  std::vector<TrainExample> corpus;
  for (int u = 0; u < 4; ++u) {
    TrainExample ex;
    ex.features = RandomFeatures(5, 4, 60 + u);
    ex.targets = RandomTargets(20, 2, 70 + u);
    corpus.push_back(std::move(ex));
  }
  StudentNet net = InitStudent(4, 3, 6, 3, 2, 1);
  Eigen::MatrixXd w1 = net.w1;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_steps = 10;
  cfg.batch_size = 2;
  cfg.validation_fraction = 0.25;
  TrainLog log = Train(&net, corpus, cfg);
  CHECK((net.w1 - w1).norm() == 0.0);
  CHECK(log.step_loss.front() == doctest::Approx(log.step_loss.back()));
}

TEST_CASE("training rejects bad configs and diverged losses") {
  std::vector<TrainExample> corpus;
  TrainExample ex;
  ex.features = RandomFeatures(4, 4, 80);
  ex.targets = RandomTargets(16, 2, 81);
  corpus.push_back(ex);
  corpus.push_back(ex);
  StudentNet net = InitStudent(4, 3, 6, 3, 2, 2);
  TrainConfig cfg;
  cfg.validation_fraction = 0.0;
  CHECK_THROWS_AS(Train(&net, corpus, cfg), Error);
  cfg.validation_fraction = 0.5;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(Train(&net, corpus, cfg), Error);
  CHECK_THROWS_AS(Train(&net, {}, TrainConfig{}), Error);
}

TEST_CASE("predicted masks are deterministic one-hot partitions") {
  StudentNet net = InitStudent(6, 4, 8, 3, 3, 3);
  FeatureField feats = RandomFeatures(9, 6, 90);
  MaskSet a = PredictMasks(net, feats, 5, 17);
  MaskSet b = PredictMasks(net, feats, 5, 17);
  CHECK(a.m == b.m);
  ValidateSimplex(a);
  for (double v : a.m) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("student net round-trips through disk") {
  StudentNet net = InitStudent(5, 3, 7, 5, 3, 123);
  std::string path =
      (std::filesystem::temp_directory_path() / "student_rt.tensor").string();
  SaveStudent(net, path);
  StudentNet back = LoadStudent(path);
  CHECK(back.F == net.F);
  CHECK(back.E == net.E);
  CHECK(back.hidden == net.hidden);
  CHECK(back.context == net.context);
  CHECK(back.num_classes == net.num_classes);
  // Float32 storage: parameters match to single precision.
  CHECK((back.w1 - net.w1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((back.w3 - net.w3).cwiseAbs().maxCoeff() < 1e-6);
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
