// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/dc_student.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "bss/clustering.h"
#include "bss/parallel.h"
#include "bss/rng.h"
#include "bss/tensor_file.h"

namespace bss {

namespace {

constexpr double kLogFloor = 1e-8;
constexpr double kNormFloor = 1e-20;

Eigen::MatrixXd GlorotMatrix(int rows, int cols, Rng& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.Uniform(-limit, limit);
  return m;
}

// Class sums C^T E (num_classes x E) and per-class counts.
void ClassSums(const Eigen::MatrixXd& emb, const TargetAssignment& targets,
               Eigen::MatrixXd* sums, Eigen::VectorXd* counts) {
  const int K = targets.num_classes;
  sums->setZero(K, emb.cols());
  counts->setZero(K);
  for (long n = 0; n < emb.rows(); ++n) {
    int k = targets.labels[n];
    sums->row(k) += emb.row(n);
    (*counts)(k) += 1.0;
  }
}

}  // namespace

FeatureField ExtractFeatures(const Spectrogram& y1) {
  FeatureField out;
  out.T = static_cast<int>(y1.rows());
  out.F = static_cast<int>(y1.cols());
  out.values.resize(out.T, out.F);
  for (int t = 0; t < out.T; ++t)
    for (int f = 0; f < out.F; ++f)
      out.values(t, f) = std::log(std::abs(y1(t, f)) + kLogFloor);
  // Utterance-level mean/variance normalization per feature dimension.
  for (int f = 0; f < out.F; ++f) {
    double mean = out.values.col(f).mean();
    out.values.col(f).array() -= mean;
    double var = out.values.col(f).squaredNorm() / out.T;
    if (var > 1e-12) out.values.col(f) /= std::sqrt(var);
  }
  return out;
}

TargetAssignment HardenTargets(const MaskSet& masks) {
  TargetAssignment out;
  out.num_classes = masks.K;
  out.labels.resize(static_cast<size_t>(masks.T) * masks.F);
  for (int t = 0; t < masks.T; ++t) {
    for (int f = 0; f < masks.F; ++f) {
      int best = 0;
      double best_v = masks.at(0, t, f);
      for (int k = 1; k < masks.K; ++k) {
        if (masks.at(k, t, f) > best_v) {
          best_v = masks.at(k, t, f);
          best = k;
        }
      }
      out.labels[static_cast<size_t>(t) * masks.F + f] = best;
    }
  }
  return out;
}

StudentNet InitStudent(int F, int E, int hidden, int context, int num_classes,
                       uint64_t seed) {
  Require(F > 0 && E > 0 && hidden > 0, "InitStudent: bad sizes");
  Require(context >= 1 && context % 2 == 1, "InitStudent: context must be odd");
  StudentNet net;
  net.F = F;
  net.E = E;
  net.hidden = hidden;
  net.context = context;
  net.num_classes = num_classes;
  net.seed = seed;
  Rng rng(SplitSeed(seed, 0x57ced));
  net.w1 = GlorotMatrix(hidden, context * F, rng);
  net.w2 = GlorotMatrix(hidden, hidden, rng);
  net.w3 = GlorotMatrix(F * E, hidden, rng);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.b2 = Eigen::VectorXd::Zero(hidden);
  net.b3 = Eigen::VectorXd::Zero(F * E);
  return net;
}

EmbeddingField ForwardWithCache(const StudentNet& net,
                                const FeatureField& feats,
                                ForwardCache* cache) {
  Require(feats.F == net.F, "Forward: feature bins mismatch");
  Require(feats.values.allFinite(), "Forward: non-finite features");
  const int T = feats.T, F = net.F, E = net.E, C = net.context;
  const int half = C / 2;

  Eigen::MatrixXd x(T, C * F);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) {
      int src = std::clamp(t + c - half, 0, T - 1);
      x.block(t, c * F, 1, F) = feats.values.row(src);
    }

  Eigen::MatrixXd h1 =
      ((x * net.w1.transpose()).rowwise() + net.b1.transpose()).array().tanh();
  Eigen::MatrixXd h2 =
      ((h1 * net.w2.transpose()).rowwise() + net.b2.transpose()).array().tanh();
  Eigen::MatrixXd v = (h2 * net.w3.transpose()).rowwise() + net.b3.transpose();

  EmbeddingField emb;
  emb.T = T;
  emb.F = F;
  emb.E = E;
  emb.rows.resize(static_cast<long>(T) * F, E);
  Eigen::VectorXd norms(static_cast<long>(T) * F);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      long n = static_cast<long>(t) * F + f;
      Eigen::RowVectorXd slot = v.block(t, f * E, 1, E);
      double norm = std::max(slot.norm(), kNormFloor);
      norms(n) = norm;
      emb.rows.row(n) = slot / norm;
    }
  }
  if (cache != nullptr) {
    cache->x = std::move(x);
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
    cache->v = std::move(v);
    cache->norms = std::move(norms);
  }
  return emb;
}

EmbeddingField Forward(const StudentNet& net, const FeatureField& feats) {
  return ForwardWithCache(net, feats, nullptr);
}

double DcLoss(const Eigen::MatrixXd& emb_rows,
              const TargetAssignment& targets) {
  const long N = emb_rows.rows();
  Require(static_cast<long>(targets.labels.size()) == N,
          "DcLoss: row count mismatch");
  Eigen::MatrixXd gram = emb_rows.transpose() * emb_rows;  // E x E
  Eigen::MatrixXd sums;
  Eigen::VectorXd counts;
  ClassSums(emb_rows, targets, &sums, &counts);
  double term_ee = gram.squaredNorm();
  double term_ec = sums.squaredNorm();
  double term_cc = counts.squaredNorm();
  double n2 = static_cast<double>(N) * N;
  return (term_ee - 2.0 * term_ec + term_cc) / n2;
}

Eigen::MatrixXd DcLossGrad(const Eigen::MatrixXd& emb_rows,
                           const TargetAssignment& targets) {
  const long N = emb_rows.rows();
  Require(static_cast<long>(targets.labels.size()) == N,
          "DcLossGrad: row count mismatch");
  Eigen::MatrixXd gram = emb_rows.transpose() * emb_rows;
  Eigen::MatrixXd sums;
  Eigen::VectorXd counts;
  ClassSums(emb_rows, targets, &sums, &counts);
  Eigen::MatrixXd grad = emb_rows * gram;  // E (E^T E)
  for (long n = 0; n < N; ++n) grad.row(n) -= sums.row(targets.labels[n]);
  double n2 = static_cast<double>(N) * N;
  return grad * (4.0 / n2);
}

Eigen::MatrixXd NormalizationBackward(const EmbeddingField& emb,
                                      const Eigen::VectorXd& norms,
                                      const Eigen::MatrixXd& grad_emb) {
  Eigen::MatrixXd out(grad_emb.rows(), grad_emb.cols());
  for (long n = 0; n < grad_emb.rows(); ++n) {
    Eigen::RowVectorXd e = emb.rows.row(n);
    Eigen::RowVectorXd g = grad_emb.row(n);
    out.row(n) = (g - (e.dot(g)) * e) / norms(n);
  }
  return out;
}

void ParamGrads::SetZero(const StudentNet& net) {
  w1.setZero(net.w1.rows(), net.w1.cols());
  w2.setZero(net.w2.rows(), net.w2.cols());
  w3.setZero(net.w3.rows(), net.w3.cols());
  b1.setZero(net.b1.size());
  b2.setZero(net.b2.size());
  b3.setZero(net.b3.size());
}

void ParamGrads::Add(const ParamGrads& other) {
  w1 += other.w1;
  w2 += other.w2;
  w3 += other.w3;
  b1 += other.b1;
  b2 += other.b2;
  b3 += other.b3;
}

double ParamGrads::SquaredNorm() const {
  return w1.squaredNorm() + w2.squaredNorm() + w3.squaredNorm() +
         b1.squaredNorm() + b2.squaredNorm() + b3.squaredNorm();
}

ParamGrads BackwardUtterance(const StudentNet& net, const FeatureField& feats,
                             const TargetAssignment& targets,
                             double* loss_out) {
  ForwardCache cache;
  EmbeddingField emb = ForwardWithCache(net, feats, &cache);
  if (loss_out != nullptr) *loss_out = DcLoss(emb.rows, targets);

  Eigen::MatrixXd grad_emb = DcLossGrad(emb.rows, targets);
  Eigen::MatrixXd grad_v_rows = NormalizationBackward(emb, cache.norms, grad_emb);

  const int T = feats.T, F = net.F, E = net.E;
  Eigen::MatrixXd grad_v(T, F * E);
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f)
      grad_v.block(t, f * E, 1, E) = grad_v_rows.row(static_cast<long>(t) * F + f);

  ParamGrads grads;
  grads.w3 = grad_v.transpose() * cache.h2;
  grads.b3 = grad_v.colwise().sum();
  Eigen::MatrixXd grad_h2 = grad_v * net.w3;
  Eigen::MatrixXd grad_a2 =
      grad_h2.array() * (1.0 - cache.h2.array().square());
  grads.w2 = grad_a2.transpose() * cache.h1;
  grads.b2 = grad_a2.colwise().sum();
  Eigen::MatrixXd grad_h1 = grad_a2 * net.w2;
  Eigen::MatrixXd grad_a1 =
      grad_h1.array() * (1.0 - cache.h1.array().square());
  grads.w1 = grad_a1.transpose() * cache.x;
  grads.b1 = grad_a1.colwise().sum();
  return grads;
}

TrainLog Train(StudentNet* net, const std::vector<TrainExample>& corpus,
               const TrainConfig& cfg) {
  Require(!corpus.empty(), "Train: empty corpus");
  Require(cfg.learning_rate >= 0.0, "Train: negative learning rate");
  Require(cfg.batch_size >= 1 && cfg.max_steps >= 1 && cfg.patience >= 1,
          "Train: config values must be positive");
  Require(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0,
          "Train: validation fraction must be in (0, 1)");
  for (const auto& ex : corpus) {
    Require(ex.features.F == net->F, "Train: feature bins mismatch");
    Require(static_cast<long>(ex.targets.labels.size()) ==
                static_cast<long>(ex.features.T) * ex.features.F,
            "Train: target size mismatch");
  }

  // Disjoint validation split from a seeded shuffle.
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(SplitSeed(cfg.seed, 0x53117));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[split_rng.UniformInt(i)]);
  int val_count = static_cast<int>(
      std::ceil(cfg.validation_fraction * corpus.size()));
  val_count = std::min<int>(val_count, static_cast<int>(corpus.size()) - 1);
  Require(val_count >= 1, "Train: corpus too small for a validation split");
  std::vector<int> val_set(order.end() - val_count, order.end());
  std::vector<int> train_set(order.begin(), order.end() - val_count);

  auto eval_validation = [&]() {
    double total = 0.0;
    for (int idx : val_set) {
      EmbeddingField emb = Forward(*net, corpus[idx].features);
      total += DcLoss(emb.rows, corpus[idx].targets);
    }
    return total / val_set.size();
  };

  const int steps_per_epoch =
      (static_cast<int>(train_set.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int eval_every = cfg.eval_every > 0 ? cfg.eval_every : steps_per_epoch;

  ParamGrads velocity;
  velocity.SetZero(*net);
  StudentNet best_net = *net;
  TrainLog log;
  log.best_val = eval_validation();
  log.val_loss.push_back(log.best_val);
  log.eval_steps.push_back(0);
  log.best_eval = 0;
  int evals_since_best = 0;

  Rng batch_rng(SplitSeed(cfg.seed, 0xba7c4));
  std::vector<int> epoch_order = train_set;
  size_t epoch_pos = epoch_order.size();

  for (int step = 0; step < cfg.max_steps; ++step) {
    // Draw the next batch from a reshuffled epoch ordering.
    std::vector<int> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (epoch_pos >= epoch_order.size()) {
        for (size_t i = epoch_order.size(); i > 1; --i)
          std::swap(epoch_order[i - 1], epoch_order[batch_rng.UniformInt(i)]);
        epoch_pos = 0;
      }
      batch.push_back(epoch_order[epoch_pos++]);
    }

    std::vector<ParamGrads> grads(batch.size());
    std::vector<double> losses(batch.size(), 0.0);
    ParallelFor(batch.size(), cfg.workers, [&](size_t i) {
      grads[i] = BackwardUtterance(*net, corpus[batch[i]].features,
                                   corpus[batch[i]].targets, &losses[i]);
    });
    ParamGrads total = std::move(grads[0]);
    for (size_t i = 1; i < grads.size(); ++i) total.Add(grads[i]);
    double inv = 1.0 / batch.size();
    double step_loss =
        std::accumulate(losses.begin(), losses.end(), 0.0) * inv;
    Require(std::isfinite(step_loss),
            "Train: loss diverged (non-finite) at step " + std::to_string(step));
    log.step_loss.push_back(step_loss);

    double gnorm = std::sqrt(total.SquaredNorm()) * inv;
    double scale = inv;
    if (gnorm > cfg.clip_norm && gnorm > 0.0) scale *= cfg.clip_norm / gnorm;

    auto update = [&](Eigen::MatrixXd& vel, const Eigen::MatrixXd& g,
                      Eigen::MatrixXd& param) {
      vel = cfg.momentum * vel - cfg.learning_rate * scale * g;
      param += vel;
    };
    auto update_vec = [&](Eigen::VectorXd& vel, const Eigen::VectorXd& g,
                          Eigen::VectorXd& param) {
      vel = cfg.momentum * vel - cfg.learning_rate * scale * g;
      param += vel;
    };
    update(velocity.w1, total.w1, net->w1);
    update(velocity.w2, total.w2, net->w2);
    update(velocity.w3, total.w3, net->w3);
    update_vec(velocity.b1, total.b1, net->b1);
    update_vec(velocity.b2, total.b2, net->b2);
    update_vec(velocity.b3, total.b3, net->b3);
    log.steps_run = step + 1;

    if ((step + 1) % eval_every == 0) {
      double val = eval_validation();
      log.val_loss.push_back(val);
      log.eval_steps.push_back(step + 1);
      if (val < log.best_val) {
        log.best_val = val;
        log.best_eval = static_cast<int>(log.val_loss.size()) - 1;
        best_net = *net;
        evals_since_best = 0;
      } else if (++evals_since_best >= cfg.patience) {
        break;
      }
    }
  }
  *net = best_net;
  return log;
}

MaskSet PredictMasks(const StudentNet& net, const FeatureField& feats,
                     int kmeans_restarts, uint64_t seed) {
  EmbeddingField emb = Forward(net, feats);
  KmeansResult km = Kmeans(emb.rows, net.num_classes, kmeans_restarts, seed);
  MaskSet masks = LabelsToMasks(km.labels, feats.T, feats.F, net.num_classes);
  return masks;
}

void SaveStudent(const StudentNet& net, const std::string& path) {
  std::vector<double> flat;
  auto append = [&flat](const Eigen::MatrixXd& m) {
    for (long j = 0; j < m.cols(); ++j)
      for (long i = 0; i < m.rows(); ++i) flat.push_back(m(i, j));
  };
  append(net.w1);
  append(net.w2);
  append(net.w3);
  for (long i = 0; i < net.b1.size(); ++i) flat.push_back(net.b1(i));
  for (long i = 0; i < net.b2.size(); ++i) flat.push_back(net.b2(i));
  for (long i = 0; i < net.b3.size(); ++i) flat.push_back(net.b3(i));
  WriteRealTensor(path, {flat.size()}, flat);

  nlohmann::json desc;
  desc["bins"] = net.F;
  desc["embed_dim"] = net.E;
  desc["hidden"] = net.hidden;
  desc["context"] = net.context;
  desc["num_classes"] = net.num_classes;
  desc["seed"] = net.seed;
  std::string tmp = path + ".json.tmp";
  {
    std::ofstream out(tmp);
    Require(out.good(), "SaveStudent: cannot open " + tmp);
    out << desc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path + ".json");
}

StudentNet LoadStudent(const std::string& path) {
  std::ifstream in(path + ".json");
  Require(in.good(), "LoadStudent: missing descriptor " + path + ".json");
  nlohmann::json desc = nlohmann::json::parse(in);
  StudentNet net = InitStudent(desc.at("bins"), desc.at("embed_dim"),
                               desc.at("hidden"), desc.at("context"),
                               desc.at("num_classes"), desc.value("seed", 0));
  TensorFile t = ReadTensor(path);
  std::vector<double> flat = RealValues(t);
  Require(static_cast<long>(flat.size()) == net.NumParams(),
          "LoadStudent: parameter count mismatch");
  size_t pos = 0;
  auto take = [&](Eigen::MatrixXd& m) {
    for (long j = 0; j < m.cols(); ++j)
      for (long i = 0; i < m.rows(); ++i) m(i, j) = flat[pos++];
  };
  take(net.w1);
  take(net.w2);
  take(net.w3);
  for (long i = 0; i < net.b1.size(); ++i) net.b1(i) = flat[pos++];
  for (long i = 0; i < net.b2.size(); ++i) net.b2(i) = flat[pos++];
  for (long i = 0; i < net.b3.size(); ++i) net.b3(i) = flat[pos++];
  return net;
}

}  // namespace bss
