// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_DC_STUDENT_H_
#define BSS_DC_STUDENT_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bss/cacgmm.h"
#include "bss/stft.h"

namespace bss {

// Per-utterance standardized log-magnitude features of the first channel.
struct FeatureField {
  int T = 0;
  int F = 0;
  Eigen::MatrixXd values;  // T x F
};

FeatureField ExtractFeatures(const Spectrogram& y1);

// Unit-norm embedding vectors for every time-frequency slot, stacked
// t-major: row n = t * F + f.
struct EmbeddingField {
  int T = 0;
  int F = 0;
  int E = 0;
  Eigen::MatrixXd rows;  // (T*F) x E
};

// Hard class labels per slot, t-major; the one-hot matrix C is implied.
struct TargetAssignment {
  int num_classes = 0;
  std::vector<int> labels;  // length T*F
};

TargetAssignment HardenTargets(const MaskSet& masks);

// Frame-context MLP: a window of `context` feature frames maps to F unit-norm
// E-dimensional embeddings through two tanh layers.
struct StudentNet {
  int F = 0;
  int E = 20;
  int hidden = 256;
  int context = 5;  // odd window length in frames
  int num_classes = 3;
  uint64_t seed = 0;
  Eigen::MatrixXd w1, w2, w3;  // hidden x (context*F), hidden x hidden, (F*E) x hidden
  Eigen::VectorXd b1, b2, b3;

  long NumParams() const {
    return w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
  }
};

StudentNet InitStudent(int F, int E, int hidden, int context, int num_classes,
                       uint64_t seed);

struct ForwardCache {
  Eigen::MatrixXd x;       // T x (context*F)
  Eigen::MatrixXd h1, h2;  // T x hidden
  Eigen::MatrixXd v;       // T x (F*E), pre-normalization
  Eigen::VectorXd norms;   // T*F slot norms
};

EmbeddingField Forward(const StudentNet& net, const FeatureField& feats);
EmbeddingField ForwardWithCache(const StudentNet& net,
                                const FeatureField& feats, ForwardCache* cache);

// Affinity loss ||E E^T - C C^T||_F^2 / (T F)^2 via the Gram expansion; the
// (TF)^2 affinity matrices are never materialized.
double DcLoss(const Eigen::MatrixXd& emb_rows, const TargetAssignment& targets);

// d loss / d embeddings, same shape as emb_rows.
Eigen::MatrixXd DcLossGrad(const Eigen::MatrixXd& emb_rows,
                           const TargetAssignment& targets);

// Pull an embedding gradient back through the per-slot unit normalization.
Eigen::MatrixXd NormalizationBackward(const EmbeddingField& emb,
                                      const Eigen::VectorXd& norms,
                                      const Eigen::MatrixXd& grad_emb);

struct ParamGrads {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  void SetZero(const StudentNet& net);
  void Add(const ParamGrads& other);
  double SquaredNorm() const;
};

// Gradient of DcLoss w.r.t. every parameter for one utterance.
ParamGrads BackwardUtterance(const StudentNet& net, const FeatureField& feats,
                             const TargetAssignment& targets, double* loss_out);

struct TrainConfig {
  double learning_rate = 0.5;
  int batch_size = 4;
  int max_steps = 2000;
  int patience = 5;
  double validation_fraction = 0.1;
  uint64_t seed = 0;
  int eval_every = 0;  // 0: once per epoch
  double momentum = 0.9;
  double clip_norm = 5.0;
  int workers = 1;
};

struct TrainExample {
  FeatureField features;
  TargetAssignment targets;
};

struct TrainLog {
  std::vector<double> step_loss;
  std::vector<int> eval_steps;
  std::vector<double> val_loss;
  double best_val = 0.0;
  int best_eval = -1;
  int steps_run = 0;
};

TrainLog Train(StudentNet* net, const std::vector<TrainExample>& corpus,
               const TrainConfig& cfg);

MaskSet PredictMasks(const StudentNet& net, const FeatureField& feats,
                     int kmeans_restarts, uint64_t seed);

void SaveStudent(const StudentNet& net, const std::string& path);
StudentNet LoadStudent(const std::string& path);

}  // namespace bss

#endif  // BSS_DC_STUDENT_H_
