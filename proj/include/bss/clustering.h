// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_CLUSTERING_H_
#define BSS_CLUSTERING_H_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bss/cacgmm.h"

namespace bss {

struct KmeansResult {
  std::vector<int> labels;    // length N, values in [0, k)
  Eigen::MatrixXd centroids;  // k x E
  double inertia = 0.0;       // sum of squared distances to assigned centroid
};

// Lloyd iterations from k-means++ seeding, best of `restarts` by inertia.
KmeansResult Kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    uint64_t seed);

// One-hot masks from flat t-major slot labels.
MaskSet LabelsToMasks(const std::vector<int>& labels, int T, int F, int k);

}  // namespace bss

#endif  // BSS_CLUSTERING_H_
