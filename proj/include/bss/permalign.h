// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_PERMALIGN_H_
#define BSS_PERMALIGN_H_

#include <vector>

#include "bss/cacgmm.h"

namespace bss {

// Per-frequency class relabeling: output class k at bin f is input class
// perm[f][k].
struct PermutationMap {
  std::vector<std::vector<int>> perm;
};

struct AlignResult {
  MaskSet masks;  // stage kAligned
  PermutationMap map;
};

// Resolve the frequency permutation problem by iteratively permuting each
// bin's classes to best correlate with global class centroids.
AlignResult Align(const MaskSet& raw);

// Sum over bins and classes of the Pearson correlation between each class
// mask row and its across-frequency centroid. Higher is more consistent.
double AlignmentScore(const MaskSet& masks);

}  // namespace bss

#endif  // BSS_PERMALIGN_H_
