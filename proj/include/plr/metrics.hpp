#pragma once

#include <vector>

#include "plr/partition.hpp"

namespace plr {

// External clustering-quality scores for a predicted partition vs ground
// truth. `ari` here is the pair-counting Rand score rescaled to [-1, 1]
// (agreeing pairs minus disagreeing pairs over all pairs); `nmi` uses
// arithmetic-mean normalization. Pairwise P/R/F treat "same cluster" as the
// positive class over all sample pairs.
struct ClusterMetrics {
    double ari = 0.0;
    double nmi = 0.0;
    double pair_precision = 0.0;
    double pair_recall = 0.0;
    double pair_f1 = 0.0;
};

ClusterMetrics compare_labels(const std::vector<int>& pred, const std::vector<int>& truth);
ClusterMetrics compare_partitions(const Partition& pred, const Partition& truth);

// Hard labels from a soft label matrix (smallest index wins ties).
std::vector<int> argmax_labels(const LabelMatrix& labels);

// Cross-entropy of soft labels against ground truth when the label classes
// are clusters, not identities: each cluster is mapped to its majority truth
// identity (ties: smaller id), per-sample mass is summed per identity, and
// CE_k = -log(mass on the true identity), clamped at 1e-12 (clamp events
// counted into *clamp_count when provided). Returns the mean over samples.
double cross_entropy_vs_truth(const LabelMatrix& labels, const Partition& clusters,
                              const Partition& truth, long* clamp_count = nullptr);

}  // namespace plr
