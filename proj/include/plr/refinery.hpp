#pragma once

#include <functional>
#include <optional>

#include "plr/clustering.hpp"
#include "plr/consensus.hpp"
#include "plr/learner.hpp"
#include "plr/partition.hpp"
#include "plr/propagation.hpp"

namespace plr {

struct RefineryConfig {
    double alpha = 0.9;  // weight of the current generation's one-hot labels
    PropagationConfig propagation;
    SnapshotTag prototype_snapshot = SnapshotTag::kBegin;
};

std::optional<std::string> validate(const RefineryConfig& cfg);

// Momentum ensembling: alpha * current + (1 - alpha) * propagated. Output is
// entrywise convex between the inputs and stays on the simplex.
LabelVector refine_label(const LabelVector& current, const LabelVector& propagated,
                         double alpha);

// -sum_j refined(j) * log(confidence(j)). Confidences are clamped at 1e-12
// (tau=30 legitimately underflows); clamp events are counted into
// *clamp_count when provided so run reports can surface them.
double refined_cross_entropy(const LabelVector& confidence, const LabelVector& refined,
                             long* clamp_count = nullptr);

// Everything one generation hands to the next. Immutable after construction.
class GenerationState {
public:
    GenerationState(Partition partition, LabelMatrix refined_labels,
                    ConsensusMatrix consensus, PrototypeBank bank);

    int generation_id() const { return partition_.generation_id(); }
    const Partition& partition() const { return partition_; }
    const LabelMatrix& refined_labels() const { return refined_labels_; }
    const ConsensusMatrix& consensus() const { return consensus_; }
    const PrototypeBank& prototype_bank() const { return bank_; }

    // Same state with the bank swapped (used to carry the end-of-generation
    // snapshot forward when configured).
    GenerationState with_prototype_bank(PrototypeBank bank) const;

private:
    Partition partition_;
    LabelMatrix refined_labels_;
    ConsensusMatrix consensus_;
    PrototypeBank bank_;
};

using Clusterer = std::function<Partition(const EmbeddingSet&)>;

// One generation step: cluster the embeddings, compute normalized consensus
// against the previous partition, propagate the previous labels through it
// (per cfg.propagation, with confidences from the previous bank applied to
// the current embeddings), and blend with the fresh one-hots via alpha.
// Bootstrap (no prev): refined labels are exact one-hots, consensus is the
// identity over the fresh clusters. The returned bank is the
// begin-of-generation snapshot (member centroids of the fresh partition).
// Propagation/refinement is data-parallel over samples; results are
// bit-identical for any num_threads.
GenerationState run_generation(const std::optional<GenerationState>& prev,
                               const EmbeddingSet& embeddings, const RefineryConfig& cfg,
                               const Clusterer& clusterer, int num_threads = 1);

}  // namespace plr
