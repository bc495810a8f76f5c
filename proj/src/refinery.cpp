#include "plr/refinery.hpp"

#include <atomic>
#include <cmath>

#include "plr/parallel.hpp"

namespace plr {

std::optional<std::string> validate(const RefineryConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) return "alpha must be in [0, 1]";
    if (auto bad = validate(cfg.propagation)) return "propagation: " + *bad;
    return std::nullopt;
}

LabelVector refine_label(const LabelVector& current, const LabelVector& propagated,
                         double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw PreconditionError("refine_label: alpha must be in [0, 1]");
    if (current.num_classes() != propagated.num_classes())
        throw DimensionError("refine_label: class count mismatch");
    LabelVector out;
    out.weights.resize(current.weights.size());
    const double keep = 1.0 - alpha;
    for (std::size_t j = 0; j < out.weights.size(); ++j)
        out.weights[j] = alpha * current.weights[j] + keep * propagated.weights[j];
    return out;
}

double refined_cross_entropy(const LabelVector& confidence, const LabelVector& refined,
                             long* clamp_count) {
    if (confidence.num_classes() != refined.num_classes())
        throw DimensionError("refined_cross_entropy: class count mismatch");
    double ce = 0.0;
    for (std::size_t j = 0; j < refined.weights.size(); ++j) {
        const double y = refined.weights[j];
        if (y == 0.0) continue;
        double p = confidence.weights[j];
        if (p < 1e-12) {
            p = 1e-12;
            if (clamp_count) ++*clamp_count;
        }
        ce -= y * std::log(p);
    }
    return ce;
}

GenerationState::GenerationState(Partition partition, LabelMatrix refined_labels,
                                 ConsensusMatrix consensus, PrototypeBank bank)
    : partition_(std::move(partition)),
      refined_labels_(std::move(refined_labels)),
      consensus_(std::move(consensus)),
      bank_(std::move(bank)) {
    if (auto bad = validate(partition_))
        throw PreconditionError("GenerationState: invalid partition: " + *bad);
    if (refined_labels_.num_samples() != partition_.size())
        throw DimensionError("GenerationState: labels and partition disagree on N");
    if (refined_labels_.num_classes() != partition_.num_clusters())
        throw DimensionError("GenerationState: labels and partition disagree on M");
    if (consensus_.cols() != partition_.num_clusters())
        throw DimensionError("GenerationState: consensus cols do not match clusters");
    if (bank_.num_classes() != partition_.num_clusters())
        throw DimensionError("GenerationState: bank classes do not match clusters");
}

GenerationState GenerationState::with_prototype_bank(PrototypeBank bank) const {
    return GenerationState(partition_, refined_labels_, consensus_, std::move(bank));
}

GenerationState run_generation(const std::optional<GenerationState>& prev,
                               const EmbeddingSet& embeddings, const RefineryConfig& cfg,
                               const Clusterer& clusterer, int num_threads) {
    if (auto bad = validate(cfg))
        throw PreconditionError("run_generation: invalid config: " + *bad);
    if (auto bad = validate(embeddings))
        throw PreconditionError("run_generation: invalid embeddings: " + *bad);
    if (prev && prev->partition().size() != embeddings.size())
        throw DimensionError("run_generation: embeddings and previous state disagree on N");

    const int next_gen = prev ? prev->generation_id() + 1 : 0;
    Partition fresh = clusterer(embeddings);
    if (auto bad = validate(fresh))
        throw PreconditionError("run_generation: clusterer returned invalid partition: " + *bad);
    if (fresh.size() != embeddings.size())
        throw DimensionError("run_generation: clusterer returned wrong sample count");
    Partition partition(fresh.assignment(), fresh.num_clusters(), next_gen);

    if (!prev) {
        // Bootstrap: nothing to propagate from.
        LabelMatrix refined = LabelMatrix::one_hots(partition);
        ConsensusMatrix consensus = identity_consensus(partition);
        PrototypeBank bank =
            bank_from_centroids(partition, embeddings, next_gen, SnapshotTag::kBegin);
        return GenerationState(std::move(partition), std::move(refined),
                               std::move(consensus), std::move(bank));
    }

    const ConsensusMatrix consensus =
        normalize_rows(compute_consensus(prev->partition(), partition));
    const PrototypeBank& prev_bank = prev->prototype_bank();
    const PropagationConfig& prop = cfg.propagation;
    if (prop.mode != PropagationMode::kHard && prev_bank.dim() != embeddings.dim())
        throw DimensionError("run_generation: bank and embeddings disagree on dim");

    const int n = partition.size();
    Matrix refined_values(n, partition.num_clusters(), 0.0);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    parallel_for(n, num_threads, [&](int k) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
            LabelVector propagated;
            switch (prop.mode) {
                case PropagationMode::kHard:
                    propagated = propagate_hard(consensus, prev->partition(), k);
                    break;
                case PropagationMode::kSoft:
                    propagated = propagate_soft(
                        consensus,
                        prototype_confidence(prev_bank, embeddings.row(k),
                                             prop.temperature));
                    break;
                case PropagationMode::kBlend:
                    propagated = propagate_blend(
                        consensus, prev->partition(), k,
                        prototype_confidence(prev_bank, embeddings.row(k),
                                             prop.temperature),
                        prop.beta);
                    break;
            }
            const LabelVector refined =
                refine_label(one_hot(partition, k), propagated, cfg.alpha);
            const auto row = refined_values.row(k);
            std::copy(refined.weights.begin(), refined.weights.end(), row.begin());
        } catch (...) {
            if (!failed.exchange(true)) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);

    PrototypeBank bank =
        bank_from_centroids(partition, embeddings, next_gen, SnapshotTag::kBegin);
    return GenerationState(std::move(partition),
                           LabelMatrix(std::move(refined_values), next_gen),
                           std::move(consensus), std::move(bank));
}

}  // namespace plr
