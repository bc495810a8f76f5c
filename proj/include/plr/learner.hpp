#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plr/clustering.hpp"
#include "plr/matrix.hpp"
#include "plr/partition.hpp"

namespace plr {

enum class SnapshotTag { kBegin, kEnd };

std::string snapshot_tag_name(SnapshotTag tag);
SnapshotTag parse_snapshot_tag(const std::string& name);  // throws ParseError

// Per-cluster unit-norm prototype vectors acting as a non-parametric
// classifier head; logits are temperature-scaled inner products.
class PrototypeBank {
public:
    PrototypeBank(Matrix prototypes, int generation_id, SnapshotTag tag);

    int num_classes() const { return prototypes_.rows(); }
    int dim() const { return prototypes_.cols(); }
    int generation_id() const { return generation_id_; }
    SnapshotTag tag() const { return tag_; }

    std::span<const double> prototype(int cls) const { return prototypes_.row(cls); }
    const Matrix& prototypes() const { return prototypes_; }
    Matrix& prototypes() { return prototypes_; }

    bool operator==(const PrototypeBank&) const = default;

private:
    Matrix prototypes_;
    int generation_id_ = 0;
    SnapshotTag tag_ = SnapshotTag::kBegin;
};

// nullopt when every prototype row norm is 1 within 1e-6.
std::optional<std::string> validate(const PrototypeBank& w);

// Deep copy with the tag replaced; later training of the original never
// touches the copy.
PrototypeBank snapshot(const PrototypeBank& w, SnapshotTag tag);

// Bank initialization: normalized mean of each cluster's member embeddings.
// A mean that cancels to (near) zero falls back to the first member's row so
// the bank invariant holds for any input.
PrototypeBank bank_from_centroids(const Partition& p, const EmbeddingSet& e,
                                  int generation_id, SnapshotTag tag = SnapshotTag::kBegin);

// softmax(tau * W * f); same math as prototype_confidence (propagation
// module), shared implementation.
LabelVector class_logits(const PrototypeBank& w, std::span<const double> f, double tau);

struct LossGrads {
    double loss = 0.0;
    Matrix grad_prototypes;  // M x L
    Matrix grad_embeddings;  // N x L
};

// Mean cross-entropy of softmax(tau * W * f_k) against labels row k, with
// closed-form gradients for both parameter blocks: dl/dlogit = p - y, so
// dL/dW_m = (tau/N) * sum_k (p_k[m] - y_k[m]) f_k and
// dL/df_k = (tau/N) * W^T (p_k - y_k).
LossGrads loss_and_grads(const PrototypeBank& w, const EmbeddingSet& e,
                         const LabelMatrix& labels, double tau);

struct TrainReport {
    int epochs_run = 0;
    std::vector<double> loss_trace;   // loss at the start of each epoch
    double grad_check_error = 0.0;    // max relative error of a fixed FD probe
};

struct TrainResult {
    PrototypeBank bank;
    EmbeddingSet embeddings;
    TrainReport report;
};

// Full-batch projected gradient descent on both W and E: step, then
// re-normalize every row back to the unit sphere. The returned bank carries
// the end-of-generation tag. Loss decrease is not guaranteed (projection can
// fight the step) and is not asserted anywhere.
TrainResult train_generation(const PrototypeBank& w, const EmbeddingSet& e,
                             const LabelMatrix& labels, double tau, double lr,
                             int epochs);

void write_bank(std::ostream& out, const PrototypeBank& w);
PrototypeBank read_bank(std::istream& in);

}  // namespace plr
