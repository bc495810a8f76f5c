#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "plr/errors.hpp"
#include "plr/learner.hpp"
#include "plr/partition.hpp"
#include "plr/propagation.hpp"
#include "plr/rng.hpp"

using plr::EmbeddingSet;
using plr::LabelMatrix;
using plr::Partition;
using plr::PrototypeBank;
using plr::SnapshotTag;

namespace {

// Standard-basis rows: norms are exactly 1.0, so projection is a bitwise
// no-op and "unchanged parameters" can be asserted with operator==.
plr::Matrix basis_rows(const std::vector<int>& axes, int dim) {
    plr::Matrix m(static_cast<int>(axes.size()), dim, 0.0);
    for (int i = 0; i < m.rows(); ++i) m.at(i, axes[static_cast<std::size_t>(i)]) = 1.0;
    return m;
}

// Two noisy blobs around e0 and e1 with correct one-hot labels.
struct BlobInstance {
    EmbeddingSet embeddings;
    Partition partition;
};

BlobInstance two_blobs(std::uint64_t seed, int per_blob, int dim, double spread) {
    plr::SplitMix64 rng(seed);
    plr::Matrix f(2 * per_blob, dim, 0.0);
    std::vector<int> labels(static_cast<std::size_t>(2 * per_blob), 0);
    for (int k = 0; k < 2 * per_blob; ++k) {
        const int blob = k / per_blob;
        labels[static_cast<std::size_t>(k)] = blob;
        const auto row = f.row(k);
        row[static_cast<std::size_t>(blob)] = 1.0;
        for (int c = 0; c < dim; ++c) row[static_cast<std::size_t>(c)] += spread * rng.next_gaussian();
        plr::normalize_l2(row);
    }
    return BlobInstance{EmbeddingSet(std::move(f)), Partition(std::move(labels), 2, 0)};
}

}  // namespace

TEST_CASE("snapshot tags round-trip by name") {
    CHECK(plr::snapshot_tag_name(SnapshotTag::kBegin) == "begin");
    CHECK(plr::snapshot_tag_name(SnapshotTag::kEnd) == "end");
    CHECK(plr::parse_snapshot_tag("begin") == SnapshotTag::kBegin);
    CHECK(plr::parse_snapshot_tag("end") == SnapshotTag::kEnd);
    CHECK_THROWS_AS(plr::parse_snapshot_tag("middle"), plr::ParseError);
}

TEST_CASE("bank validation flags non-unit prototypes") {
    plr::Matrix w(1, 2, 0.0);
    w.at(0, 0) = 2.0;
    CHECK(plr::validate(PrototypeBank(std::move(w), 0, SnapshotTag::kBegin)).has_value());
    CHECK(!plr::validate(PrototypeBank(basis_rows({0, 1}, 2), 0, SnapshotTag::kBegin))
               .has_value());
}

TEST_CASE("centroid bank averages members and renormalizes") {
    // Cluster 0 holds e0 and e1: centroid (.5,.5,0) -> normalized (r,r,0).
    plr::Matrix f = basis_rows({0, 1, 2}, 3);
    const EmbeddingSet e(std::move(f));
    const Partition p({0, 0, 1}, 2, 3);
    const PrototypeBank bank = plr::bank_from_centroids(p, e, 3);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(bank.generation_id() == 3);
    CHECK(bank.tag() == SnapshotTag::kBegin);
    CHECK(bank.prototype(0)[0] == doctest::Approx(r).epsilon(1e-15));
    CHECK(bank.prototype(0)[1] == doctest::Approx(r).epsilon(1e-15));
    CHECK(bank.prototype(0)[2] == 0.0);
    CHECK(bank.prototype(1)[2] == 1.0);
    CHECK(!plr::validate(bank).has_value());
}

TEST_CASE("centroid bank falls back to the first member when the mean cancels") {
    plr::Matrix f(2, 2, 0.0);
    f.at(0, 0) = 1.0;
    f.at(1, 0) = -1.0;  // exactly antipodal: mean is the zero vector
    const EmbeddingSet e(std::move(f));
    const Partition p({0, 0}, 1);
    const PrototypeBank bank = plr::bank_from_centroids(p, e, 0);
    CHECK(bank.prototype(0)[0] == 1.0);
    CHECK(bank.prototype(0)[1] == 0.0);
}

TEST_CASE("snapshots are deep copies") {
    PrototypeBank w(basis_rows({0, 1}, 2), 4, SnapshotTag::kBegin);
    PrototypeBank frozen = plr::snapshot(w, SnapshotTag::kBegin);
    w.prototypes().at(0, 0) = 0.25;
    CHECK(frozen.prototype(0)[0] == 1.0);
    CHECK(frozen.generation_id() == 4);
    const PrototypeBank twice = plr::snapshot(plr::snapshot(frozen, SnapshotTag::kEnd),
                                              SnapshotTag::kEnd);
    CHECK(twice.prototypes() == frozen.prototypes());
    CHECK(twice.tag() == SnapshotTag::kEnd);
}

TEST_CASE("class_logits peaks at the matching prototype and sums to one") {
    const PrototypeBank w(basis_rows({0, 1, 2}, 3), 0, SnapshotTag::kBegin);
    const EmbeddingSet e(basis_rows({1}, 3));
    const plr::LabelVector v = plr::class_logits(w, e.row(0), 30.0);
    CHECK(v.argmax() == 1);
    CHECK(!plr::validate(v).has_value());
}

TEST_CASE("single-sample orthonormal loss is ln(1 + 1/e)") {
    // logits (tau * 1, tau * 0) = (1, 0); CE against [1,0] is ln(1+e^-1).
    const PrototypeBank w(basis_rows({0, 1}, 2), 0, SnapshotTag::kBegin);
    const EmbeddingSet e(basis_rows({0}, 2));
    plr::Matrix y(1, 2, 0.0);
    y.row(0)[0] = 1.0;
    const LabelMatrix labels(std::move(y), 0);
    const plr::LossGrads lg = plr::loss_and_grads(w, e, labels, 1.0);
    CHECK(lg.loss == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-14));
}

TEST_CASE("labels equal to the model's own confidences give zero gradients bitwise") {
    plr::SplitMix64 rng(73);
    const PrototypeBank w = oracle::random_bank(rng, 3, 4);
    const EmbeddingSet e = oracle::random_embeddings(rng, 5, 4);
    plr::Matrix matched(5, 3, 0.0);
    for (int k = 0; k < 5; ++k) {
        const plr::LabelVector conf = plr::prototype_confidence(w, e.row(k), 7.0);
        std::copy(conf.weights.begin(), conf.weights.end(), matched.row(k).begin());
    }
    const plr::LossGrads lg =
        plr::loss_and_grads(w, e, LabelMatrix(std::move(matched), 0), 7.0);
    for (double g : lg.grad_prototypes.data()) CHECK(g == 0.0);
    for (double g : lg.grad_embeddings.data()) CHECK(g == 0.0);
}

TEST_CASE("analytic gradients match full central differences on random instances") {
    plr::SplitMix64 rng(1618);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(7));   // <= 8
        const int m = 2 + static_cast<int>(rng.next_below(3));   // <= 4
        const int dim = 2 + static_cast<int>(rng.next_below(5)); // <= 6
        const double tau = 0.5 + 2.5 * rng.next_double();
        const PrototypeBank w = oracle::random_bank(rng, m, dim);
        const EmbeddingSet e = oracle::random_embeddings(rng, n, dim);
        const LabelMatrix labels = oracle::random_label_matrix(rng, n, m);
        CHECK(oracle::max_grad_rel_error(w, e, labels, tau) < 1e-5);
    }
}

TEST_CASE("one-hot labels also pass the finite-difference check") {
    const BlobInstance blobs = two_blobs(3, 4, 3, 0.15);
    const PrototypeBank w = plr::bank_from_centroids(blobs.partition, blobs.embeddings, 0);
    const LabelMatrix labels = LabelMatrix::one_hots(blobs.partition);
    CHECK(oracle::max_grad_rel_error(w, blobs.embeddings, labels, 2.0) < 1e-5);
}

TEST_CASE("loss_and_grads rejects inconsistent shapes and bad labels") {
    const PrototypeBank w(basis_rows({0, 1}, 2), 0, SnapshotTag::kBegin);
    const EmbeddingSet e(basis_rows({0, 1}, 2));
    const LabelMatrix good = LabelMatrix::one_hots(Partition({0, 1}, 2));
    CHECK_THROWS_AS(
        plr::loss_and_grads(w, EmbeddingSet(basis_rows({0}, 2)), good, 1.0),
        plr::DimensionError);
    CHECK_THROWS_AS(
        plr::loss_and_grads(w, e, LabelMatrix::one_hots(Partition({0, 1, 2}, 3)), 1.0),
        plr::DimensionError);
    CHECK_THROWS_AS(plr::loss_and_grads(w, e, good, 0.0), plr::PreconditionError);
    plr::Matrix bad(2, 2, 0.9);  // rows sum to 1.8
    CHECK_THROWS_AS(plr::loss_and_grads(w, e, LabelMatrix(std::move(bad), 0), 1.0),
                    plr::PreconditionError);
}

TEST_CASE("training with matched labels is a fixed point") {
    // Basis rows have norm exactly 1, so even the projection step is exact.
    const PrototypeBank w(basis_rows({0, 1}, 3), 0, SnapshotTag::kBegin);
    const EmbeddingSet e(basis_rows({0, 1, 2}, 3));
    plr::Matrix matched(3, 2, 0.0);
    for (int k = 0; k < 3; ++k) {
        const plr::LabelVector conf = plr::prototype_confidence(w, e.row(k), 4.0);
        std::copy(conf.weights.begin(), conf.weights.end(), matched.row(k).begin());
    }
    const plr::TrainResult out =
        plr::train_generation(w, e, LabelMatrix(std::move(matched), 0), 4.0, 0.5, 5);
    CHECK(out.bank.prototypes() == w.prototypes());
    CHECK(out.embeddings == e);
    REQUIRE(out.report.loss_trace.size() == 5);
    for (double l : out.report.loss_trace) CHECK(l == out.report.loss_trace[0]);
}

TEST_CASE("separable blobs with correct labels train to a lower loss") {
    const BlobInstance blobs = two_blobs(11, 6, 4, 0.1);
    const PrototypeBank w = plr::bank_from_centroids(blobs.partition, blobs.embeddings, 0);
    const LabelMatrix labels = LabelMatrix::one_hots(blobs.partition);
    const plr::TrainResult out =
        plr::train_generation(w, blobs.embeddings, labels, 5.0, 0.1, 50);
    REQUIRE(out.report.loss_trace.size() == 50);
    CHECK(out.report.loss_trace.back() < out.report.loss_trace.front());
    CHECK(out.report.epochs_run == 50);
    CHECK(out.report.grad_check_error < 1e-5);
    CHECK(out.bank.tag() == SnapshotTag::kEnd);
    // projection keeps every row on the sphere
    CHECK(!plr::validate(out.bank).has_value());
    CHECK(!plr::validate(out.embeddings).has_value());
}

TEST_CASE("epochs=1 records a single loss entry; bad lr/epochs are rejected") {
    const PrototypeBank w(basis_rows({0, 1}, 2), 0, SnapshotTag::kBegin);
    const EmbeddingSet e(basis_rows({0, 1}, 2));
    const LabelMatrix labels = LabelMatrix::one_hots(Partition({0, 1}, 2));
    const plr::TrainResult out = plr::train_generation(w, e, labels, 1.0, 0.1, 1);
    CHECK(out.report.loss_trace.size() == 1);
    CHECK_THROWS_AS(plr::train_generation(w, e, labels, 1.0, 0.0, 1),
                    plr::PreconditionError);
    CHECK_THROWS_AS(plr::train_generation(w, e, labels, 1.0, 0.1, 0),
                    plr::PreconditionError);
}

TEST_CASE("bank round-trips byte-identically with generation and tag") {
    plr::SplitMix64 rng(5);
    const PrototypeBank w = oracle::random_bank(rng, 3, 4, 7);
    const PrototypeBank tagged = plr::snapshot(w, SnapshotTag::kEnd);
    std::ostringstream first;
    plr::write_bank(first, tagged);
    std::istringstream in(first.str());
    const PrototypeBank back = plr::read_bank(in);
    CHECK(back == tagged);
    CHECK(back.generation_id() == 7);
    CHECK(back.tag() == SnapshotTag::kEnd);
    std::ostringstream second;
    plr::write_bank(second, back);
    CHECK(second.str() == first.str());
}
