#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plr/matrix.hpp"
#include "plr/partition.hpp"

namespace plr {

enum class Metric { kEuclidean, kCosine };

std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);  // throws ParseError

struct ClusterParams {
    double eps = 0.5;
    int min_pts = 4;
    Metric metric = Metric::kCosine;
};

std::optional<std::string> validate(const ClusterParams& p);

// N x L unit-norm feature rows; stands in for encoder outputs.
class EmbeddingSet {
public:
    explicit EmbeddingSet(Matrix features) : features_(std::move(features)) {}

    int size() const { return features_.rows(); }
    int dim() const { return features_.cols(); }

    std::span<const double> row(int k) const { return features_.row(k); }
    std::span<double> row(int k) { return features_.row(k); }

    const Matrix& features() const { return features_; }
    Matrix& features() { return features_; }

    bool operator==(const EmbeddingSet&) const = default;

private:
    Matrix features_;
};

// nullopt when every row norm is 1 within 1e-6.
std::optional<std::string> validate(const EmbeddingSet& e);

// Cosine distance is 1 - <a,b>: on unit vectors this equals half the squared
// Euclidean distance, so the two metrics induce the same neighborhoods at
// matched radii.
double pairwise_distance(std::span<const double> a, std::span<const double> b, Metric m);

// Condensed upper triangle: entry for pair (i, j), i < j, lives at
// i*(2N-i-1)/2 + (j-i-1).
std::vector<double> pairwise_distances(const EmbeddingSet& e, Metric m);

// DBSCAN with deterministic expansion (ascending seed index, FIFO frontier)
// and two departures from the textbook formulation, both needed here:
//   - border points attach to the *nearest* core neighbor instead of the
//     first cluster that reaches them, so the labeling is stable under input
//     permutation (up to relabeling);
//   - noise points become singleton clusters appended after the density
//     clusters, in ascending sample order, so every sample gets a pseudo
//     label and outliers act as instance-level classes.
Partition dbscan(const EmbeddingSet& e, const ClusterParams& params,
                 int generation_id = 0);

void write_embeddings(std::ostream& out, const EmbeddingSet& e, int generation = 0);
EmbeddingSet read_embeddings(std::istream& in);

}  // namespace plr
