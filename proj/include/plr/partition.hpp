#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plr/matrix.hpp"

namespace plr {

// Tolerance for "weights sum to one" checks on label simplices.
inline constexpr double kSimplexTol = 1e-9;

// Sparse label entries below this weight are dropped on write.
inline constexpr double kLabelWriteEps = 1e-9;

// Hard assignment of N samples to M clusters with dense ids [0, M).
// The constructor stores whatever it is given; validate() reports
// violations (out-of-range ids, empty clusters) instead of throwing, so
// damaged inputs can be diagnosed rather than rejected blind.
class Partition {
public:
    Partition(std::vector<int> assignment, int num_clusters, int generation_id = 0);

    // Re-indexes arbitrary labels (gaps fine) into dense [0, M), mapping
    // labels in ascending order of their original value.
    static Partition from_labels(const std::vector<int>& labels, int generation_id = 0);

    int size() const { return static_cast<int>(assignment_.size()); }
    int num_clusters() const { return num_clusters_; }
    int generation_id() const { return generation_id_; }

    int cluster_of(int sample) const;
    const std::vector<int>& assignment() const { return assignment_; }

    // Sizes per cluster id; out-of-range assignments are not counted
    // (validate() flags them first).
    std::vector<int> cluster_sizes() const;

    bool operator==(const Partition&) const = default;

private:
    std::vector<int> assignment_;
    int num_clusters_ = 0;
    int generation_id_ = 0;
};

// Members of cluster j in ascending sample order.
std::vector<int> cluster_members(const Partition& p, int cluster);

// nullopt when valid; otherwise a description of the first violation found.
std::optional<std::string> validate(const Partition& p);

// Soft assignment of one sample over M classes.
struct LabelVector {
    std::vector<double> weights;

    int num_classes() const { return static_cast<int>(weights.size()); }
    int argmax() const;  // smallest index on ties; throws on empty
};

LabelVector one_hot(const Partition& p, int sample);

// nullopt when weights are all >= 0 and sum to 1 within kSimplexTol.
std::optional<std::string> validate(const LabelVector& v);

// Per-sample soft labels for one generation: N x M, rows on the simplex.
class LabelMatrix {
public:
    LabelMatrix(Matrix values, int generation_id);

    static LabelMatrix one_hots(const Partition& p);

    int num_samples() const { return values_.rows(); }
    int num_classes() const { return values_.cols(); }
    int generation_id() const { return generation_id_; }

    std::span<const double> row(int sample) const { return values_.row(sample); }
    std::span<double> row(int sample) { return values_.row(sample); }
    LabelVector row_vector(int sample) const;

    const Matrix& values() const { return values_; }

    bool operator==(const LabelMatrix&) const = default;

private:
    Matrix values_;
    int generation_id_ = 0;
};

std::optional<std::string> validate(const LabelMatrix& m);

// --- serialization ------------------------------------------------------
// Partition file: "# generation=<t> n=<N> m=<M>" then one "sample\tcluster"
// line per sample, ascending.
void write_partition(std::ostream& out, const Partition& p);
Partition read_partition(std::istream& in);

// Label matrix file: "# generation=<t> n=<N> m=<M> alpha=<a>" then sparse
// "sample\tclass\tweight" triplets (ascending, weights < 1e-9 omitted).
// alpha is carried in the header for provenance of the blend that built it.
struct LabelMatrixFile {
    LabelMatrix labels;
    double alpha;
};
void write_label_matrix(std::ostream& out, const LabelMatrix& m, double alpha);
LabelMatrixFile read_label_matrix(std::istream& in);

}  // namespace plr
