#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "plr/partition.hpp"

namespace plr {

// Sparse row-major M_prev x M_curr matrix of cluster-overlap scores between
// consecutive generations. Entry (i, j) is the Jaccard overlap
// |members_prev(i) & members_curr(j)| / |members_prev(i) | members_curr(j)|;
// after normalize_rows each row sums to 1 and acts as a transport
// distribution from an old cluster onto the new ones.
class ConsensusMatrix {
public:
    using Entry = std::pair<int, double>;  // (column, value)

    ConsensusMatrix(int rows, int cols, std::vector<std::vector<Entry>> row_entries,
                    bool normalized);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool normalized() const { return normalized_; }

    std::span<const Entry> row(int i) const;
    double value_at(int i, int j) const;  // 0.0 when the entry is absent
    std::size_t nnz() const;

    bool operator==(const ConsensusMatrix&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    bool normalized_ = false;
    std::vector<std::vector<Entry>> entries_;  // per row, ascending column
};

// Raw overlap matrix from two partitions over the same samples (single pass
// over the co-occurrence counts; never materializes M_prev x M_curr).
ConsensusMatrix compute_consensus(const Partition& prev, const Partition& curr);

// Divides each row by its sum. Every cluster of a valid partition has at
// least one member, so rows of a computed matrix always carry mass; an empty
// row (possible in hand-written files) is rejected.
ConsensusMatrix normalize_rows(const ConsensusMatrix& raw);

// Exact identity consensus over the clusters of p; bootstraps generation 0.
ConsensusMatrix identity_consensus(const Partition& p);

// y_new(j) = sum_i C(i, j) * v(i). Requires a row-normalized matrix so that
// simplex inputs stay on the simplex.
LabelVector transport(const ConsensusMatrix& c, const LabelVector& v);

// Mean over rows of the largest row entry; 1.0 exactly when the two
// generations agree up to relabeling. The simulator reports this as a
// consensus-concentration diagnostic.
double mean_row_max(const ConsensusMatrix& c);

// File form: "# rows=<R> cols=<C> normalized=<true|false>" then one
// "i\tj\tvalue" line per stored entry, ascending (i, j).
void write_consensus(std::ostream& out, const ConsensusMatrix& c);
ConsensusMatrix read_consensus(std::istream& in);

}  // namespace plr
