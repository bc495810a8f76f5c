#include "plr/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <istream>
#include <ostream>
#include <sstream>

#include "plr/format.hpp"

namespace plr {

Partition::Partition(std::vector<int> assignment, int num_clusters, int generation_id)
    : assignment_(std::move(assignment)),
      num_clusters_(num_clusters),
      generation_id_(generation_id) {}

Partition Partition::from_labels(const std::vector<int>& labels, int generation_id) {
    std::map<int, int> dense;  // original label -> dense id, ascending
    for (int lab : labels) dense.emplace(lab, 0);
    int next = 0;
    for (auto& [lab, id] : dense) id = next++;
    std::vector<int> assignment(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) assignment[k] = dense[labels[k]];
    return Partition(std::move(assignment), next, generation_id);
}

int Partition::cluster_of(int sample) const {
    if (sample < 0 || sample >= size())
        throw IndexError("Partition: sample index out of range");
    return assignment_[static_cast<std::size_t>(sample)];
}

std::vector<int> Partition::cluster_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(std::max(num_clusters_, 0)), 0);
    for (int a : assignment_)
        if (a >= 0 && a < num_clusters_) ++sizes[static_cast<std::size_t>(a)];
    return sizes;
}

std::vector<int> cluster_members(const Partition& p, int cluster) {
    if (cluster < 0 || cluster >= p.num_clusters())
        throw IndexError("cluster_members: cluster index out of range");
    std::vector<int> members;
    const auto& a = p.assignment();
    for (int k = 0; k < p.size(); ++k)
        if (a[static_cast<std::size_t>(k)] == cluster) members.push_back(k);
    return members;
}

std::optional<std::string> validate(const Partition& p) {
    if (p.size() == 0) return "partition has no samples";
    if (p.num_clusters() <= 0) return "partition has no clusters";
    const auto& a = p.assignment();
    for (int k = 0; k < p.size(); ++k) {
        const int c = a[static_cast<std::size_t>(k)];
        if (c < 0 || c >= p.num_clusters()) {
            std::ostringstream msg;
            msg << "sample " << k << " assigned to cluster " << c
                << ", valid range is [0, " << p.num_clusters() << ")";
            return msg.str();
        }
    }
    const auto sizes = p.cluster_sizes();
    for (int j = 0; j < p.num_clusters(); ++j) {
        if (sizes[static_cast<std::size_t>(j)] == 0) {
            std::ostringstream msg;
            msg << "cluster " << j << " is empty";
            return msg.str();
        }
    }
    return std::nullopt;
}

int LabelVector::argmax() const {
    if (weights.empty()) throw StateError("LabelVector::argmax on empty vector");
    int best = 0;
    for (int j = 1; j < num_classes(); ++j)
        if (weights[static_cast<std::size_t>(j)] > weights[static_cast<std::size_t>(best)])
            best = j;
    return best;
}

LabelVector one_hot(const Partition& p, int sample) {
    const int c = p.cluster_of(sample);
    if (c < 0 || c >= p.num_clusters())
        throw StateError("one_hot: sample has out-of-range cluster; validate the partition");
    LabelVector v;
    v.weights.assign(static_cast<std::size_t>(p.num_clusters()), 0.0);
    v.weights[static_cast<std::size_t>(c)] = 1.0;
    return v;
}

std::optional<std::string> validate(const LabelVector& v) {
    double sum = 0.0;
    for (int j = 0; j < v.num_classes(); ++j) {
        const double w = v.weights[static_cast<std::size_t>(j)];
        if (!(w >= 0.0)) {  // catches negatives and NaN
            std::ostringstream msg;
            msg << "weight " << j << " is negative or NaN";
            return msg.str();
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        std::ostringstream msg;
        msg << "weights sum to " << sum << ", expected 1 within " << kSimplexTol;
        return msg.str();
    }
    return std::nullopt;
}

LabelMatrix::LabelMatrix(Matrix values, int generation_id)
    : values_(std::move(values)), generation_id_(generation_id) {}

LabelMatrix LabelMatrix::one_hots(const Partition& p) {
    if (auto bad = validate(p))
        throw PreconditionError("LabelMatrix::one_hots: invalid partition: " + *bad);
    Matrix m(p.size(), p.num_clusters(), 0.0);
    for (int k = 0; k < p.size(); ++k) m.at(k, p.cluster_of(k)) = 1.0;
    return LabelMatrix(std::move(m), p.generation_id());
}

LabelVector LabelMatrix::row_vector(int sample) const {
    const auto r = row(sample);
    LabelVector v;
    v.weights.assign(r.begin(), r.end());
    return v;
}

std::optional<std::string> validate(const LabelMatrix& m) {
    for (int k = 0; k < m.num_samples(); ++k) {
        if (auto bad = validate(m.row_vector(k))) {
            std::ostringstream msg;
            msg << "row " << k << ": " << *bad;
            return msg.str();
        }
    }
    return std::nullopt;
}

// --- serialization ------------------------------------------------------

void write_partition(std::ostream& out, const Partition& p) {
    out << "# generation=" << p.generation_id() << " n=" << p.size()
        << " m=" << p.num_clusters() << "\n";
    for (int k = 0; k < p.size(); ++k)
        out << k << '\t' << p.assignment()[static_cast<std::size_t>(k)] << '\n';
}

Partition read_partition(std::istream& in) {
    const auto fields = parse_header(read_line(in, "partition header"));
    const int gen = static_cast<int>(parse_int(header_field(fields, "generation")));
    const long long n = parse_int(header_field(fields, "n"));
    const long long m = parse_int(header_field(fields, "m"));
    if (n < 0 || m < 0) throw ParseError("partition header: negative n or m");
    std::vector<int> assignment(static_cast<std::size_t>(n), 0);
    for (long long k = 0; k < n; ++k) {
        const std::string line = read_line(in, "partition row");
        const auto toks = split(line, '\t');
        if (toks.size() != 2)
            throw ParseError("partition row: expected 'sample\\tcluster', got '" + line + "'");
        const long long sample = parse_int(toks[0]);
        if (sample != k)
            throw ParseError("partition rows must be ascending from 0; got sample " +
                             std::string(toks[0]) + " at position " + std::to_string(k));
        assignment[static_cast<std::size_t>(k)] = static_cast<int>(parse_int(toks[1]));
    }
    return Partition(std::move(assignment), static_cast<int>(m), gen);
}

void write_label_matrix(std::ostream& out, const LabelMatrix& m, double alpha) {
    out << "# generation=" << m.generation_id() << " n=" << m.num_samples()
        << " m=" << m.num_classes() << " alpha=" << format_full(alpha) << "\n";
    for (int k = 0; k < m.num_samples(); ++k) {
        const auto r = m.row(k);
        for (int j = 0; j < m.num_classes(); ++j) {
            if (r[static_cast<std::size_t>(j)] < kLabelWriteEps) continue;
            out << k << '\t' << j << '\t' << format_full(r[static_cast<std::size_t>(j)])
                << '\n';
        }
    }
}

LabelMatrixFile read_label_matrix(std::istream& in) {
    const auto fields = parse_header(read_line(in, "label matrix header"));
    const int gen = static_cast<int>(parse_int(header_field(fields, "generation")));
    const long long n = parse_int(header_field(fields, "n"));
    const long long m = parse_int(header_field(fields, "m"));
    const double alpha = parse_double(header_field(fields, "alpha"));
    if (n < 0 || m < 0) throw ParseError("label matrix header: negative n or m");
    Matrix values(static_cast<int>(n), static_cast<int>(m), 0.0);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto toks = split(line, '\t');
        if (toks.size() != 3)
            throw ParseError("label matrix row: expected 'sample\\tclass\\tweight', got '" +
                             line + "'");
        const long long k = parse_int(toks[0]);
        const long long j = parse_int(toks[1]);
        if (k < 0 || k >= n || j < 0 || j >= m)
            throw ParseError("label matrix row out of range: '" + line + "'");
        values.at(static_cast<int>(k), static_cast<int>(j)) = parse_double(toks[2]);
    }
    return LabelMatrixFile{LabelMatrix(std::move(values), gen), alpha};
}

}  // namespace plr
