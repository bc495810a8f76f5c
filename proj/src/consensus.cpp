#include "plr/consensus.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "plr/format.hpp"

namespace plr {

ConsensusMatrix::ConsensusMatrix(int rows, int cols,
                                 std::vector<std::vector<Entry>> row_entries,
                                 bool normalized)
    : rows_(rows), cols_(cols), normalized_(normalized), entries_(std::move(row_entries)) {
    if (rows < 0 || cols < 0)
        throw PreconditionError("ConsensusMatrix: negative shape");
    if (entries_.size() != static_cast<std::size_t>(rows))
        throw DimensionError("ConsensusMatrix: row count mismatch");
    for (int i = 0; i < rows_; ++i) {
        auto& row = entries_[static_cast<std::size_t>(i)];
        std::sort(row.begin(), row.end());
        for (std::size_t e = 0; e < row.size(); ++e) {
            if (row[e].first < 0 || row[e].first >= cols_)
                throw IndexError("ConsensusMatrix: column index out of range");
            if (e > 0 && row[e].first == row[e - 1].first)
                throw PreconditionError("ConsensusMatrix: duplicate entry in row " +
                                        std::to_string(i));
        }
    }
}

std::span<const ConsensusMatrix::Entry> ConsensusMatrix::row(int i) const {
    if (i < 0 || i >= rows_) throw IndexError("ConsensusMatrix: row out of range");
    return entries_[static_cast<std::size_t>(i)];
}

double ConsensusMatrix::value_at(int i, int j) const {
    if (j < 0 || j >= cols_) throw IndexError("ConsensusMatrix: column out of range");
    const auto r = row(i);
    const auto it = std::lower_bound(r.begin(), r.end(), j,
                                     [](const Entry& e, int col) { return e.first < col; });
    if (it == r.end() || it->first != j) return 0.0;
    return it->second;
}

std::size_t ConsensusMatrix::nnz() const {
    std::size_t total = 0;
    for (const auto& row : entries_) total += row.size();
    return total;
}

ConsensusMatrix compute_consensus(const Partition& prev, const Partition& curr) {
    if (prev.size() != curr.size())
        throw DimensionError("compute_consensus: partitions cover different sample counts");
    if (auto bad = validate(prev))
        throw PreconditionError("compute_consensus: invalid previous partition: " + *bad);
    if (auto bad = validate(curr))
        throw PreconditionError("compute_consensus: invalid current partition: " + *bad);

    // Single pass: count co-occurrences keyed by (prev cluster, curr cluster).
    std::unordered_map<std::uint64_t, int> overlap;
    overlap.reserve(static_cast<std::size_t>(curr.num_clusters()) * 2);
    for (int k = 0; k < prev.size(); ++k) {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(prev.cluster_of(k)) << 32) |
            static_cast<std::uint32_t>(curr.cluster_of(k));
        ++overlap[key];
    }

    const auto prev_sizes = prev.cluster_sizes();
    const auto curr_sizes = curr.cluster_sizes();
    std::vector<std::vector<ConsensusMatrix::Entry>> rows(
        static_cast<std::size_t>(prev.num_clusters()));
    for (const auto& [key, inter] : overlap) {
        const int i = static_cast<int>(key >> 32);
        const int j = static_cast<int>(key & 0xffffffffULL);
        const int uni = prev_sizes[static_cast<std::size_t>(i)] +
                        curr_sizes[static_cast<std::size_t>(j)] - inter;
        rows[static_cast<std::size_t>(i)].emplace_back(
            j, static_cast<double>(inter) / static_cast<double>(uni));
    }
    return ConsensusMatrix(prev.num_clusters(), curr.num_clusters(), std::move(rows),
                           /*normalized=*/false);
}

ConsensusMatrix normalize_rows(const ConsensusMatrix& raw) {
    std::vector<std::vector<ConsensusMatrix::Entry>> rows(
        static_cast<std::size_t>(raw.rows()));
    for (int i = 0; i < raw.rows(); ++i) {
        const auto r = raw.row(i);
        double sum = 0.0;
        for (const auto& [j, v] : r) sum += v;
        if (!(sum > 0.0))
            throw PreconditionError("normalize_rows: row " + std::to_string(i) +
                                    " has no mass");
        auto& out = rows[static_cast<std::size_t>(i)];
        out.reserve(r.size());
        for (const auto& [j, v] : r) out.emplace_back(j, v / sum);
    }
    return ConsensusMatrix(raw.rows(), raw.cols(), std::move(rows), /*normalized=*/true);
}

ConsensusMatrix identity_consensus(const Partition& p) {
    if (auto bad = validate(p))
        throw PreconditionError("identity_consensus: invalid partition: " + *bad);
    std::vector<std::vector<ConsensusMatrix::Entry>> rows(
        static_cast<std::size_t>(p.num_clusters()));
    for (int i = 0; i < p.num_clusters(); ++i)
        rows[static_cast<std::size_t>(i)].emplace_back(i, 1.0);
    return ConsensusMatrix(p.num_clusters(), p.num_clusters(), std::move(rows),
                           /*normalized=*/true);
}

LabelVector transport(const ConsensusMatrix& c, const LabelVector& v) {
    if (!c.normalized())
        throw PreconditionError("transport: consensus matrix must be row-normalized");
    if (v.num_classes() != c.rows())
        throw DimensionError("transport: label classes do not match consensus rows");
    LabelVector out;
    out.weights.assign(static_cast<std::size_t>(c.cols()), 0.0);
    for (int i = 0; i < c.rows(); ++i) {
        const double vi = v.weights[static_cast<std::size_t>(i)];
        if (vi == 0.0) continue;
        for (const auto& [j, cij] : c.row(i))
            out.weights[static_cast<std::size_t>(j)] += cij * vi;
    }
    return out;
}

double mean_row_max(const ConsensusMatrix& c) {
    if (c.rows() == 0) throw PreconditionError("mean_row_max: empty matrix");
    double total = 0.0;
    for (int i = 0; i < c.rows(); ++i) {
        double best = 0.0;
        for (const auto& [j, v] : c.row(i)) best = std::max(best, v);
        total += best;
    }
    return total / static_cast<double>(c.rows());
}

void write_consensus(std::ostream& out, const ConsensusMatrix& c) {
    out << "# rows=" << c.rows() << " cols=" << c.cols() << " normalized="
        << (c.normalized() ? "true" : "false") << "\n";
    for (int i = 0; i < c.rows(); ++i)
        for (const auto& [j, v] : c.row(i))
            out << i << '\t' << j << '\t' << format_full(v) << '\n';
}

ConsensusMatrix read_consensus(std::istream& in) {
    const auto fields = parse_header(read_line(in, "consensus header"));
    const long long rows = parse_int(header_field(fields, "rows"));
    const long long cols = parse_int(header_field(fields, "cols"));
    const std::string& norm = header_field(fields, "normalized");
    if (norm != "true" && norm != "false")
        throw ParseError("consensus header: normalized must be true or false");
    if (rows < 0 || cols < 0) throw ParseError("consensus header: negative shape");
    std::vector<std::vector<ConsensusMatrix::Entry>> entries(
        static_cast<std::size_t>(rows));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto toks = split(line, '\t');
        if (toks.size() != 3)
            throw ParseError("consensus row: expected 'i\\tj\\tvalue', got '" + line + "'");
        const long long i = parse_int(toks[0]);
        const long long j = parse_int(toks[1]);
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw ParseError("consensus entry out of range: '" + line + "'");
        entries[static_cast<std::size_t>(i)].emplace_back(static_cast<int>(j),
                                                          parse_double(toks[2]));
    }
    return ConsensusMatrix(static_cast<int>(rows), static_cast<int>(cols),
                           std::move(entries), norm == "true");
}

}  // namespace plr
