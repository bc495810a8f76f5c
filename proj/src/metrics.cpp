#include "plr/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "plr/errors.hpp"

namespace plr {

namespace {

std::vector<int> dense_relabel(const std::vector<int>& labels, int& num_classes) {
    std::map<int, int> ids;
    for (int lab : labels) ids.emplace(lab, 0);
    int next = 0;
    for (auto& [lab, id] : ids) id = next++;
    std::vector<int> out(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) out[k] = ids[labels[k]];
    num_classes = next;
    return out;
}

double pairs_of(long long count) {
    return 0.5 * static_cast<double>(count) * static_cast<double>(count - 1);
}

}  // namespace

ClusterMetrics compare_labels(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw DimensionError("compare_labels: label vectors differ in length");
    if (pred.empty()) throw PreconditionError("compare_labels: empty labels");

    const long long n = static_cast<long long>(pred.size());
    int mp = 0, mt = 0;
    const std::vector<int> a = dense_relabel(pred, mp);
    const std::vector<int> b = dense_relabel(truth, mt);

    std::vector<long long> pred_sizes(static_cast<std::size_t>(mp), 0);
    std::vector<long long> truth_sizes(static_cast<std::size_t>(mt), 0);
    std::unordered_map<std::uint64_t, long long> joint;
    for (long long k = 0; k < n; ++k) {
        const int i = a[static_cast<std::size_t>(k)];
        const int j = b[static_cast<std::size_t>(k)];
        ++pred_sizes[static_cast<std::size_t>(i)];
        ++truth_sizes[static_cast<std::size_t>(j)];
        ++joint[(static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j)];
    }

    double same_both = 0.0;  // pairs co-clustered in both labelings
    for (const auto& [key, count] : joint) same_both += pairs_of(count);
    double same_pred = 0.0, same_truth = 0.0;
    for (long long s : pred_sizes) same_pred += pairs_of(s);
    for (long long s : truth_sizes) same_truth += pairs_of(s);
    const double total = pairs_of(n);

    ClusterMetrics out;
    if (total == 0.0) {
        // Single sample: identical partitions by construction.
        out.ari = 1.0;
        out.nmi = 1.0;
        out.pair_precision = out.pair_recall = out.pair_f1 = 1.0;
        return out;
    }

    // Rand score rescaled to [-1, 1]: (agreements - disagreements) / total.
    const double disagree = (same_pred - same_both) + (same_truth - same_both);
    const double agree = total - disagree;
    out.ari = (agree - disagree) / total;

    out.pair_precision = same_pred > 0.0 ? same_both / same_pred : 1.0;
    out.pair_recall = same_truth > 0.0 ? same_both / same_truth : 1.0;
    out.pair_f1 = (out.pair_precision + out.pair_recall) > 0.0
                      ? 2.0 * out.pair_precision * out.pair_recall /
                            (out.pair_precision + out.pair_recall)
                      : 0.0;

    const double dn = static_cast<double>(n);
    double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
    for (long long s : pred_sizes)
        if (s > 0) h_pred -= (s / dn) * std::log(s / dn);
    for (long long s : truth_sizes)
        if (s > 0) h_truth -= (s / dn) * std::log(s / dn);
    for (const auto& [key, count] : joint) {
        const auto i = static_cast<std::size_t>(key >> 32);
        const auto j = static_cast<std::size_t>(key & 0xffffffffULL);
        const double pij = count / dn;
        mi += pij * std::log(pij * dn * dn /
                             (static_cast<double>(pred_sizes[i]) *
                              static_cast<double>(truth_sizes[j])));
    }
    if (h_pred + h_truth == 0.0) {
        out.nmi = 1.0;  // both sides a single cluster -> identical labelings
    } else {
        out.nmi = mi / (0.5 * (h_pred + h_truth));
        out.nmi = std::min(1.0, std::max(0.0, out.nmi));  // shave float spill
    }
    return out;
}

ClusterMetrics compare_partitions(const Partition& pred, const Partition& truth) {
    if (pred.size() != truth.size())
        throw DimensionError("compare_partitions: partitions cover different sample counts");
    if (auto bad = validate(pred))
        throw PreconditionError("compare_partitions: invalid prediction: " + *bad);
    if (auto bad = validate(truth))
        throw PreconditionError("compare_partitions: invalid truth: " + *bad);
    return compare_labels(pred.assignment(), truth.assignment());
}

std::vector<int> argmax_labels(const LabelMatrix& labels) {
    std::vector<int> out(static_cast<std::size_t>(labels.num_samples()));
    for (int k = 0; k < labels.num_samples(); ++k)
        out[static_cast<std::size_t>(k)] = labels.row_vector(k).argmax();
    return out;
}

double cross_entropy_vs_truth(const LabelMatrix& labels, const Partition& clusters,
                              const Partition& truth, long* clamp_count) {
    if (labels.num_samples() != truth.size() || clusters.size() != truth.size())
        throw DimensionError("cross_entropy_vs_truth: sample counts disagree");
    if (labels.num_classes() != clusters.num_clusters())
        throw DimensionError("cross_entropy_vs_truth: label classes do not match clusters");
    if (auto bad = validate(clusters))
        throw PreconditionError("cross_entropy_vs_truth: invalid clusters: " + *bad);
    if (auto bad = validate(truth))
        throw PreconditionError("cross_entropy_vs_truth: invalid truth: " + *bad);

    // Majority-vote map from cluster id to truth identity (ties: smaller id).
    const int m = clusters.num_clusters();
    Matrix votes(m, truth.num_clusters(), 0.0);
    for (int k = 0; k < truth.size(); ++k)
        votes.at(clusters.cluster_of(k), truth.cluster_of(k)) += 1.0;
    std::vector<int> majority(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
        const auto row = votes.row(j);
        int best = 0;
        for (int c = 1; c < truth.num_clusters(); ++c)
            if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)])
                best = c;
        majority[static_cast<std::size_t>(j)] = best;
    }

    double total = 0.0;
    for (int k = 0; k < truth.size(); ++k) {
        const int want = truth.cluster_of(k);
        const auto row = labels.row(k);
        double mass = 0.0;
        for (int j = 0; j < m; ++j)
            if (majority[static_cast<std::size_t>(j)] == want)
                mass += row[static_cast<std::size_t>(j)];
        if (mass < 1e-12) {
            mass = 1e-12;
            if (clamp_count) ++*clamp_count;
        }
        total -= std::log(mass);
    }
    return total / static_cast<double>(truth.size());
}

}  // namespace plr
