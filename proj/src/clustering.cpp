#include "plr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "plr/format.hpp"

namespace plr {

std::string metric_name(Metric m) {
    return m == Metric::kEuclidean ? "euclidean" : "cosine";
}

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::kEuclidean;
    if (name == "cosine") return Metric::kCosine;
    throw ParseError("unknown metric '" + name + "' (expected euclidean or cosine)");
}

std::optional<std::string> validate(const ClusterParams& p) {
    if (!(p.eps > 0.0)) return "eps must be > 0";
    if (p.min_pts < 1) return "min_pts must be >= 1";
    return std::nullopt;
}

std::optional<std::string> validate(const EmbeddingSet& e) {
    for (int k = 0; k < e.size(); ++k) {
        const double n = l2_norm(e.row(k));
        if (std::abs(n - 1.0) > 1e-6) {
            std::ostringstream msg;
            msg << "row " << k << " has norm " << n << ", expected 1 within 1e-6";
            return msg.str();
        }
    }
    return std::nullopt;
}

double pairwise_distance(std::span<const double> a, std::span<const double> b, Metric m) {
    if (a.size() != b.size()) throw DimensionError("pairwise_distance: length mismatch");
    if (m == Metric::kCosine) return 1.0 - dot(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<double> pairwise_distances(const EmbeddingSet& e, Metric m) {
    const int n = e.size();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.push_back(pairwise_distance(e.row(i), e.row(j), m));
    return out;
}

Partition dbscan(const EmbeddingSet& e, const ClusterParams& params, int generation_id) {
    if (e.size() < 1) throw PreconditionError("dbscan: empty embedding set");
    if (auto bad = validate(params)) throw PreconditionError("dbscan: " + *bad);
    if (auto bad = validate(e)) throw PreconditionError("dbscan: " + *bad);

    const int n = e.size();

    // Eps-neighborhoods (self included), ascending. Brute force O(N^2).
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) neighbors[static_cast<std::size_t>(i)].push_back(i);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (pairwise_distance(e.row(i), e.row(j), params.metric) <= params.eps) {
                neighbors[static_cast<std::size_t>(i)].push_back(j);
                neighbors[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

    std::vector<bool> core(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i)
        core[static_cast<std::size_t>(i)] =
            static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= params.min_pts;

    // Density clusters = connected components of the core points, discovered
    // by ascending seed index with a FIFO frontier (numbering is therefore
    // deterministic and, as a set family, permutation-invariant).
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int clusters = 0;
    for (int seed = 0; seed < n; ++seed) {
        if (!core[static_cast<std::size_t>(seed)] || label[static_cast<std::size_t>(seed)] >= 0)
            continue;
        const int cid = clusters++;
        label[static_cast<std::size_t>(seed)] = cid;
        std::deque<int> frontier{seed};
        while (!frontier.empty()) {
            const int q = frontier.front();
            frontier.pop_front();
            for (int r : neighbors[static_cast<std::size_t>(q)]) {
                if (!core[static_cast<std::size_t>(r)] ||
                    label[static_cast<std::size_t>(r)] >= 0)
                    continue;
                label[static_cast<std::size_t>(r)] = cid;
                frontier.push_back(r);
            }
        }
    }

    // Border points: non-core within eps of at least one core point. Attach
    // to the nearest core neighbor (ties: smaller cluster id, then smaller
    // index) so the result does not depend on expansion order.
    for (int i = 0; i < n; ++i) {
        if (core[static_cast<std::size_t>(i)]) continue;
        double best_d = 0.0;
        int best_cluster = -1;
        int best_core = -1;
        for (int j : neighbors[static_cast<std::size_t>(i)]) {
            if (!core[static_cast<std::size_t>(j)]) continue;
            const double d = pairwise_distance(e.row(i), e.row(j), params.metric);
            const int cl = label[static_cast<std::size_t>(j)];
            if (best_core < 0 || d < best_d ||
                (d == best_d && (cl < best_cluster || (cl == best_cluster && j < best_core)))) {
                best_d = d;
                best_cluster = cl;
                best_core = j;
            }
        }
        if (best_core >= 0) label[static_cast<std::size_t>(i)] = best_cluster;
    }

    // Remaining noise points become singleton instance classes, ascending.
    for (int i = 0; i < n; ++i)
        if (label[static_cast<std::size_t>(i)] < 0)
            label[static_cast<std::size_t>(i)] = clusters++;

    return Partition(std::move(label), clusters, generation_id);
}

void write_embeddings(std::ostream& out, const EmbeddingSet& e, int generation) {
    write_dense_matrix(out, e.features(), generation, "none");
}

EmbeddingSet read_embeddings(std::istream& in) {
    return EmbeddingSet(read_dense_matrix(in).values);
}

}  // namespace plr
