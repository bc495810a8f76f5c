#include "plr/learner.hpp"

#include <algorithm>
#include <cmath>

#include "plr/format.hpp"
#include "plr/propagation.hpp"

namespace plr {

std::string snapshot_tag_name(SnapshotTag tag) {
    return tag == SnapshotTag::kBegin ? "begin" : "end";
}

SnapshotTag parse_snapshot_tag(const std::string& name) {
    if (name == "begin") return SnapshotTag::kBegin;
    if (name == "end") return SnapshotTag::kEnd;
    throw ParseError("unknown snapshot tag '" + name + "' (expected begin or end)");
}

PrototypeBank::PrototypeBank(Matrix prototypes, int generation_id, SnapshotTag tag)
    : prototypes_(std::move(prototypes)), generation_id_(generation_id), tag_(tag) {}

std::optional<std::string> validate(const PrototypeBank& w) {
    for (int j = 0; j < w.num_classes(); ++j) {
        const double n = l2_norm(w.prototype(j));
        if (std::abs(n - 1.0) > 1e-6)
            return "prototype " + std::to_string(j) + " has norm " + std::to_string(n) +
                   ", expected 1 within 1e-6";
    }
    return std::nullopt;
}

PrototypeBank snapshot(const PrototypeBank& w, SnapshotTag tag) {
    return PrototypeBank(w.prototypes(), w.generation_id(), tag);
}

PrototypeBank bank_from_centroids(const Partition& p, const EmbeddingSet& e,
                                  int generation_id, SnapshotTag tag) {
    if (auto bad = validate(p))
        throw PreconditionError("bank_from_centroids: invalid partition: " + *bad);
    if (p.size() != e.size())
        throw DimensionError("bank_from_centroids: partition and embeddings disagree on N");
    Matrix protos(p.num_clusters(), e.dim(), 0.0);
    const auto sizes = p.cluster_sizes();
    for (int k = 0; k < p.size(); ++k) {
        const auto f = e.row(k);
        const auto row = protos.row(p.cluster_of(k));
        for (int c = 0; c < e.dim(); ++c) row[static_cast<std::size_t>(c)] += f[static_cast<std::size_t>(c)];
    }
    for (int j = 0; j < p.num_clusters(); ++j) {
        const auto row = protos.row(j);
        for (double& x : row) x /= static_cast<double>(sizes[static_cast<std::size_t>(j)]);
        if (l2_norm(row) < 1e-12) {
            // Members cancelled out; fall back to the first member.
            const auto f = e.row(cluster_members(p, j).front());
            std::copy(f.begin(), f.end(), row.begin());
        }
        normalize_l2(row);
    }
    return PrototypeBank(std::move(protos), generation_id, tag);
}

LabelVector class_logits(const PrototypeBank& w, std::span<const double> f, double tau) {
    return prototype_confidence(w, f, tau);
}

LossGrads loss_and_grads(const PrototypeBank& w, const EmbeddingSet& e,
                         const LabelMatrix& labels, double tau) {
    const int n = e.size();
    const int m = w.num_classes();
    const int dim = e.dim();
    if (labels.num_samples() != n)
        throw DimensionError("loss_and_grads: labels and embeddings disagree on N");
    if (labels.num_classes() != m)
        throw DimensionError("loss_and_grads: labels and bank disagree on M");
    if (w.dim() != dim)
        throw DimensionError("loss_and_grads: bank and embeddings disagree on dim");
    if (auto bad = validate(labels))
        throw PreconditionError("loss_and_grads: invalid labels: " + *bad);
    if (!(tau > 0.0)) throw PreconditionError("loss_and_grads: tau must be > 0");

    LossGrads out;
    out.grad_prototypes = Matrix(m, dim, 0.0);
    out.grad_embeddings = Matrix(n, dim, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> z(static_cast<std::size_t>(m));
    for (int k = 0; k < n; ++k) {
        const auto f = e.row(k);
        double zmax = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            z[static_cast<std::size_t>(j)] = tau * dot(w.prototype(j), f);
            zmax = std::max(zmax, z[static_cast<std::size_t>(j)]);
        }
        double sum = 0.0;
        for (int j = 0; j < m; ++j) sum += std::exp(z[static_cast<std::size_t>(j)] - zmax);
        const double lse = zmax + std::log(sum);

        const auto y = labels.row(k);
        const auto ge = out.grad_embeddings.row(k);
        for (int j = 0; j < m; ++j) {
            const double yj = y[static_cast<std::size_t>(j)];
            const double zj = z[static_cast<std::size_t>(j)];
            // exact log-softmax route: -sum_j y_j * (z_j - lse)
            if (yj != 0.0) out.loss += inv_n * yj * (lse - zj);
            // p_j is computed exactly as prototype_confidence computes it, so
            // labels taken from there make p - y cancel to zero bitwise.
            const double pj = std::exp(zj - zmax) / sum;
            const double g = inv_n * tau * (pj - yj);  // (tau/N)(p_j - y_j)
            if (g == 0.0) continue;
            const auto wj = w.prototype(j);
            const auto gw = out.grad_prototypes.row(j);
            for (int c = 0; c < dim; ++c) {
                gw[static_cast<std::size_t>(c)] += g * f[static_cast<std::size_t>(c)];
                ge[static_cast<std::size_t>(c)] += g * wj[static_cast<std::size_t>(c)];
            }
        }
    }
    return out;
}

namespace {

// Fixed four-coordinate central-difference probe of the analytic gradients.
// Full finite differences over every coordinate would dominate simulator
// runtime; the unit suite covers the complete comparison on small instances.
double gradient_probe_error(const PrototypeBank& w, const EmbeddingSet& e,
                            const LabelMatrix& labels, double tau,
                            const LossGrads& analytic) {
    const double h = 1e-6;
    struct Coord { bool in_bank; int r, c; };
    const Coord probes[] = {
        {true, 0, 0},
        {true, w.num_classes() - 1, w.dim() - 1},
        {false, 0, 0},
        {false, e.size() - 1, e.dim() - 1},
    };
    double worst = 0.0;
    for (const auto& probe : probes) {
        PrototypeBank wp = w;
        EmbeddingSet ep = e;
        double& cell = probe.in_bank ? wp.prototypes().at(probe.r, probe.c)
                                     : ep.features().at(probe.r, probe.c);
        const double base = cell;
        cell = base + h;
        const double up = loss_and_grads(wp, ep, labels, tau).loss;
        cell = base - h;
        const double down = loss_and_grads(wp, ep, labels, tau).loss;
        const double fd = (up - down) / (2.0 * h);
        const double an = probe.in_bank ? analytic.grad_prototypes.at(probe.r, probe.c)
                                        : analytic.grad_embeddings.at(probe.r, probe.c);
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

}  // namespace

TrainResult train_generation(const PrototypeBank& w, const EmbeddingSet& e,
                             const LabelMatrix& labels, double tau, double lr,
                             int epochs) {
    if (!(lr > 0.0)) throw PreconditionError("train_generation: lr must be > 0");
    if (epochs < 1) throw PreconditionError("train_generation: epochs must be >= 1");

    TrainResult result{snapshot(w, SnapshotTag::kEnd), e, {}};
    result.report.loss_trace.reserve(static_cast<std::size_t>(epochs));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const LossGrads lg = loss_and_grads(result.bank, result.embeddings, labels, tau);
        if (epoch == 0)
            result.report.grad_check_error =
                gradient_probe_error(result.bank, result.embeddings, labels, tau, lg);
        result.report.loss_trace.push_back(lg.loss);

        Matrix& protos = result.bank.prototypes();
        Matrix& feats = result.embeddings.features();
        for (std::size_t i = 0; i < protos.data().size(); ++i)
            protos.data()[i] -= lr * lg.grad_prototypes.data()[i];
        for (std::size_t i = 0; i < feats.data().size(); ++i)
            feats.data()[i] -= lr * lg.grad_embeddings.data()[i];
        normalize_rows_l2(protos);
        normalize_rows_l2(feats);
    }
    result.report.epochs_run = epochs;
    return result;
}

void write_bank(std::ostream& out, const PrototypeBank& w) {
    write_dense_matrix(out, w.prototypes(), w.generation_id(), snapshot_tag_name(w.tag()));
}

PrototypeBank read_bank(std::istream& in) {
    DenseMatrixFile file = read_dense_matrix(in);
    return PrototypeBank(std::move(file.values), file.generation,
                         parse_snapshot_tag(file.tag));
}

}  // namespace plr
