#include "plr/propagation.hpp"

#include <algorithm>
#include <cmath>

namespace plr {

std::string propagation_mode_name(PropagationMode mode) {
    switch (mode) {
        case PropagationMode::kHard: return "hard";
        case PropagationMode::kSoft: return "soft";
        case PropagationMode::kBlend: return "blend";
    }
    throw StateError("propagation_mode_name: bad enum value");
}

PropagationMode parse_propagation_mode(const std::string& name) {
    if (name == "hard") return PropagationMode::kHard;
    if (name == "soft") return PropagationMode::kSoft;
    if (name == "blend") return PropagationMode::kBlend;
    throw ParseError("unknown propagation mode '" + name +
                     "' (expected hard, soft, or blend)");
}

std::optional<std::string> validate(const PropagationConfig& cfg) {
    if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) return "beta must be in [0, 1]";
    if (!(cfg.temperature > 0.0)) return "temperature must be > 0";
    return std::nullopt;
}

LabelVector prototype_confidence(const PrototypeBank& w, std::span<const double> f,
                                 double tau) {
    if (static_cast<int>(f.size()) != w.dim())
        throw DimensionError("prototype_confidence: embedding dim does not match bank");
    if (!(tau > 0.0)) throw PreconditionError("prototype_confidence: tau must be > 0");
    if (std::abs(l2_norm(f) - 1.0) > 1e-6)
        throw PreconditionError("prototype_confidence: embedding is not unit-norm");
    const int m = w.num_classes();
    if (m == 0) throw PreconditionError("prototype_confidence: empty bank");
    LabelVector out;
    out.weights.resize(static_cast<std::size_t>(m));
    double zmax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
        const double z = tau * dot(w.prototype(j), f);
        out.weights[static_cast<std::size_t>(j)] = z;
        zmax = std::max(zmax, z);
    }
    double sum = 0.0;
    for (double& z : out.weights) {
        z = std::exp(z - zmax);
        sum += z;
    }
    for (double& z : out.weights) z /= sum;
    return out;
}

LabelVector propagate_hard(const ConsensusMatrix& c, const Partition& prev, int sample) {
    if (!c.normalized())
        throw PreconditionError("propagate_hard: consensus matrix must be row-normalized");
    if (prev.num_clusters() != c.rows())
        throw DimensionError("propagate_hard: partition clusters do not match consensus rows");
    const int i = prev.cluster_of(sample);
    if (i < 0 || i >= c.rows())
        throw StateError("propagate_hard: sample has out-of-range cluster");
    LabelVector out;
    out.weights.assign(static_cast<std::size_t>(c.cols()), 0.0);
    for (const auto& [j, v] : c.row(i)) out.weights[static_cast<std::size_t>(j)] = v;
    return out;
}

LabelVector propagate_soft(const ConsensusMatrix& c, const LabelVector& confidence) {
    return transport(c, confidence);
}

LabelVector propagate_blend(const ConsensusMatrix& c, const Partition& prev, int sample,
                            const LabelVector& confidence, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw PreconditionError("propagate_blend: beta must be in [0, 1]");
    if (confidence.num_classes() != prev.num_clusters())
        throw DimensionError("propagate_blend: confidence classes do not match partition");
    const int i = prev.cluster_of(sample);
    LabelVector v;
    v.weights.resize(confidence.weights.size());
    const double keep = 1.0 - beta;
    for (int j = 0; j < confidence.num_classes(); ++j) {
        const double hot = (j == i) ? 1.0 : 0.0;
        v.weights[static_cast<std::size_t>(j)] =
            beta * hot + keep * confidence.weights[static_cast<std::size_t>(j)];
    }
    return transport(c, v);
}

}  // namespace plr
