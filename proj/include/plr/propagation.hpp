#pragma once

#include <optional>
#include <string>

#include "plr/consensus.hpp"
#include "plr/learner.hpp"
#include "plr/partition.hpp"

namespace plr {

enum class PropagationMode { kHard, kSoft, kBlend };

std::string propagation_mode_name(PropagationMode mode);
PropagationMode parse_propagation_mode(const std::string& name);  // throws ParseError

struct PropagationConfig {
    PropagationMode mode = PropagationMode::kSoft;
    double beta = 0.0;         // blend mode: weight of the one-hot component
    double temperature = 30.0; // soft/blend: sharpening of prototype logits
};

std::optional<std::string> validate(const PropagationConfig& cfg);

// softmax(tau * W * f): the previous generation's class confidences for one
// sample. Numerically stabilized by max subtraction.
LabelVector prototype_confidence(const PrototypeBank& w, std::span<const double> f,
                                 double tau);

// Transport of the sample's one-hot previous label: row (prev cluster of
// sample) of the normalized consensus matrix.
LabelVector propagate_hard(const ConsensusMatrix& c, const Partition& prev, int sample);

// Transport of a full confidence distribution over previous clusters.
LabelVector propagate_soft(const ConsensusMatrix& c, const LabelVector& confidence);

// Transport of beta * one_hot + (1 - beta) * confidence. Transport is linear,
// so this equals the same blend of the hard and soft outputs; beta=1 and
// beta=0 reduce to them bitwise.
LabelVector propagate_blend(const ConsensusMatrix& c, const Partition& prev, int sample,
                            const LabelVector& confidence, double beta);

}  // namespace plr
