#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plr/clustering.hpp"
#include "plr/refinery.hpp"
#include "plr/rng.hpp"

namespace plr {

struct NoiseModel {
    double flip_rate = 0.0;  // fraction of samples reassigned each generation
    double drift = 0.0;      // embedding jitter scale per generation
};

struct TrainParams {
    double learning_rate = 0.05;
    int epochs = 10;
};

struct SimConfig {
    std::uint64_t seed = 0;
    int num_identities = 1;
    int samples_per_identity = 1;
    int dim = 2;
    double intra_spread = 0.05;
    NoiseModel noise;
    int generations = 1;
    RefineryConfig refinery;
    bool cluster_enabled = false;  // false: perturb ground truth instead
    ClusterParams cluster;
    TrainParams train;
};

std::optional<std::string> validate(const SimConfig& cfg);

// Strict JSON schema: unknown fields anywhere are hard errors, as are wrong
// types; missing optional blocks fall back to defaults. See README for the
// full schema.
SimConfig parse_sim_config(const std::string& json_text);

struct World {
    EmbeddingSet embeddings;
    Partition truth;
};

// Identity means uniform on the unit sphere (normal-then-normalize), samples
// = normalize(mean + intra_spread * gaussian). Sample k belongs to identity
// k / samples_per_identity. Deterministic per seed.
World generate_world(const SimConfig& cfg);

// Reassigns exactly llround(flip_rate * N) samples (sampled without
// replacement) to a uniformly random *other* cluster, then re-indexes so no
// cluster is left empty. M = 1 leaves everything in place.
Partition perturb(const Partition& p, const NoiseModel& noise, SplitMix64& rng);

struct RunRecord {
    int generation = 0;
    int num_clusters = 0;
    double ari_raw = 0.0;
    double ari_refined = 0.0;  // argmax of refined labels vs truth
    double nmi_raw = 0.0;
    double nmi_refined = 0.0;
    double ce_raw = 0.0;       // majority-mapped CE vs truth, raw one-hots
    double ce_refined = 0.0;   // same, refined soft labels
    double diag_mass = 0.0;    // mean max row mass of the consensus matrix
};

struct RunResult {
    std::vector<RunRecord> records;
    long ce_clamp_events = 0;  // log clamps hit while scoring CE
};

// The generation loop: drift embeddings, partition (dbscan over embeddings,
// or perturbed ground truth when clustering is disabled), refine labels
// through the consensus pipeline, train the prototype learner, score against
// ground truth. Byte-determinism: identical cfg (and any num_threads) yields
// identical records.
RunResult run_experiment(const SimConfig& cfg, int num_threads = 1);

// Fixed-header CSV with 9-significant-digit floats; byte-stable.
std::string run_records_csv(const std::vector<RunRecord>& records);

}  // namespace plr
