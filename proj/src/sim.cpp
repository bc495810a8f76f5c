#include "plr/sim.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "plr/format.hpp"
#include "plr/metrics.hpp"

namespace plr {

std::optional<std::string> validate(const SimConfig& cfg) {
    if (cfg.num_identities < 1) return "num_identities must be >= 1";
    if (cfg.samples_per_identity < 1) return "samples_per_identity must be >= 1";
    if (cfg.dim < 1) return "dim must be >= 1";
    if (cfg.generations < 1) return "generations must be >= 1";
    if (!(cfg.intra_spread >= 0.0)) return "intra_spread must be >= 0";
    if (!(cfg.noise.flip_rate >= 0.0 && cfg.noise.flip_rate <= 1.0))
        return "noise.flip_rate must be in [0, 1]";
    if (!(cfg.noise.drift >= 0.0)) return "noise.drift must be >= 0";
    if (auto bad = validate(cfg.refinery)) return "refinery: " + *bad;
    if (auto bad = validate(cfg.cluster)) return "cluster: " + *bad;
    if (!(cfg.train.learning_rate > 0.0)) return "train.learning_rate must be > 0";
    if (cfg.train.epochs < 1) return "train.epochs must be >= 1";
    return std::nullopt;
}

// --- config parsing ------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const char* path,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* name : allowed)
            if (key == name) { known = true; break; }
        if (!known)
            throw ParseError(std::string("config: unknown field '") + path + key + "'");
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const char* path, const char* key, double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number())
        throw ParseError(std::string("config: field '") + path + key + "' must be a number");
    return v->get<double>();
}

int get_int(const json& obj, const char* path, const char* key,
            std::optional<int> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ParseError(std::string("config: missing required field '") + path + key + "'");
    }
    if (!v->is_number_integer())
        throw ParseError(std::string("config: field '") + path + key +
                         "' must be an integer");
    return v->get<int>();
}

std::string get_string(const json& obj, const char* path, const char* key,
                       const std::string& fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string())
        throw ParseError(std::string("config: field '") + path + key + "' must be a string");
    return v->get<std::string>();
}

bool get_bool(const json& obj, const char* path, const char* key, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean())
        throw ParseError(std::string("config: field '") + path + key + "' must be a boolean");
    return v->get<bool>();
}

const json& get_object(const json& obj, const char* path, const char* key) {
    const json* v = find(obj, key);
    if (!v) {
        static const json empty = json::object();
        return empty;
    }
    if (!v->is_object())
        throw ParseError(std::string("config: field '") + path + key + "' must be an object");
    return *v;
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("config: top level must be an object");
    reject_unknown(root, "",
                   {"seed", "num_identities", "samples_per_identity", "dim", "generations",
                    "intra_spread", "noise", "refinery", "cluster", "train"});

    SimConfig cfg;
    {
        const json* seed = find(root, "seed");
        if (!seed) throw ParseError("config: missing required field 'seed'");
        if (!seed->is_number_integer() || (seed->is_number_integer() && !seed->is_number_unsigned() && seed->get<long long>() < 0))
            throw ParseError("config: field 'seed' must be a non-negative integer");
        cfg.seed = seed->get<std::uint64_t>();
    }
    cfg.num_identities = get_int(root, "", "num_identities");
    cfg.samples_per_identity = get_int(root, "", "samples_per_identity");
    cfg.dim = get_int(root, "", "dim");
    cfg.generations = get_int(root, "", "generations");
    cfg.intra_spread = get_double(root, "", "intra_spread", cfg.intra_spread);

    const json& noise = get_object(root, "", "noise");
    reject_unknown(noise, "noise.", {"flip_rate", "drift"});
    cfg.noise.flip_rate = get_double(noise, "noise.", "flip_rate", cfg.noise.flip_rate);
    cfg.noise.drift = get_double(noise, "noise.", "drift", cfg.noise.drift);

    const json& refinery = get_object(root, "", "refinery");
    reject_unknown(refinery, "refinery.", {"alpha", "propagation", "prototype_snapshot"});
    cfg.refinery.alpha = get_double(refinery, "refinery.", "alpha", cfg.refinery.alpha);
    cfg.refinery.prototype_snapshot = parse_snapshot_tag(
        get_string(refinery, "refinery.", "prototype_snapshot",
                   snapshot_tag_name(cfg.refinery.prototype_snapshot)));
    const json& prop = get_object(refinery, "refinery.", "propagation");
    reject_unknown(prop, "refinery.propagation.", {"mode", "beta", "temperature"});
    cfg.refinery.propagation.mode = parse_propagation_mode(
        get_string(prop, "refinery.propagation.", "mode",
                   propagation_mode_name(cfg.refinery.propagation.mode)));
    cfg.refinery.propagation.beta =
        get_double(prop, "refinery.propagation.", "beta", cfg.refinery.propagation.beta);
    cfg.refinery.propagation.temperature = get_double(
        prop, "refinery.propagation.", "temperature", cfg.refinery.propagation.temperature);

    const json& cluster = get_object(root, "", "cluster");
    reject_unknown(cluster, "cluster.", {"enabled", "eps", "min_pts", "metric"});
    cfg.cluster_enabled = get_bool(cluster, "cluster.", "enabled", !cluster.empty());
    cfg.cluster.eps = get_double(cluster, "cluster.", "eps", cfg.cluster.eps);
    cfg.cluster.min_pts = get_int(cluster, "cluster.", "min_pts", cfg.cluster.min_pts);
    cfg.cluster.metric =
        parse_metric(get_string(cluster, "cluster.", "metric", metric_name(cfg.cluster.metric)));

    const json& train = get_object(root, "", "train");
    reject_unknown(train, "train.", {"learning_rate", "epochs"});
    cfg.train.learning_rate =
        get_double(train, "train.", "learning_rate", cfg.train.learning_rate);
    cfg.train.epochs = get_int(train, "train.", "epochs", cfg.train.epochs);

    if (auto bad = validate(cfg)) throw ParseError("config: " + *bad);
    return cfg;
}

// --- world + noise -------------------------------------------------------

World generate_world(const SimConfig& cfg) {
    if (auto bad = validate(cfg)) throw PreconditionError("generate_world: " + *bad);
    const int n = cfg.num_identities * cfg.samples_per_identity;

    Matrix means(cfg.num_identities, cfg.dim, 0.0);
    SplitMix64 mean_rng = fork_stream(cfg.seed, 0, rng_stream::kIdentityMeans);
    for (int i = 0; i < cfg.num_identities; ++i) {
        const auto row = means.row(i);
        for (double& x : row) x = mean_rng.next_gaussian();
        normalize_l2(row);
    }

    Matrix feats(n, cfg.dim, 0.0);
    std::vector<int> truth(static_cast<std::size_t>(n), 0);
    SplitMix64 noise_rng = fork_stream(cfg.seed, 0, rng_stream::kSampleNoise);
    for (int k = 0; k < n; ++k) {
        const int identity = k / cfg.samples_per_identity;
        truth[static_cast<std::size_t>(k)] = identity;
        const auto mean = means.row(identity);
        const auto row = feats.row(k);
        for (int c = 0; c < cfg.dim; ++c)
            row[static_cast<std::size_t>(c)] =
                mean[static_cast<std::size_t>(c)] + cfg.intra_spread * noise_rng.next_gaussian();
        normalize_l2(row);
    }
    return World{EmbeddingSet(std::move(feats)), Partition(std::move(truth), cfg.num_identities, 0)};
}

Partition perturb(const Partition& p, const NoiseModel& noise, SplitMix64& rng) {
    if (auto bad = validate(p)) throw PreconditionError("perturb: invalid partition: " + *bad);
    if (!(noise.flip_rate >= 0.0 && noise.flip_rate <= 1.0))
        throw PreconditionError("perturb: flip_rate must be in [0, 1]");
    const int n = p.size();
    const int m = p.num_clusters();
    const int flips = static_cast<int>(std::llround(noise.flip_rate * n));
    if (flips == 0 || m < 2) return p;

    // Sample `flips` distinct indices: partial Fisher-Yates over [0, N).
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
    std::vector<int> labels = p.assignment();
    for (int t = 0; t < flips; ++t) {
        const int pick = t + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - t)));
        std::swap(order[static_cast<std::size_t>(t)], order[static_cast<std::size_t>(pick)]);
        const int k = order[static_cast<std::size_t>(t)];
        // Uniform over the m-1 other clusters.
        int c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m - 1)));
        if (c >= labels[static_cast<std::size_t>(k)]) ++c;
        labels[static_cast<std::size_t>(k)] = c;
    }
    return Partition::from_labels(labels, p.generation_id());
}

// --- generation loop -----------------------------------------------------

namespace {

void apply_drift(EmbeddingSet& e, double scale, SplitMix64& rng) {
    for (int k = 0; k < e.size(); ++k) {
        const auto row = e.row(k);
        for (double& x : row) x += scale * rng.next_gaussian();
        normalize_l2(row);
    }
}

}  // namespace

RunResult run_experiment(const SimConfig& cfg, int num_threads) {
    if (auto bad = validate(cfg)) throw PreconditionError("run_experiment: " + *bad);

    World world = generate_world(cfg);
    EmbeddingSet embeddings = world.embeddings;
    const Partition& truth = world.truth;

    RunResult result;
    result.records.reserve(static_cast<std::size_t>(cfg.generations));
    std::optional<GenerationState> state;

    for (int t = 0; t < cfg.generations; ++t) {
        if (cfg.noise.drift > 0.0) {
            SplitMix64 drift_rng = fork_stream(cfg.seed, static_cast<std::uint64_t>(t),
                                               rng_stream::kDrift);
            apply_drift(embeddings, cfg.noise.drift, drift_rng);
        }

        Clusterer clusterer;
        if (cfg.cluster_enabled) {
            clusterer = [&cfg](const EmbeddingSet& e) { return dbscan(e, cfg.cluster); };
        } else {
            SplitMix64 flip_rng =
                fork_stream(cfg.seed, static_cast<std::uint64_t>(t), rng_stream::kLabelFlips);
            Partition noisy = perturb(truth, cfg.noise, flip_rng);
            clusterer = [noisy](const EmbeddingSet&) { return noisy; };
        }

        GenerationState next =
            run_generation(state, embeddings, cfg.refinery, clusterer, num_threads);

        TrainResult trained = train_generation(
            next.prototype_bank(), embeddings, next.refined_labels(),
            cfg.refinery.propagation.temperature, cfg.train.learning_rate,
            cfg.train.epochs);
        embeddings = std::move(trained.embeddings);
        if (cfg.refinery.prototype_snapshot == SnapshotTag::kEnd)
            next = next.with_prototype_bank(std::move(trained.bank));

        RunRecord rec;
        rec.generation = t;
        rec.num_clusters = next.partition().num_clusters();
        const ClusterMetrics raw = compare_partitions(next.partition(), truth);
        const ClusterMetrics refined =
            compare_labels(argmax_labels(next.refined_labels()), truth.assignment());
        rec.ari_raw = raw.ari;
        rec.nmi_raw = raw.nmi;
        rec.ari_refined = refined.ari;
        rec.nmi_refined = refined.nmi;
        rec.ce_raw = cross_entropy_vs_truth(LabelMatrix::one_hots(next.partition()),
                                            next.partition(), truth,
                                            &result.ce_clamp_events);
        rec.ce_refined = cross_entropy_vs_truth(next.refined_labels(), next.partition(),
                                                truth, &result.ce_clamp_events);
        rec.diag_mass = mean_row_max(next.consensus());
        result.records.push_back(rec);

        state = std::move(next);
    }
    return result;
}

std::string run_records_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "generation,m,ari_raw,ari_refined,nmi_raw,nmi_refined,ce_raw,ce_refined,diag_mass\n";
    for (const RunRecord& r : records) {
        out << r.generation << ',' << r.num_clusters << ',' << format_sig(r.ari_raw, 9)
            << ',' << format_sig(r.ari_refined, 9) << ',' << format_sig(r.nmi_raw, 9) << ','
            << format_sig(r.nmi_refined, 9) << ',' << format_sig(r.ce_raw, 9) << ','
            << format_sig(r.ce_refined, 9) << ',' << format_sig(r.diag_mass, 9) << '\n';
    }
    return out.str();
}

}  // namespace plr
