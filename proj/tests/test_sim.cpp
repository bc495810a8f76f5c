#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "plr/errors.hpp"
#include "plr/matrix.hpp"
#include "plr/metrics.hpp"
#include "plr/rng.hpp"
#include "plr/sim.hpp"

using plr::NoiseModel;
using plr::ParseError;
using plr::Partition;
using plr::PreconditionError;
using plr::RunRecord;
using plr::RunResult;
using plr::SimConfig;
using plr::SplitMix64;
using plr::World;

namespace {

std::string minimal_json(const std::string& extra = "") {
    return R"({"seed": 7, "num_identities": 3, "samples_per_identity": 4,)"
           R"( "dim": 5, "generations": 2)" +
           extra + "}";
}

}  // namespace

TEST_CASE("parse_sim_config fills defaults from a minimal config") {
    const SimConfig cfg = plr::parse_sim_config(minimal_json());
    CHECK(cfg.seed == 7);
    CHECK(cfg.num_identities == 3);
    CHECK(cfg.samples_per_identity == 4);
    CHECK(cfg.dim == 5);
    CHECK(cfg.generations == 2);
    CHECK(cfg.intra_spread == 0.05);
    CHECK(cfg.noise.flip_rate == 0.0);
    CHECK(cfg.noise.drift == 0.0);
    CHECK(cfg.refinery.alpha == 0.9);
    CHECK(cfg.refinery.propagation.mode == plr::PropagationMode::kSoft);
    CHECK(cfg.refinery.propagation.beta == 0.0);
    CHECK(cfg.refinery.propagation.temperature == 30.0);
    CHECK(cfg.refinery.prototype_snapshot == plr::SnapshotTag::kBegin);
    CHECK(!cfg.cluster_enabled);
    CHECK(cfg.train.learning_rate == 0.05);
    CHECK(cfg.train.epochs == 10);
}

TEST_CASE("parse_sim_config reads every block") {
    const std::string text = R"({
        "seed": 11, "num_identities": 2, "samples_per_identity": 3,
        "dim": 4, "generations": 5, "intra_spread": 0.1,
        "noise": {"flip_rate": 0.25, "drift": 0.01},
        "refinery": {"alpha": 0.8, "prototype_snapshot": "end",
                     "propagation": {"mode": "blend", "beta": 0.4, "temperature": 12.0}},
        "cluster": {"enabled": true, "eps": 0.3, "min_pts": 2, "metric": "euclidean"},
        "train": {"learning_rate": 0.2, "epochs": 3}
    })";
    const SimConfig cfg = plr::parse_sim_config(text);
    CHECK(cfg.seed == 11);
    CHECK(cfg.intra_spread == 0.1);
    CHECK(cfg.noise.flip_rate == 0.25);
    CHECK(cfg.noise.drift == 0.01);
    CHECK(cfg.refinery.alpha == 0.8);
    CHECK(cfg.refinery.prototype_snapshot == plr::SnapshotTag::kEnd);
    CHECK(cfg.refinery.propagation.mode == plr::PropagationMode::kBlend);
    CHECK(cfg.refinery.propagation.beta == 0.4);
    CHECK(cfg.refinery.propagation.temperature == 12.0);
    CHECK(cfg.cluster_enabled);
    CHECK(cfg.cluster.eps == 0.3);
    CHECK(cfg.cluster.min_pts == 2);
    CHECK(cfg.cluster.metric == plr::Metric::kEuclidean);
    CHECK(cfg.train.learning_rate == 0.2);
    CHECK(cfg.train.epochs == 3);
}

TEST_CASE("a cluster block implies clustering unless disabled explicitly") {
    CHECK(plr::parse_sim_config(minimal_json(R"(, "cluster": {"eps": 0.3, "min_pts": 2})"))
              .cluster_enabled);
    CHECK(!plr::parse_sim_config(minimal_json(R"(, "cluster": {})")).cluster_enabled);
    const SimConfig cfg = plr::parse_sim_config(
        minimal_json(R"(, "cluster": {"enabled": false, "eps": 0.3})"));
    CHECK(!cfg.cluster_enabled);
    CHECK(cfg.cluster.eps == 0.3);  // params are kept even when disabled
}

TEST_CASE("parse_sim_config rejects missing or malformed required fields") {
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(R"({"num_identities": 3,)"
                                               R"( "samples_per_identity": 4, "dim": 5,)"
                                               R"( "generations": 2})"),
                         "config: missing required field 'seed'", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(R"({"seed": -1, "num_identities": 3,)"
                              R"( "samples_per_identity": 4, "dim": 5, "generations": 2})"),
        "config: field 'seed' must be a non-negative integer", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(R"({"seed": 1.5, "num_identities": 3,)"
                              R"( "samples_per_identity": 4, "dim": 5, "generations": 2})"),
        "config: field 'seed' must be a non-negative integer", ParseError);
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(R"({"seed": 7, "samples_per_identity": 4,)"
                                               R"( "dim": 5, "generations": 2})"),
                         "config: missing required field 'num_identities'", ParseError);
    CHECK_THROWS_AS(plr::parse_sim_config("{"), ParseError);          // malformed JSON
    CHECK_THROWS_WITH_AS(plr::parse_sim_config("[1, 2]"),
                         "config: top level must be an object", ParseError);
}

TEST_CASE("parse_sim_config names unknown fields, including nested ones") {
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(minimal_json(R"(, "frobnicate": 3)")),
                         "config: unknown field 'frobnicate'", ParseError);
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(minimal_json(R"(, "noise": {"fliprate": 0.1})")),
                         "config: unknown field 'noise.fliprate'", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(minimal_json(
            R"(, "refinery": {"propagation": {"mode": "hard", "gamma": 1.0}})")),
        "config: unknown field 'refinery.propagation.gamma'", ParseError);
}

TEST_CASE("parse_sim_config enforces field types") {
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(R"({"seed": 7, "num_identities": "three",)"
                              R"( "samples_per_identity": 4, "dim": 5, "generations": 2})"),
        "config: field 'num_identities' must be an integer", ParseError);
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(minimal_json(R"(, "intra_spread": "wide")")),
                         "config: field 'intra_spread' must be a number", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(minimal_json(R"(, "cluster": {"enabled": 1})")),
        "config: field 'cluster.enabled' must be a boolean", ParseError);
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(minimal_json(R"(, "noise": 3)")),
                         "config: field 'noise' must be an object", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(minimal_json(R"(, "refinery": {"prototype_snapshot": 3})")),
        "config: field 'refinery.prototype_snapshot' must be a string", ParseError);
}

TEST_CASE("parse_sim_config validates semantic ranges") {
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(minimal_json(R"(, "noise": {"flip_rate": 1.5})")),
        "config: noise.flip_rate must be in [0, 1]", ParseError);
    CHECK_THROWS_WITH_AS(plr::parse_sim_config(R"({"seed": 7, "num_identities": 3,)"
                                               R"( "samples_per_identity": 4, "dim": 5,)"
                                               R"( "generations": 0})"),
                         "config: generations must be >= 1", ParseError);
    CHECK_THROWS_WITH_AS(
        plr::parse_sim_config(minimal_json(R"(, "train": {"epochs": 0})")),
        "config: train.epochs must be >= 1", ParseError);
    CHECK_THROWS_AS(plr::parse_sim_config(minimal_json(R"(, "refinery": {"alpha": 1.5})")),
                    ParseError);
    CHECK_THROWS_AS(
        plr::parse_sim_config(minimal_json(
            R"(, "refinery": {"propagation": {"mode": "sideways"}})")),
        ParseError);
}

TEST_CASE("generate_world is deterministic and labels samples by block") {
    SimConfig cfg;
    cfg.seed = 42;
    cfg.num_identities = 3;
    cfg.samples_per_identity = 4;
    cfg.dim = 6;
    const World a = plr::generate_world(cfg);
    const World b = plr::generate_world(cfg);
    CHECK(a.embeddings == b.embeddings);
    CHECK(a.truth.assignment() == b.truth.assignment());

    CHECK(a.embeddings.size() == 12);
    CHECK(a.embeddings.dim() == 6);
    CHECK(a.truth.num_clusters() == 3);
    for (int k = 0; k < 12; ++k) {
        CHECK(a.truth.assignment()[static_cast<std::size_t>(k)] == k / 4);
        CHECK(plr::l2_norm(a.embeddings.row(k)) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SimConfig other = cfg;
    other.seed = 43;
    CHECK(plr::generate_world(other).embeddings != a.embeddings);
}

TEST_CASE("generate_world with zero spread collapses each identity onto its mean") {
    SimConfig cfg;
    cfg.seed = 9;
    cfg.num_identities = 2;
    cfg.samples_per_identity = 3;
    cfg.dim = 4;
    cfg.intra_spread = 0.0;
    const World w = plr::generate_world(cfg);
    for (int id = 0; id < 2; ++id)
        for (int s = 1; s < 3; ++s)
            for (int c = 0; c < 4; ++c)
                CHECK(w.embeddings.row(id * 3 + s)[static_cast<std::size_t>(c)] ==
                      w.embeddings.row(id * 3)[static_cast<std::size_t>(c)]);

    // Rebuild the identity means from the dedicated stream; each sample is the
    // re-normalized mean when the spread is zero.
    SplitMix64 mean_rng = plr::fork_stream(9, 0, plr::rng_stream::kIdentityMeans);
    plr::Matrix means(2, 4, 0.0);
    for (int i = 0; i < 2; ++i) {
        const auto row = means.row(i);
        for (double& x : row) x = mean_rng.next_gaussian();
        plr::normalize_l2(row);
    }
    for (int i = 0; i < 2; ++i) {
        plr::normalize_l2(means.row(i));
        for (int c = 0; c < 4; ++c)
            CHECK(w.embeddings.row(i * 3)[static_cast<std::size_t>(c)] ==
                  means.row(i)[static_cast<std::size_t>(c)]);
    }
}

TEST_CASE("generate_world handles a single identity and rejects bad configs") {
    SimConfig cfg;
    cfg.seed = 1;
    cfg.num_identities = 1;
    cfg.samples_per_identity = 5;
    cfg.dim = 3;
    const World w = plr::generate_world(cfg);
    CHECK(w.truth.num_clusters() == 1);
    CHECK(w.truth.assignment() == std::vector<int>{0, 0, 0, 0, 0});

    cfg.dim = 0;
    CHECK_THROWS_AS(plr::generate_world(cfg), PreconditionError);
}

TEST_CASE("perturb reassigns exactly llround(flip_rate * N) samples") {
    std::vector<int> labels(40);
    for (int k = 0; k < 40; ++k) labels[static_cast<std::size_t>(k)] = k / 10;
    const Partition p(labels, 4);

    SplitMix64 rng(123);
    const Partition q = plr::perturb(p, NoiseModel{0.2, 0.0}, rng);
    int moved = 0;
    for (int k = 0; k < 40; ++k)
        moved += q.assignment()[static_cast<std::size_t>(k)] !=
                 labels[static_cast<std::size_t>(k)];
    CHECK(moved == 8);
    CHECK(q.size() == 40);
    CHECK(q.num_clusters() == 4);  // 8 flips cannot empty a cluster of 10

    // llround rounds half away from zero: 0.05 * 10 -> exactly one flip.
    std::vector<int> ten(10);
    for (int k = 0; k < 10; ++k) ten[static_cast<std::size_t>(k)] = k / 5;
    SplitMix64 rng2(5);
    const Partition r = plr::perturb(Partition(ten, 2), NoiseModel{0.05, 0.0}, rng2);
    int moved2 = 0;
    for (int k = 0; k < 10; ++k)
        moved2 += r.assignment()[static_cast<std::size_t>(k)] !=
                  ten[static_cast<std::size_t>(k)];
    CHECK(moved2 == 1);
}

TEST_CASE("perturb is a no-op for zero rate or a single cluster") {
    const Partition p({0, 1, 0, 1, 2, 2}, 3);
    SplitMix64 rng(77);
    CHECK(plr::perturb(p, NoiseModel{0.0, 0.0}, rng).assignment() == p.assignment());

    const Partition lone({0, 0, 0, 0}, 1);
    CHECK(plr::perturb(lone, NoiseModel{1.0, 0.0}, rng).assignment() == lone.assignment());
}

TEST_CASE("perturb with rate 1 and two clusters flips every label") {
    const Partition p({0, 0, 0, 1, 1, 1}, 2);
    SplitMix64 rng(31);
    const Partition q = plr::perturb(p, NoiseModel{1.0, 0.0}, rng);
    CHECK(q.assignment() == std::vector<int>{1, 1, 1, 0, 0, 0});
}

TEST_CASE("perturb is deterministic in the generator state") {
    std::vector<int> labels(30);
    for (int k = 0; k < 30; ++k) labels[static_cast<std::size_t>(k)] = k % 5;
    const Partition p = Partition::from_labels(labels);
    SplitMix64 a(9001), b(9001);
    CHECK(plr::perturb(p, NoiseModel{0.4, 0.0}, a).assignment() ==
          plr::perturb(p, NoiseModel{0.4, 0.0}, b).assignment());
}

TEST_CASE("perturb rejects invalid partitions and rates") {
    SplitMix64 rng(4);
    CHECK_THROWS_AS(plr::perturb(Partition({0, 0}, 3), NoiseModel{0.5, 0.0}, rng),
                    PreconditionError);
    CHECK_THROWS_AS(plr::perturb(Partition({0, 1}, 2), NoiseModel{-0.1, 0.0}, rng),
                    PreconditionError);
    CHECK_THROWS_AS(plr::perturb(Partition({0, 1}, 2), NoiseModel{1.1, 0.0}, rng),
                    PreconditionError);
}

TEST_CASE("higher flip rates push the perturbed partition further from the original") {
    std::vector<int> labels(60);
    for (int k = 0; k < 60; ++k) labels[static_cast<std::size_t>(k)] = k / 10;
    const Partition p(labels, 6);

    auto mean_ari = [&](double rate) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            SplitMix64 rng(seed);
            const Partition q = plr::perturb(p, NoiseModel{rate, 0.0}, rng);
            total += plr::compare_labels(q.assignment(), labels).ari;
        }
        return total / 20.0;
    };
    const double mild = mean_ari(0.1);
    const double harsh = mean_ari(0.3);
    CHECK(mild > harsh);
    CHECK(mild > 0.5);
    CHECK(harsh < 0.7);
}

namespace {

SimConfig noiseless_config() {
    SimConfig cfg;
    cfg.seed = 5;
    cfg.num_identities = 4;
    cfg.samples_per_identity = 5;
    cfg.dim = 8;
    cfg.intra_spread = 0.05;
    cfg.generations = 3;
    cfg.refinery.alpha = 0.9;
    cfg.refinery.propagation.mode = plr::PropagationMode::kHard;
    cfg.train.learning_rate = 0.1;
    cfg.train.epochs = 2;
    return cfg;
}

}  // namespace

TEST_CASE("a noiseless run is a fixed point: perfect scores in every generation") {
    const RunResult res = plr::run_experiment(noiseless_config());
    REQUIRE(res.records.size() == 3);
    for (const RunRecord& rec : res.records) {
        CHECK(rec.num_clusters == 4);
        CHECK(rec.ari_raw == 1.0);
        CHECK(rec.ari_refined == 1.0);
        CHECK(rec.nmi_raw == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rec.nmi_refined == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rec.ce_raw == 0.0);
        CHECK(rec.ce_refined == 0.0);
        CHECK(rec.diag_mass == 1.0);
    }
    CHECK(res.ce_clamp_events == 0);
}

TEST_CASE("alpha = 1 ignores the propagated labels: refined metrics equal raw") {
    SimConfig cfg;
    cfg.seed = 21;
    cfg.num_identities = 5;
    cfg.samples_per_identity = 6;
    cfg.dim = 8;
    cfg.intra_spread = 0.05;
    cfg.generations = 5;
    cfg.noise.flip_rate = 0.2;
    cfg.refinery.alpha = 1.0;
    cfg.refinery.propagation.mode = plr::PropagationMode::kHard;
    cfg.train.learning_rate = 0.1;
    cfg.train.epochs = 2;
    const RunResult res = plr::run_experiment(cfg);
    REQUIRE(res.records.size() == 5);
    bool saw_error = false;
    for (const RunRecord& rec : res.records) {
        CHECK(rec.ari_refined == rec.ari_raw);
        CHECK(rec.nmi_refined == rec.nmi_raw);
        CHECK(rec.ce_refined == rec.ce_raw);
        saw_error = saw_error || rec.ce_raw > 0.0;
    }
    CHECK(saw_error);  // the flips really did corrupt the partitions
}

TEST_CASE("momentum refinement beats the raw labels under label noise") {
    SimConfig cfg;
    cfg.seed = 3;
    cfg.num_identities = 6;
    cfg.samples_per_identity = 8;
    cfg.dim = 12;
    cfg.intra_spread = 0.05;
    cfg.generations = 6;
    cfg.noise.flip_rate = 0.2;
    cfg.refinery.alpha = 0.9;
    cfg.refinery.propagation.mode = plr::PropagationMode::kSoft;
    cfg.refinery.propagation.temperature = 30.0;
    cfg.train.learning_rate = 0.2;
    cfg.train.epochs = 5;
    const RunResult res = plr::run_experiment(cfg);
    REQUIRE(res.records.size() == 6);

    // Generation 0 bootstraps refined = one-hot raw, so compare later ones.
    double raw = 0.0, refined = 0.0;
    for (std::size_t t = 1; t < res.records.size(); ++t) {
        raw += res.records[t].ce_raw;
        refined += res.records[t].ce_refined;
    }
    CHECK(refined < raw);
    CHECK(res.records.back().ce_refined < res.records.back().ce_raw);
    CHECK(res.records.back().ari_refined >= res.records.back().ari_raw);
}

TEST_CASE("run_experiment over dbscan recovers well-separated identities") {
    SimConfig cfg;
    cfg.seed = 17;
    cfg.num_identities = 3;
    cfg.samples_per_identity = 6;
    cfg.dim = 8;
    cfg.intra_spread = 0.01;
    cfg.generations = 3;
    cfg.cluster_enabled = true;
    cfg.cluster.eps = 0.1;
    cfg.cluster.min_pts = 3;
    cfg.cluster.metric = plr::Metric::kCosine;
    cfg.train.learning_rate = 0.1;
    cfg.train.epochs = 2;
    const RunResult res = plr::run_experiment(cfg);
    for (const RunRecord& rec : res.records) {
        CHECK(rec.num_clusters == 3);
        CHECK(rec.ari_raw == 1.0);
        CHECK(rec.ari_refined == 1.0);
    }
}

TEST_CASE("run_experiment is byte-deterministic across repeats and thread counts") {
    SimConfig cfg;
    cfg.seed = 99;
    cfg.num_identities = 4;
    cfg.samples_per_identity = 6;
    cfg.dim = 8;
    cfg.intra_spread = 0.05;
    cfg.generations = 4;
    cfg.noise.flip_rate = 0.15;
    cfg.noise.drift = 0.01;
    cfg.refinery.propagation.mode = plr::PropagationMode::kSoft;
    cfg.train.learning_rate = 0.1;
    cfg.train.epochs = 3;

    const RunResult base = plr::run_experiment(cfg, 1);
    const std::string csv = plr::run_records_csv(base.records);
    for (int threads : {1, 4, 8}) {
        const RunResult again = plr::run_experiment(cfg, threads);
        CHECK(plr::run_records_csv(again.records) == csv);
        CHECK(again.ce_clamp_events == base.ce_clamp_events);
    }
}

TEST_CASE("run_experiment rejects invalid configs") {
    SimConfig cfg = noiseless_config();
    cfg.train.epochs = 0;
    CHECK_THROWS_AS(plr::run_experiment(cfg), PreconditionError);
}

TEST_CASE("run_records_csv emits the fixed header and 9-digit rows") {
    CHECK(plr::run_records_csv({}) ==
          "generation,m,ari_raw,ari_refined,nmi_raw,nmi_refined,ce_raw,ce_refined,diag_mass\n");

    RunRecord rec;
    rec.generation = 2;
    rec.num_clusters = 7;
    rec.ari_raw = 1.0;
    rec.ari_refined = 1.0;
    rec.nmi_raw = 1.0;
    rec.nmi_refined = 1.0;
    rec.ce_raw = 0.0;
    rec.ce_refined = 0.0;
    rec.diag_mass = 1.0;
    const std::string csv = plr::run_records_csv({rec});
    const std::string header =
        "generation,m,ari_raw,ari_refined,nmi_raw,nmi_refined,ce_raw,ce_refined,diag_mass\n";
    CHECK(csv == header + "2,7,1,1,1,1,0,0,1\n");
}
