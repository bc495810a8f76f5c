// Command-line front end: simulate | consensus | refine | sweep | metrics.
// Exit codes: 0 success, 1 runtime failure, 2 usage or input validation.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "plr/clustering.hpp"
#include "plr/consensus.hpp"
#include "plr/format.hpp"
#include "plr/learner.hpp"
#include "plr/metrics.hpp"
#include "plr/partition.hpp"
#include "plr/propagation.hpp"
#include "plr/refinery.hpp"
#include "plr/sim.hpp"
#include "plr/svg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw plr::ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw plr::Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw plr::Error("write failed for '" + path.string() + "'");
}

plr::Partition load_partition(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw plr::ParseError("cannot open '" + path + "'");
    return plr::read_partition(in);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::string& config_path) {
    nlohmann::json m;
    m["command"] = command;
    m["config_path"] = config_path;
    m["output_dir"] = dir.string();
    m["timestamp"] = utc_timestamp();
    m["version"] = kVersion;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::string join_args(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i > 0) out += ' ';
        out += argv[i];
    }
    return out;
}

// Writes to --out when given, stdout otherwise.
void emit(const std::optional<std::string>& out_path, const std::string& content) {
    if (out_path)
        write_file(*out_path, content);
    else
        std::cout << content;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool dry_run = false;
    int threads = 1;
};

int run_simulate(const SimulateArgs& args, const std::string& command) {
    plr::SimConfig cfg = plr::parse_sim_config(read_file(args.config_path));
    if (args.seed_override) cfg.seed = *args.seed_override;
    if (args.dry_run) {
        std::cout << "config ok\n";
        return 0;
    }
    const plr::RunResult result = plr::run_experiment(cfg, args.threads);
    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "run.csv", plr::run_records_csv(result.records));
    write_manifest(args.out_dir, command, args.config_path);
    if (result.ce_clamp_events > 0)
        std::cerr << "note: cross-entropy log clamp engaged " << result.ce_clamp_events
                  << " times\n";
    std::cout << "wrote " << (fs::path(args.out_dir) / "run.csv").string() << "\n";
    return 0;
}

// --- consensus ------------------------------------------------------------

struct ConsensusArgs {
    std::string prev_path;
    std::string curr_path;
    bool normalize = false;
    std::optional<std::string> out_path;
};

int run_consensus(const ConsensusArgs& args) {
    const plr::Partition prev = load_partition(args.prev_path);
    const plr::Partition curr = load_partition(args.curr_path);
    plr::ConsensusMatrix c = plr::compute_consensus(prev, curr);
    if (args.normalize) c = plr::normalize_rows(c);
    std::ostringstream out;
    plr::write_consensus(out, c);
    emit(args.out_path, out.str());
    return 0;
}

// --- refine ---------------------------------------------------------------

struct RefineArgs {
    std::string prev_path;
    std::string curr_path;
    std::string mode = "hard";
    double alpha = 0.9;
    double tau = 30.0;
    double beta = 0.0;
    std::optional<std::string> prototypes_path;
    std::optional<std::string> embeddings_path;
    std::optional<std::string> out_path;
};

int run_refine(const RefineArgs& args) {
    const plr::Partition prev = load_partition(args.prev_path);
    const plr::Partition curr = load_partition(args.curr_path);
    const plr::PropagationMode mode = plr::parse_propagation_mode(args.mode);
    if (!(args.alpha >= 0.0 && args.alpha <= 1.0))
        throw plr::PreconditionError("--alpha must be in [0, 1]");

    const plr::ConsensusMatrix consensus =
        plr::normalize_rows(plr::compute_consensus(prev, curr));

    std::optional<plr::PrototypeBank> bank;
    std::optional<plr::EmbeddingSet> embeddings;
    if (mode != plr::PropagationMode::kHard) {
        if (!args.prototypes_path || !args.embeddings_path)
            throw plr::PreconditionError(
                "soft/blend modes require --prototypes and --embeddings");
        {
            std::ifstream in(*args.prototypes_path, std::ios::binary);
            if (!in) throw plr::ParseError("cannot open '" + *args.prototypes_path + "'");
            bank = plr::read_bank(in);
        }
        {
            std::ifstream in(*args.embeddings_path, std::ios::binary);
            if (!in) throw plr::ParseError("cannot open '" + *args.embeddings_path + "'");
            embeddings = plr::read_embeddings(in);
        }
        if (embeddings->size() != curr.size())
            throw plr::DimensionError("embeddings and partitions disagree on sample count");
        if (bank->num_classes() != prev.num_clusters())
            throw plr::DimensionError("prototype bank classes do not match previous clusters");
        if (bank->dim() != embeddings->dim())
            throw plr::DimensionError("prototype bank and embeddings disagree on dim");
    }

    plr::Matrix values(curr.size(), curr.num_clusters(), 0.0);
    for (int k = 0; k < curr.size(); ++k) {
        plr::LabelVector propagated;
        switch (mode) {
            case plr::PropagationMode::kHard:
                propagated = plr::propagate_hard(consensus, prev, k);
                break;
            case plr::PropagationMode::kSoft:
                propagated = plr::propagate_soft(
                    consensus,
                    plr::prototype_confidence(*bank, embeddings->row(k), args.tau));
                break;
            case plr::PropagationMode::kBlend:
                propagated = plr::propagate_blend(
                    consensus, prev, k,
                    plr::prototype_confidence(*bank, embeddings->row(k), args.tau),
                    args.beta);
                break;
        }
        const plr::LabelVector refined =
            plr::refine_label(plr::one_hot(curr, k), propagated, args.alpha);
        for (int j = 0; j < curr.num_clusters(); ++j)
            values.at(k, j) = refined.weights[static_cast<std::size_t>(j)];
    }

    std::ostringstream out;
    plr::write_label_matrix(out, plr::LabelMatrix(std::move(values), curr.generation_id()),
                            args.alpha);
    emit(args.out_path, out.str());
    return 0;
}

// --- sweep ------------------------------------------------------------

struct SweepArgs {
    std::string config_path;
    std::string param;
    std::string values_csv;
    int seeds = 20;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool dry_run = false;
    int threads = 1;
};

plr::SimConfig apply_param(plr::SimConfig cfg, const std::string& param, double value) {
    if (param == "alpha")
        cfg.refinery.alpha = value;
    else if (param == "tau")
        cfg.refinery.propagation.temperature = value;
    else if (param == "beta")
        cfg.refinery.propagation.beta = value;
    else if (param == "flip_rate")
        cfg.noise.flip_rate = value;
    else
        throw plr::PreconditionError("unknown sweep parameter '" + param + "'");
    return cfg;
}

int run_sweep(const SweepArgs& args, const std::string& command) {
    const plr::SimConfig base = plr::parse_sim_config(read_file(args.config_path));

    std::vector<std::string> tokens;
    std::vector<double> values;
    for (const auto tok : plr::split(args.values_csv, ',')) {
        if (tok.empty()) throw plr::ParseError("--values: empty value token");
        tokens.emplace_back(tok);
        values.push_back(plr::parse_double(tok));
    }
    if (values.empty()) throw plr::ParseError("--values: no values given");
    if (args.seeds < 1) throw plr::PreconditionError("--seeds must be >= 1");

    // Validate every sweep point up front so a bad value fails fast.
    std::vector<plr::SimConfig> configs;
    for (double v : values) {
        plr::SimConfig cfg = apply_param(base, args.param, v);
        if (args.seed_override) cfg.seed = *args.seed_override;
        if (auto bad = plr::validate(cfg))
            throw plr::PreconditionError("sweep value " + plr::format_sig(v, 9) +
                                         ": " + *bad);
        configs.push_back(cfg);
    }
    if (args.dry_run) {
        std::cout << "config ok\n";
        return 0;
    }

    // Fan out (value, seed) jobs; every slot is written by exactly one job,
    // so scheduling cannot affect the results.
    const int nv = static_cast<int>(values.size());
    const int ns = args.seeds;
    std::vector<std::vector<plr::RunRecord>> finals(
        static_cast<std::size_t>(nv),
        std::vector<plr::RunRecord>(static_cast<std::size_t>(ns)));
    std::vector<std::string> base_csvs(static_cast<std::size_t>(nv));
    std::atomic<int> next_job{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    const int total_jobs = nv * ns;
    const int workers = std::max(1, std::min(args.threads, total_jobs));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int job = next_job.fetch_add(1);
                if (job >= total_jobs || failed.load()) return;
                const int vi = job / ns;
                const int si = job % ns;
                try {
                    plr::SimConfig cfg = configs[static_cast<std::size_t>(vi)];
                    cfg.seed += static_cast<std::uint64_t>(si);
                    const plr::RunResult r = plr::run_experiment(cfg, 1);
                    finals[static_cast<std::size_t>(vi)][static_cast<std::size_t>(si)] =
                        r.records.back();
                    if (si == 0)
                        base_csvs[static_cast<std::size_t>(vi)] =
                            plr::run_records_csv(r.records);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    for (int vi = 0; vi < nv; ++vi)
        write_file(dir / ("run_" + args.param + "_" + tokens[static_cast<std::size_t>(vi)] +
                          ".csv"),
                   base_csvs[static_cast<std::size_t>(vi)]);

    // Seed-averaged final-generation metrics, one row per sweep value.
    std::ostringstream summary;
    summary << "param,value,ari_raw,ari_refined,nmi_raw,nmi_refined,ce_raw,ce_refined,"
               "diag_mass\n";
    std::vector<double> ce_raw_means, ce_refined_means;
    for (int vi = 0; vi < nv; ++vi) {
        double ari_raw = 0, ari_ref = 0, nmi_raw = 0, nmi_ref = 0, ce_raw = 0, ce_ref = 0,
               diag = 0;
        for (const plr::RunRecord& r : finals[static_cast<std::size_t>(vi)]) {
            ari_raw += r.ari_raw;
            ari_ref += r.ari_refined;
            nmi_raw += r.nmi_raw;
            nmi_ref += r.nmi_refined;
            ce_raw += r.ce_raw;
            ce_ref += r.ce_refined;
            diag += r.diag_mass;
        }
        const double inv = 1.0 / static_cast<double>(ns);
        summary << args.param << ',' << tokens[static_cast<std::size_t>(vi)] << ','
                << plr::format_sig(ari_raw * inv, 9) << ','
                << plr::format_sig(ari_ref * inv, 9) << ','
                << plr::format_sig(nmi_raw * inv, 9) << ','
                << plr::format_sig(nmi_ref * inv, 9) << ','
                << plr::format_sig(ce_raw * inv, 9) << ','
                << plr::format_sig(ce_ref * inv, 9) << ','
                << plr::format_sig(diag * inv, 9) << '\n';
        ce_raw_means.push_back(ce_raw * inv);
        ce_refined_means.push_back(ce_ref * inv);
    }
    write_file(dir / "summary.csv", summary.str());

    const std::string svg = plr::line_chart_svg(
        "mean final-generation cross-entropy vs " + args.param, args.param, "CE", values,
        {{"ce_raw", ce_raw_means}, {"ce_refined", ce_refined_means}});
    write_file(dir / ("sweep_" + args.param + ".svg"), svg);
    write_manifest(dir, command, args.config_path);
    std::cout << "wrote " << (dir / "summary.csv").string() << "\n";
    return 0;
}

// --- metrics ----------------------------------------------------------

struct MetricsArgs {
    std::string pred_path;
    std::string truth_path;
    std::optional<std::string> out_path;
};

int run_metrics(const MetricsArgs& args) {
    const plr::Partition pred = load_partition(args.pred_path);
    const plr::Partition truth = load_partition(args.truth_path);
    const plr::ClusterMetrics m = plr::compare_partitions(pred, truth);
    std::ostringstream out;
    out << plr::format_sig(m.ari, 9) << ',' << plr::format_sig(m.nmi, 9) << ','
        << plr::format_sig(m.pair_f1, 9) << '\n';
    emit(args.out_path, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudo-label refinery: consensus-based label refinement over "
                 "clustering generations"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "run a multi-generation experiment");
    sim->add_option("--config", sim_args.config_path, "SimConfig JSON file")->required();
    sim->add_option("--out", sim_args.out_dir, "output directory (default .)");
    sim->add_option("--seed", sim_args.seed_override, "override the config seed");
    sim->add_flag("--dry-run", sim_args.dry_run, "validate the config and exit");
    sim->add_option("--threads", sim_args.threads, "worker threads")
        ->check(CLI::Range(1, 256));

    ConsensusArgs cons_args;
    CLI::App* cons =
        app.add_subcommand("consensus", "overlap matrix between two partition files");
    cons->add_option("prev", cons_args.prev_path, "previous-generation partition file")
        ->required();
    cons->add_option("curr", cons_args.curr_path, "current-generation partition file")
        ->required();
    cons->add_flag("--normalize", cons_args.normalize, "row-normalize the matrix");
    cons->add_option("--out", cons_args.out_path, "output file (default stdout)");

    RefineArgs refine_args;
    CLI::App* refine = app.add_subcommand("refine", "refine labels across two partitions");
    refine->add_option("prev", refine_args.prev_path, "previous-generation partition file")
        ->required();
    refine->add_option("curr", refine_args.curr_path, "current-generation partition file")
        ->required();
    refine->add_option("--mode", refine_args.mode, "hard | soft | blend (default hard)");
    refine->add_option("--alpha", refine_args.alpha, "ensembling momentum (default 0.9)");
    refine->add_option("--tau", refine_args.tau, "confidence temperature (default 30)");
    refine->add_option("--beta", refine_args.beta, "blend weight of one-hots (default 0)");
    refine->add_option("--prototypes", refine_args.prototypes_path,
                       "prototype bank file (soft/blend)");
    refine->add_option("--embeddings", refine_args.embeddings_path,
                       "embedding set file (soft/blend)");
    refine->add_option("--out", refine_args.out_path, "output file (default stdout)");

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep of simulations");
    sweep->add_option("--config", sweep_args.config_path, "SimConfig JSON file")->required();
    sweep->add_option("--param", sweep_args.param, "alpha | tau | beta | flip_rate")
        ->required()
        ->check(CLI::IsMember({"alpha", "tau", "beta", "flip_rate"}));
    sweep->add_option("--values", sweep_args.values_csv, "comma-separated sweep values")
        ->required();
    sweep->add_option("--seeds", sweep_args.seeds,
                      "seeds per value for averaging (default 20)");
    sweep->add_option("--out", sweep_args.out_dir, "output directory (default .)");
    sweep->add_option("--seed", sweep_args.seed_override, "override the config base seed");
    sweep->add_flag("--dry-run", sweep_args.dry_run, "validate config and values, exit");
    sweep->add_option("--threads", sweep_args.threads, "worker threads")
        ->check(CLI::Range(1, 256));

    MetricsArgs metrics_args;
    CLI::App* metrics =
        app.add_subcommand("metrics", "ARI,NMI,F1 of a predicted partition vs truth");
    metrics->add_option("pred", metrics_args.pred_path, "predicted partition file")
        ->required();
    metrics->add_option("truth", metrics_args.truth_path, "ground-truth partition file")
        ->required();
    metrics->add_option("--out", metrics_args.out_path, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = join_args(argc, argv);
    try {
        if (sim->parsed()) return run_simulate(sim_args, command);
        if (cons->parsed()) return run_consensus(cons_args);
        if (refine->parsed()) return run_refine(refine_args);
        if (sweep->parsed()) return run_sweep(sweep_args, command);
        if (metrics->parsed()) return run_metrics(metrics_args);
    } catch (const plr::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const plr::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const plr::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // no subcommand parsed (require_subcommand should prevent this)
}
