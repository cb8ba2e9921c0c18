// trajclust: cluster censored condition histories from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trajclust/error.hpp"
#include "trajclust/pipeline.hpp"
#include "trajclust/synth.hpp"

namespace fs = std::filesystem;
using namespace trajclust;

namespace {

struct Flags {
    std::string events, patients, catalog, out_dir = ".";
    std::string ward = "d2";
    std::size_t k_min = kDefaultMinClusters;
    std::size_t k_max = kDefaultMaxClusters;
    std::string k;
    std::string policy = "first-local-max";
    unsigned workers = 1;
    std::uint64_t seed = 1;
    std::string matrix_in, matrix_out, tree_in;
    std::size_t mc_replicates = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--events", f.events, "events.csv (patient_id,condition_id,onset_age)");
    cmd->add_option("--patients", f.patients, "patients.csv");
    cmd->add_option("--catalog", f.catalog, "catalog.csv");
    cmd->add_option("--out-dir", f.out_dir, "directory for artifacts")->capture_default_str();
    cmd->add_option("--ward", f.ward, "Ward variant")
        ->check(CLI::IsMember({"d", "d2"}))
        ->capture_default_str();
    cmd->add_option("--k-min", f.k_min, "smallest k scanned")->capture_default_str();
    cmd->add_option("--k-max", f.k_max, "largest k scanned")->capture_default_str();
    cmd->add_option("--k", f.k, "fixed=<k> overrides the selection policy");
    cmd->add_option("--policy", f.policy, "k selection policy")
        ->check(CLI::IsMember({"first-local-max", "global-max"}))
        ->capture_default_str();
    cmd->add_option("--workers", f.workers, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "run seed")->capture_default_str();
    cmd->add_option("--matrix-in", f.matrix_in, "read the distance matrix cache");
    cmd->add_option("--matrix-out", f.matrix_out, "write the distance matrix cache");
    cmd->add_option("--tree", f.tree_in, "tree.csv from a previous cluster stage");
    cmd->add_option("--mc-replicates", f.mc_replicates,
                    "Monte Carlo replicates for categorical tests (0 = chi-square)")
        ->capture_default_str();
}

RunConfig to_config(const Flags& f) {
    RunConfig c;
    c.events = f.events;
    c.patients = f.patients;
    c.catalog = f.catalog;
    c.out_dir = f.out_dir;
    c.ward = parse_ward_variant(f.ward);
    c.k_min = f.k_min;
    c.k_max = f.k_max;
    if (!f.k.empty()) {
        c.rule = parse_selection_rule(f.k.find('=') == std::string::npos ? "fixed=" + f.k : f.k);
        if (c.rule.policy != SelectionPolicy::fixed) {
            throw Error(ErrorCategory::config, "--k expects fixed=<k>");
        }
    } else {
        c.rule = parse_selection_rule(f.policy);
    }
    c.workers = f.workers;
    c.seed = f.seed;
    if (!f.matrix_in.empty()) c.matrix_in = f.matrix_in;
    if (!f.matrix_out.empty()) c.matrix_out = f.matrix_out;
    if (!f.tree_in.empty()) c.tree_in = f.tree_in;
    c.mc_replicates = f.mc_replicates;
    return c;
}

std::string one_line(std::string s) {
    for (auto& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster right-censored condition histories (Jaccard + Ward)"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    Flags flags;
    auto* distance = app.add_subcommand("distance", "compute and cache the distance matrix");
    auto* cluster = app.add_subcommand("cluster", "build the Ward merge tree");
    auto* select = app.add_subcommand("select-k", "scan point-biserial over k");
    auto* report = app.add_subcommand("report", "assignments and characterization for one cut");
    auto* all = app.add_subcommand("all", "run every stage");
    for (auto* cmd : {distance, cluster, select, report, all}) add_common(cmd, flags);

    std::string spec_path, synth_catalog, synth_out = ".";
    std::size_t synth_n = 1000;
    std::uint64_t synth_seed = 1;
    auto* synth = app.add_subcommand("synth", "generate a planted-cluster cohort");
    synth->add_option("--spec", spec_path, "archetype spec (JSON)")->required();
    synth->add_option("--catalog", synth_catalog, "catalog.csv")->required();
    synth->add_option("-n,--n", synth_n, "patients")->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--out-dir", synth_out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) {
            const auto catalog = read_catalog(fs::path(synth_catalog));
            const auto spec = read_archetype_spec(spec_path);
            const auto labeled = generate(spec, catalog, synth_n, synth_seed);
            fs::create_directories(synth_out);
            write_cohort(synth_out, labeled.cohort);
            std::ofstream truth(fs::path(synth_out) / "truth.csv", std::ios::binary);
            if (!truth) throw Error(ErrorCategory::io, "cannot write truth.csv");
            write_truth_csv(truth, labeled, spec);
            return EXIT_SUCCESS;
        }
        const RunConfig config = to_config(flags);
        if (distance->parsed()) {
            run_distance_stage(config);
        } else if (cluster->parsed()) {
            run_cluster_stage(config);
        } else if (select->parsed()) {
            const auto curve = run_select_stage(config);
            std::cout << "chosen_k=" << curve.chosen_k << '\n';
        } else if (report->parsed()) {
            run_report_stage(config);
        } else if (all->parsed()) {
            const auto result = run_pipeline(config);
            std::cout << "chosen_k=" << result.chosen_k << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error category=" << to_string(e.category()) << " message=\""
                  << one_line(e.what()) << "\"\n";
        return EXIT_FAILURE;
    } catch (const std::exception& e) {
        std::cerr << "error category=internal message=\"" << one_line(e.what()) << "\"\n";
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
