#include "trajclust/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <ostream>

#include "csv.hpp"
#include "trajclust/characterize.hpp"
#include "trajclust/error.hpp"

#ifndef TRAJCLUST_VERSION
#define TRAJCLUST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace trajclust {

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw Error(ErrorCategory::io, "write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::config, path.string() + ": " + e.what());
    }
}

void prepare_out_dir(const RunConfig& config) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
        throw Error(ErrorCategory::io,
                    "cannot create '" + config.out_dir.string() + "': " + ec.message());
    }
}

void check_k_range(const RunConfig& config, std::size_t n) {
    if (n < 3 || config.k_max > n - 1) {
        throw Error(ErrorCategory::config, "k_max=" + std::to_string(config.k_max) +
                                               " exceeds n-1 for a cohort of " +
                                               std::to_string(n) + " patients");
    }
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

nlohmann::json tree_metadata(const MergeTree& tree, WardVariant variant) {
    return {{"n", tree.n},
            {"ward_variant", to_string(variant)},
            {"merges", tree.merges.size()},
            {"monotonicity_violations", tree.monotonicity_violations}};
}

void write_assignments(const fs::path& path, const Cohort& cohort, const Partition& ordered) {
    write_file(path, [&](std::ostream& out) {
        csv::write_row(out, {"patient_id", "cluster"});
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            csv::write_row(out,
                           {cohort.patients[i].patient_id, std::to_string(ordered.labels[i] + 1)});
        }
    });
}

// assignments, summary, heatmap and density for one cut
Partition write_report(const RunConfig& config, const Cohort& cohort, const MergeTree& tree,
                       std::size_t k, Stopwatch& clock, nlohmann::json& timings) {
    if (tree.n != cohort.size()) {
        throw Error(ErrorCategory::validation,
                    "tree covers " + std::to_string(tree.n) + " leaves but the cohort has " +
                        std::to_string(cohort.size()) + " patients");
    }
    const Partition ordered = order_clusters(cut(tree, k));
    write_assignments(config.out_dir / "assignments.csv", cohort, ordered);

    SummaryOptions summary_options;
    summary_options.mode =
        config.mc_replicates > 0 ? AssociationMode::monte_carlo : AssociationMode::chi_square;
    summary_options.replicates = config.mc_replicates;
    summary_options.seed = config.seed;
    summary_options.workers = config.workers;
    const auto summary = summarize_clusters(cohort, ordered, summary_options);
    write_file(config.out_dir / "summary.csv",
               [&](std::ostream& out) { write_summary_csv(out, summary); });
    timings["summary"] = clock.lap();

    HeatmapOptions heatmap_options;
    heatmap_options.workers = config.workers;
    const std::vector<LogOddsTable> tables = {
        log_odds_heatmap(cohort, ordered, HeatmapPanel::sociodemographic_risk, heatmap_options),
        log_odds_heatmap(cohort, ordered, HeatmapPanel::ltc, heatmap_options)};
    write_file(config.out_dir / "heatmap.csv",
               [&](std::ostream& out) { write_heatmap_csv(out, tables); });
    timings["heatmap"] = clock.lap();

    std::vector<ConditionDensity> densities;
    for (std::size_t c = 0; c < cohort.catalog.size(); ++c) {
        const bool any = std::any_of(cohort.patients.begin(), cohort.patients.end(),
                                     [&](const PatientRecord& p) { return p.onset_of(c); });
        if (!any) continue;
        for (auto& d : age_density(cohort, c)) densities.push_back(std::move(d));
        for (auto& d : age_density(cohort, c, &ordered)) densities.push_back(std::move(d));
    }
    write_file(config.out_dir / "density.csv",
               [&](std::ostream& out) { write_density_csv(out, densities); });
    timings["density"] = clock.lap();
    return ordered;
}

MergeTree load_tree(const RunConfig& config) {
    return read_tree_csv(config.tree_in ? *config.tree_in : config.out_dir / "tree.csv");
}

} // namespace

std::string_view version() noexcept { return TRAJCLUST_VERSION; }

void validate_config(const RunConfig& config) {
    if (config.workers < 1) throw Error(ErrorCategory::config, "workers must be >= 1");
    if (config.k_min < 2 || config.k_min > config.k_max) {
        throw Error(ErrorCategory::config, "k range [" + std::to_string(config.k_min) + ", " +
                                               std::to_string(config.k_max) +
                                               "] must satisfy 2 <= k_min <= k_max");
    }
    if (config.rule.policy == SelectionPolicy::fixed &&
        (config.rule.fixed_k < config.k_min || config.rule.fixed_k > config.k_max)) {
        throw Error(ErrorCategory::config, "fixed k=" + std::to_string(config.rule.fixed_k) +
                                               " outside [k_min, k_max]");
    }
}

nlohmann::json to_json(const RunConfig& config) {
    nlohmann::json j;
    j["events"] = config.events.generic_string();
    j["patients"] = config.patients.generic_string();
    j["catalog"] = config.catalog.generic_string();
    j["out_dir"] = config.out_dir.generic_string();
    j["ward"] = to_string(config.ward);
    j["k_min"] = config.k_min;
    j["k_max"] = config.k_max;
    j["policy"] = to_string(config.rule.policy);
    if (config.rule.policy == SelectionPolicy::fixed) j["fixed_k"] = config.rule.fixed_k;
    j["workers"] = config.workers;
    j["seed"] = config.seed;
    j["matrix_in"] = config.matrix_in ? nlohmann::json(config.matrix_in->generic_string())
                                      : nlohmann::json(nullptr);
    j["matrix_out"] = config.matrix_out ? nlohmann::json(config.matrix_out->generic_string())
                                        : nlohmann::json(nullptr);
    j["mc_replicates"] = config.mc_replicates;
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        RunConfig c;
        c.events = j.at("events").get<std::string>();
        c.patients = j.at("patients").get<std::string>();
        c.catalog = j.at("catalog").get<std::string>();
        c.out_dir = j.at("out_dir").get<std::string>();
        c.ward = parse_ward_variant(j.at("ward").get<std::string>());
        c.k_min = j.at("k_min").get<std::size_t>();
        c.k_max = j.at("k_max").get<std::size_t>();
        const auto policy = j.at("policy").get<std::string>();
        if (policy == "fixed") {
            c.rule = {SelectionPolicy::fixed, j.at("fixed_k").get<std::size_t>()};
        } else {
            c.rule = parse_selection_rule(policy == "global_max_among_local" ? "global-max"
                                                                             : policy);
        }
        c.workers = j.at("workers").get<unsigned>();
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("matrix_in") && !j["matrix_in"].is_null()) {
            c.matrix_in = j["matrix_in"].get<std::string>();
        }
        if (j.contains("matrix_out") && !j["matrix_out"].is_null()) {
            c.matrix_out = j["matrix_out"].get<std::string>();
        }
        c.mc_replicates = j.value("mc_replicates", std::size_t{0});
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::config, std::string("run config: ") + e.what());
    }
}

Cohort load_inputs(const RunConfig& config) {
    if (config.events.empty() || config.patients.empty() || config.catalog.empty()) {
        throw Error(ErrorCategory::config, "--events, --patients and --catalog are required");
    }
    return load_cohort(config.events, config.patients, config.catalog);
}

CondensedDistanceMatrix obtain_matrix(const RunConfig& config, const Cohort& cohort,
                                      DistanceDiagnostics* diagnostics) {
    CondensedDistanceMatrix matrix;
    if (config.matrix_in) {
        matrix = read_matrix_cache(*config.matrix_in);
        if (matrix.size() != cohort.size()) {
            throw Error(ErrorCategory::validation,
                        "matrix cache covers " + std::to_string(matrix.size()) +
                            " patients but the cohort has " + std::to_string(cohort.size()));
        }
    } else {
        matrix = condensed_matrix(cohort, config.workers, diagnostics);
    }
    if (config.matrix_out) write_matrix_cache(*config.matrix_out, matrix);
    return matrix;
}

void run_distance_stage(const RunConfig& config) {
    validate_config(config);
    prepare_out_dir(config);
    RunConfig c = config;
    c.matrix_in.reset();
    if (!c.matrix_out) c.matrix_out = c.out_dir / "matrix.tjd";
    const Cohort cohort = load_inputs(c);
    DistanceDiagnostics diagnostics;
    const auto matrix = obtain_matrix(c, cohort, &diagnostics);
    write_json(c.out_dir / "distance.json",
               {{"n", matrix.size()},
                {"pairs", matrix.values().size()},
                {"matrix", c.matrix_out->generic_string()},
                {"empty_union_pairs", diagnostics.empty_union_pairs}});
}

MergeTree run_cluster_stage(const RunConfig& config) {
    validate_config(config);
    prepare_out_dir(config);
    CondensedDistanceMatrix matrix;
    if (config.matrix_in) {
        matrix = read_matrix_cache(*config.matrix_in);
    } else {
        matrix = obtain_matrix(config, load_inputs(config));
    }
    const MergeTree tree = ward_linkage(std::move(matrix), config.ward);
    write_tree_csv(config.out_dir / "tree.csv", tree);
    write_json(config.out_dir / "tree.json", tree_metadata(tree, config.ward));
    return tree;
}

SelectionCurve run_select_stage(const RunConfig& config) {
    validate_config(config);
    prepare_out_dir(config);
    CondensedDistanceMatrix matrix;
    if (config.matrix_in) {
        matrix = read_matrix_cache(*config.matrix_in);
    } else {
        matrix = obtain_matrix(config, load_inputs(config));
    }
    const MergeTree tree = load_tree(config);
    check_k_range(config, matrix.size());
    const auto curve =
        scan(tree, matrix, config.k_min, config.k_max, config.workers, config.rule);
    write_curve_csv(config.out_dir / "curve.csv", curve);
    write_json(config.out_dir / "selection.json", curve_metadata(curve, config.ward));
    return curve;
}

Partition run_report_stage(const RunConfig& config, std::optional<std::size_t> k) {
    validate_config(config);
    prepare_out_dir(config);
    if (!k && config.rule.policy == SelectionPolicy::fixed) k = config.rule.fixed_k;
    if (!k) {
        const auto selection = read_json(config.out_dir / "selection.json");
        k = selection.at("chosen_k").get<std::size_t>();
    }
    const Cohort cohort = load_inputs(config);
    const MergeTree tree = load_tree(config);
    Stopwatch clock;
    nlohmann::json timings;
    return write_report(config, cohort, tree, *k, clock, timings);
}

RunSummary run_pipeline(const RunConfig& config) {
    validate_config(config);
    prepare_out_dir(config);
    Stopwatch clock;
    nlohmann::json timings;

    const Cohort cohort = load_inputs(config);
    check_k_range(config, cohort.size());
    timings["load"] = clock.lap();

    DistanceDiagnostics diagnostics;
    CondensedDistanceMatrix matrix = obtain_matrix(config, cohort, &diagnostics);
    timings["distance"] = clock.lap();

    // linkage consumes its own copy; the scan needs the distances afterwards
    const MergeTree tree = ward_linkage(matrix, config.ward);
    write_tree_csv(config.out_dir / "tree.csv", tree);
    write_json(config.out_dir / "tree.json", tree_metadata(tree, config.ward));
    timings["linkage"] = clock.lap();

    RunSummary result;
    result.n = cohort.size();
    result.curve = scan(tree, matrix, config.k_min, config.k_max, config.workers, config.rule);
    result.chosen_k = result.curve.chosen_k;
    write_curve_csv(config.out_dir / "curve.csv", result.curve);
    write_json(config.out_dir / "selection.json", curve_metadata(result.curve, config.ward));
    timings["selection"] = clock.lap();
    matrix = CondensedDistanceMatrix();

    result.assignments = write_report(config, cohort, tree, result.chosen_k, clock, timings);

    nlohmann::json run;
    run["config"] = to_json(config);
    run["version"] = version();
    run["seed"] = config.seed;
    run["ward_variant"] = to_string(config.ward);
    run["n_patients"] = cohort.size();
    run["n_conditions"] = cohort.catalog.size();
    run["chosen_k"] = result.chosen_k;
    run["selection"] = curve_metadata(result.curve, config.ward);
    run["cluster_sizes"] = result.assignments.cluster_sizes();
    run["diagnostics"] = {{"empty_union_pairs", diagnostics.empty_union_pairs},
                          {"monotonicity_violations", tree.monotonicity_violations},
                          {"matrix_from_cache", config.matrix_in.has_value()}};
    run["notes"] = {
        config.mc_replicates > 0
            ? "categorical associations: Monte Carlo permutation p-values (" +
                  std::to_string(config.mc_replicates) + " replicates) in place of Fisher's exact"
            : std::string("categorical associations: asymptotic Pearson chi-square"),
        "p-values are not adjusted for multiple testing",
        "log-odds cells are displayed only when p < 0.05"};
    run["timings"] = timings;
    write_json(config.out_dir / "run.json", run);
    return result;
}

} // namespace trajclust
