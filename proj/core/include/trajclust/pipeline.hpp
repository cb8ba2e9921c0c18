#pragma once

// End-to-end orchestration: load -> distances -> Ward tree -> k scan ->
// cut -> characterization, with file artifacts for every stage.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "trajclust/cohort.hpp"
#include "trajclust/distance.hpp"
#include "trajclust/hierarchy.hpp"
#include "trajclust/selection.hpp"

namespace trajclust {

std::string_view version() noexcept;

struct RunConfig {
    std::filesystem::path events;
    std::filesystem::path patients;
    std::filesystem::path catalog;
    std::filesystem::path out_dir = ".";
    WardVariant ward = WardVariant::ward_d2;
    std::size_t k_min = kDefaultMinClusters;
    std::size_t k_max = kDefaultMaxClusters;
    SelectionRule rule;
    unsigned workers = 1;
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> matrix_in;
    std::optional<std::filesystem::path> matrix_out;
    std::optional<std::filesystem::path> tree_in; // stage-wise runs; default out_dir/tree.csv
    std::size_t mc_replicates = 0;                // 0: asymptotic chi-square tests
};

// Checks what can be checked without the data (worker count, k ordering).
// The k_max <= n-1 bound is checked once the cohort is loaded.
void validate_config(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

Cohort load_inputs(const RunConfig& config);

// Reads matrix_in when set (checking it covers the cohort), otherwise
// computes the matrix. Writes matrix_out when set.
CondensedDistanceMatrix obtain_matrix(const RunConfig& config, const Cohort& cohort,
                                      DistanceDiagnostics* diagnostics = nullptr);

struct RunSummary {
    std::size_t n = 0;
    std::size_t chosen_k = 0;
    SelectionCurve curve;
    Partition assignments; // ordered, labels 0..k-1 for clusters 1..k
};

// Stage-wise entry points. Each writes its artifacts into out_dir.
void run_distance_stage(const RunConfig& config);                 // matrix cache, distance.json
MergeTree run_cluster_stage(const RunConfig& config);             // tree.csv, tree.json
SelectionCurve run_select_stage(const RunConfig& config);         // curve.csv, selection.json
Partition run_report_stage(const RunConfig& config, std::optional<std::size_t> k = std::nullopt);

// Full run: assignments.csv, curve.csv, selection.json, tree.csv, tree.json,
// summary.csv, heatmap.csv, density.csv and run.json. Everything except the
// "timings" block of run.json is a pure function of inputs and config.
RunSummary run_pipeline(const RunConfig& config);

} // namespace trajclust
