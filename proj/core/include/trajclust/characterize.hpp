#pragma once

// Cluster characterization: descriptive tables with association tests,
// per-cluster log-odds from logistic regressions, and onset-age densities.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajclust/cohort.hpp"
#include "trajclust/hierarchy.hpp"
#include "trajclust/stats.hpp"

namespace trajclust {

// Relabels clusters by decreasing size (ties: smaller original label first).
Partition order_clusters(const Partition& partition);

inline constexpr std::size_t kTotalColumn = 0; // cluster id of the "all patients" column

struct SummaryRow {
    std::string variable;
    std::string level;
    std::size_t cluster = kTotalColumn; // 1..k, or kTotalColumn
    std::size_t count = 0;
    std::optional<double> percent; // of the cluster, categorical rows only
    std::optional<double> median;  // numeric rows only
    std::optional<double> q1;
    std::optional<double> q3;
    std::string test; // chi_square, monte_carlo, kruskal_wallis or none
    std::optional<double> statistic;
    std::optional<double> p_value;
};

struct ClusterSummary {
    std::size_t k = 0;
    std::vector<std::size_t> cluster_sizes; // index c-1 for cluster c
    std::vector<SummaryRow> rows;
};

struct SummaryOptions {
    AssociationMode mode = AssociationMode::chi_square;
    std::size_t replicates = 10000;
    std::uint64_t seed = 1; // run seed; each test derives its own stream
    unsigned workers = 1;
};

// `ordered` must come from order_clusters. Variables: age at index record,
// age at end of follow-up, number of LTCs besides the index condition
// (Kruskal-Wallis); gender, ethnicity, IMD band, end status, risk factors
// and every non-index LTC (association test).
ClusterSummary summarize_clusters(const Cohort& cohort, const Partition& ordered,
                                  const SummaryOptions& options = {});

enum class HeatmapPanel { sociodemographic_risk, ltc };
std::string_view to_string(HeatmapPanel p) noexcept;

enum class CellStatus {
    estimated,  // coefficient from a converged fit
    separation, // a zero cell in the variable x membership table; excluded from the fit
    constant,   // no variation in the cohort; excluded from the fit
    fit_failed, // the cluster's regression failed; see LogOddsRow::error
};
std::string_view to_string(CellStatus s) noexcept;

struct LogOddsCell {
    std::string variable;
    CellStatus status = CellStatus::estimated;
    std::optional<double> log_odds;
    std::optional<double> standard_error;
    std::optional<double> p_value;
    bool displayed = false; // exactly p < 0.05
};

struct LogOddsRow {
    std::size_t cluster = 0; // 1..k
    std::vector<LogOddsCell> cells;
    std::string error; // non-empty when the fit failed
};

struct LogOddsTable {
    HeatmapPanel panel = HeatmapPanel::sociodemographic_risk;
    std::vector<LogOddsRow> rows;
};

inline constexpr double kDisplayThreshold = 0.05;

struct HeatmapOptions {
    bool standardize_age = false; // age enters in years unless set
    unsigned workers = 1;
};

// One multivariate logistic regression per cluster of membership on the
// panel's variables. Upper panel: female, age at index record, ethnicity
// dummies (reference White), IMD dummies (reference less deprived) and the
// six risk factors. Lower panel: indicators of the non-index LTCs.
LogOddsTable log_odds_heatmap(const Cohort& cohort, const Partition& ordered, HeatmapPanel panel,
                              const HeatmapOptions& options = {});

struct ConditionDensity {
    std::string condition;
    std::optional<std::size_t> cluster; // nullopt for the whole cohort
    DensityCurve curve;                 // scaled so the maximum is 1
};

// Scaled Gaussian KDE of onset ages for one condition; per cluster when a
// partition is given (clusters without the condition are skipped).
std::vector<ConditionDensity> age_density(const Cohort& cohort, std::size_t condition,
                                          const Partition* per_cluster = nullptr);

void write_summary_csv(std::ostream& out, const ClusterSummary& summary);
void write_heatmap_csv(std::ostream& out, const std::vector<LogOddsTable>& tables);
void write_density_csv(std::ostream& out, const std::vector<ConditionDensity>& densities);

} // namespace trajclust
