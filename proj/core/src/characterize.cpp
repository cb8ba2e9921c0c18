#include "trajclust/characterize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "trajclust/error.hpp"
#include "trajclust/parallel.hpp"
#include "trajclust/rng.hpp"

namespace trajclust {

Partition order_clusters(const Partition& partition) {
    validate_partition(partition);
    const auto sizes = partition.cluster_sizes();
    std::vector<std::size_t> order(partition.k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    std::vector<std::size_t> relabel(partition.k);
    for (std::size_t rank = 0; rank < order.size(); ++rank) relabel[order[rank]] = rank;
    Partition out;
    out.k = partition.k;
    out.labels.reserve(partition.size());
    for (auto l : partition.labels) out.labels.push_back(relabel[l]);
    return out;
}

namespace {

double index_onset(const PatientRecord& p, const LtcCatalog& catalog) {
    const auto onset = p.onset_of(catalog.index_condition());
    if (!onset) {
        throw Error(ErrorCategory::validation,
                    "patient '" + p.patient_id + "' lacks the index condition");
    }
    return *onset;
}

std::size_t ltc_count(const PatientRecord& p, const LtcCatalog& catalog) {
    std::size_t c = 0;
    for (const auto& e : p.events) c += e.condition != catalog.index_condition() ? 1 : 0;
    return c;
}

struct NumericVariable {
    std::string name;
    std::vector<double> values;
};

struct CategoricalVariable {
    std::string name;
    std::vector<std::string> level_names;
    std::vector<std::size_t> levels;
};

std::vector<SummaryRow> numeric_rows(const NumericVariable& var, const Partition& ordered) {
    const auto grouped = numeric_summary(var.values, ordered.labels, ordered.k);
    const auto test = kruskal_wallis(var.values, ordered.labels, ordered.k);
    std::vector<SummaryRow> rows;
    const auto emit = [&](std::size_t cluster, const NumericSummary& s) {
        SummaryRow r;
        r.variable = var.name;
        r.level = "median_iqr";
        r.cluster = cluster;
        r.count = s.count;
        r.median = s.median;
        r.q1 = s.q1;
        r.q3 = s.q3;
        r.test = "kruskal_wallis";
        r.statistic = test.statistic;
        r.p_value = test.p_value;
        rows.push_back(std::move(r));
    };
    for (std::size_t c = 0; c < ordered.k; ++c) emit(c + 1, grouped.groups[c]);
    emit(kTotalColumn, grouped.overall);
    return rows;
}

std::vector<SummaryRow> categorical_rows(const CategoricalVariable& var, const Partition& ordered,
                                         const std::vector<std::size_t>& sizes,
                                         const SummaryOptions& options) {
    const std::size_t levels = var.level_names.size();
    std::vector<std::size_t> counts(levels * (ordered.k + 1), 0);
    for (std::size_t i = 0; i < var.levels.size(); ++i) {
        ++counts[var.levels[i] * (ordered.k + 1) + ordered.labels[i] + 1];
        ++counts[var.levels[i] * (ordered.k + 1)];
    }

    // the test runs on levels present in the cohort
    std::vector<std::size_t> remap(levels, levels);
    std::size_t present = 0;
    for (std::size_t l = 0; l < levels; ++l) {
        if (counts[l * (ordered.k + 1)] > 0) remap[l] = present++;
    }
    std::optional<TestResult> test;
    if (present >= 2) {
        std::vector<std::size_t> compact(var.levels.size());
        for (std::size_t i = 0; i < var.levels.size(); ++i) compact[i] = remap[var.levels[i]];
        AssociationOptions ao;
        ao.mode = options.mode;
        ao.replicates = options.replicates;
        ao.stream_seed = derive_stream_seed(options.seed, "summary/" + var.name);
        test = association_test(compact, present, ordered.labels, ordered.k, ao);
    }

    std::vector<SummaryRow> rows;
    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t col = 1; col <= ordered.k + 1; ++col) {
            const std::size_t cluster = col == ordered.k + 1 ? kTotalColumn : col;
            const std::size_t count = counts[l * (ordered.k + 1) + (cluster == kTotalColumn ? 0 : col)];
            const std::size_t denominator =
                cluster == kTotalColumn ? var.levels.size() : sizes[cluster - 1];
            SummaryRow r;
            r.variable = var.name;
            r.level = var.level_names[l];
            r.cluster = cluster;
            r.count = count;
            r.percent = 100.0 * static_cast<double>(count) / static_cast<double>(denominator);
            r.test = test ? std::string(to_string(options.mode)) : "none";
            if (test) {
                r.statistic = test->statistic;
                r.p_value = test->p_value;
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

} // namespace

ClusterSummary summarize_clusters(const Cohort& cohort, const Partition& ordered,
                                  const SummaryOptions& options) {
    validate_partition(ordered);
    if (ordered.size() != cohort.size()) {
        throw Error(ErrorCategory::invalid_argument, "partition does not match cohort size");
    }
    if (ordered.k < 2) {
        throw Error(ErrorCategory::invalid_argument, "cluster summary needs at least 2 clusters");
    }
    const auto& catalog = cohort.catalog;
    const std::size_t n = cohort.size();

    std::vector<NumericVariable> numeric(3);
    numeric[0].name = "age_at_index";
    numeric[1].name = "age_at_end_of_follow_up";
    numeric[2].name = "ltc_count";
    for (const auto& p : cohort.patients) {
        numeric[0].values.push_back(index_onset(p, catalog));
        numeric[1].values.push_back(p.follow_up_end);
        numeric[2].values.push_back(static_cast<double>(ltc_count(p, catalog)));
    }

    std::vector<CategoricalVariable> categorical;
    const auto add_categorical = [&](std::string name, std::vector<std::string> level_names,
                                     const std::function<std::size_t(const PatientRecord&)>& f) {
        CategoricalVariable v{std::move(name), std::move(level_names), {}};
        v.levels.reserve(n);
        for (const auto& p : cohort.patients) v.levels.push_back(f(p));
        categorical.push_back(std::move(v));
    };
    add_categorical("gender", {"female", "male"},
                    [](const PatientRecord& p) { return static_cast<std::size_t>(p.gender); });
    {
        std::vector<std::string> names;
        for (std::size_t e = 0; e < kEthnicityCount; ++e) {
            names.emplace_back(to_string(static_cast<Ethnicity>(e)));
        }
        add_categorical("ethnicity", names, [](const PatientRecord& p) {
            return static_cast<std::size_t>(p.ethnicity);
        });
    }
    add_categorical("imd_band", {"most_deprived", "less_deprived", "missing"},
                    [](const PatientRecord& p) { return static_cast<std::size_t>(p.imd_band); });
    add_categorical("end_status", {"censored", "died"},
                    [](const PatientRecord& p) { return static_cast<std::size_t>(p.end_status); });
    for (std::size_t r = 0; r < kRiskFactorCount; ++r) {
        add_categorical(std::string(to_string(static_cast<RiskFactor>(r))), {"0", "1"},
                        [r](const PatientRecord& p) { return p.risk_factors[r] ? 1u : 0u; });
    }
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        if (c == catalog.index_condition()) continue;
        add_categorical(catalog[c].condition_id, {"0", "1"}, [c](const PatientRecord& p) {
            return p.onset_of(c) ? std::size_t{1} : std::size_t{0};
        });
    }

    ClusterSummary summary;
    summary.k = ordered.k;
    summary.cluster_sizes = ordered.cluster_sizes();
    const std::size_t jobs = numeric.size() + categorical.size();
    std::vector<std::vector<SummaryRow>> blocks(jobs);
    parallel_for(jobs, options.workers, [&](std::size_t j) {
        blocks[j] = j < numeric.size()
                        ? numeric_rows(numeric[j], ordered)
                        : categorical_rows(categorical[j - numeric.size()], ordered,
                                           summary.cluster_sizes, options);
    });
    for (auto& b : blocks) {
        summary.rows.insert(summary.rows.end(), std::make_move_iterator(b.begin()),
                            std::make_move_iterator(b.end()));
    }
    return summary;
}

std::string_view to_string(HeatmapPanel p) noexcept {
    return p == HeatmapPanel::ltc ? "ltc" : "sociodemographic_risk";
}

std::string_view to_string(CellStatus s) noexcept {
    switch (s) {
        case CellStatus::estimated: return "estimated";
        case CellStatus::separation: return "separation";
        case CellStatus::constant: return "constant";
        case CellStatus::fit_failed: return "fit_failed";
    }
    return "fit_failed";
}

namespace {

struct Covariate {
    std::string name;
    std::vector<double> values;
    bool binary = true;
};

std::vector<Covariate> panel_covariates(const Cohort& cohort, HeatmapPanel panel,
                                        bool standardize_age) {
    const auto& catalog = cohort.catalog;
    std::vector<Covariate> out;
    const auto add = [&](std::string name, bool binary, auto&& f) {
        Covariate c{std::move(name), {}, binary};
        c.values.reserve(cohort.size());
        for (const auto& p : cohort.patients) c.values.push_back(f(p));
        out.push_back(std::move(c));
    };
    if (panel == HeatmapPanel::ltc) {
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            if (c == catalog.index_condition()) continue;
            add(catalog[c].condition_id, true,
                [c](const PatientRecord& p) { return p.onset_of(c) ? 1.0 : 0.0; });
        }
        return out;
    }
    add("female", true,
        [](const PatientRecord& p) { return p.gender == Gender::female ? 1.0 : 0.0; });
    add("age_at_index", false,
        [&](const PatientRecord& p) { return index_onset(p, catalog); });
    if (standardize_age) {
        auto& v = out.back().values;
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        if (sd > 0.0) {
            for (double& x : v) x = (x - mean) / sd;
        }
    }
    const std::pair<Ethnicity, const char*> dummies[] = {
        {Ethnicity::asian, "ethnicity_asian"},
        {Ethnicity::black, "ethnicity_black"},
        {Ethnicity::mixed, "ethnicity_mixed"},
        {Ethnicity::other_unknown, "ethnicity_other_unknown"},
    };
    for (const auto& [level, name] : dummies) {
        add(name, true,
            [level](const PatientRecord& p) { return p.ethnicity == level ? 1.0 : 0.0; });
    }
    add("imd_most_deprived", true, [](const PatientRecord& p) {
        return p.imd_band == ImdBand::most_deprived ? 1.0 : 0.0;
    });
    add("imd_missing", true,
        [](const PatientRecord& p) { return p.imd_band == ImdBand::missing ? 1.0 : 0.0; });
    for (std::size_t r = 0; r < kRiskFactorCount; ++r) {
        add(std::string(to_string(static_cast<RiskFactor>(r))), true,
            [r](const PatientRecord& p) { return p.risk_factors[r] ? 1.0 : 0.0; });
    }
    return out;
}

LogOddsRow fit_cluster(const std::vector<Covariate>& covariates, const Partition& ordered,
                       std::size_t cluster) {
    const std::size_t n = ordered.size();
    std::vector<double> response(n);
    for (std::size_t i = 0; i < n; ++i) response[i] = ordered.labels[i] == cluster ? 1.0 : 0.0;

    LogOddsRow row;
    row.cluster = cluster + 1;
    row.cells.resize(covariates.size());
    std::vector<std::size_t> used;
    for (std::size_t v = 0; v < covariates.size(); ++v) {
        auto& cell = row.cells[v];
        cell.variable = covariates[v].name;
        const auto& x = covariates[v].values;
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        if (*lo == *hi) {
            cell.status = CellStatus::constant;
            continue;
        }
        if (covariates[v].binary) {
            std::array<std::size_t, 4> cells{};
            for (std::size_t i = 0; i < n; ++i) {
                ++cells[(x[i] != 0.0 ? 2 : 0) + (response[i] != 0.0 ? 1 : 0)];
            }
            if (std::find(cells.begin(), cells.end(), 0) != cells.end()) {
                cell.status = CellStatus::separation;
                continue;
            }
        }
        used.push_back(v);
    }

    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(used.size() + 1));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        design(r, 0) = 1.0;
        for (std::size_t u = 0; u < used.size(); ++u) {
            design(r, static_cast<Eigen::Index>(u + 1)) = covariates[used[u]].values[i];
        }
    }
    try {
        const auto fit = fit_logistic(design, response);
        for (std::size_t u = 0; u < used.size(); ++u) {
            auto& cell = row.cells[used[u]];
            const auto j = static_cast<Eigen::Index>(u + 1);
            cell.log_odds = fit.coefficients[j];
            cell.standard_error = fit.standard_errors[j];
            cell.p_value = fit.p_values[j];
            cell.displayed = fit.p_values[j] < kDisplayThreshold;
        }
    } catch (const Error& e) {
        row.error = std::string(to_string(e.category())) + ": " + e.what();
        for (auto u : used) row.cells[u].status = CellStatus::fit_failed;
    }
    return row;
}

} // namespace

LogOddsTable log_odds_heatmap(const Cohort& cohort, const Partition& ordered, HeatmapPanel panel,
                              const HeatmapOptions& options) {
    validate_partition(ordered);
    if (ordered.size() != cohort.size()) {
        throw Error(ErrorCategory::invalid_argument, "partition does not match cohort size");
    }
    if (ordered.k < 2) {
        throw Error(ErrorCategory::invalid_argument,
                    "log-odds heatmap needs a partition with at least 2 clusters");
    }
    const auto covariates = panel_covariates(cohort, panel, options.standardize_age);
    LogOddsTable table;
    table.panel = panel;
    table.rows.resize(ordered.k);
    parallel_for(ordered.k, options.workers,
                 [&](std::size_t c) { table.rows[c] = fit_cluster(covariates, ordered, c); });
    return table;
}

std::vector<ConditionDensity> age_density(const Cohort& cohort, std::size_t condition,
                                          const Partition* per_cluster) {
    if (condition >= cohort.catalog.size()) {
        throw Error(ErrorCategory::invalid_argument, "condition outside the catalog");
    }
    const auto& id = cohort.catalog[condition].condition_id;
    std::vector<double> all;
    const std::size_t k = per_cluster ? per_cluster->k : 0;
    std::vector<std::vector<double>> by_cluster(k);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (const auto onset = cohort.patients[i].onset_of(condition)) {
            all.push_back(*onset);
            if (per_cluster) by_cluster[per_cluster->labels.at(i)].push_back(*onset);
        }
    }
    if (all.empty()) {
        throw Error(ErrorCategory::undefined, "no patients with condition '" + id + "'");
    }
    std::vector<ConditionDensity> out;
    if (!per_cluster) {
        out.push_back({id, std::nullopt, scaled_density(all)});
        return out;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (by_cluster[c].empty()) continue;
        out.push_back({id, c + 1, scaled_density(by_cluster[c])});
    }
    return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

} // namespace

void write_summary_csv(std::ostream& out, const ClusterSummary& summary) {
    csv::write_row(out, {"variable", "level", "cluster", "count", "percent", "median", "q1", "q3",
                         "test", "stat", "p"});
    for (const auto& r : summary.rows) {
        csv::write_row(out, {r.variable, r.level,
                             r.cluster == kTotalColumn ? "Total" : std::to_string(r.cluster),
                             std::to_string(r.count),
                             r.percent ? csv::format_fixed(*r.percent, 2) : "NA", opt(r.median),
                             opt(r.q1), opt(r.q3), r.test, opt(r.statistic), opt(r.p_value)});
    }
}

void write_heatmap_csv(std::ostream& out, const std::vector<LogOddsTable>& tables) {
    csv::write_row(out, {"panel", "cluster", "variable", "log_odds", "se", "p", "displayed",
                         "status"});
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            for (const auto& cell : row.cells) {
                csv::write_row(out, {std::string(to_string(t.panel)), std::to_string(row.cluster),
                                     cell.variable, opt(cell.log_odds), opt(cell.standard_error),
                                     opt(cell.p_value), cell.displayed ? "1" : "0",
                                     std::string(to_string(cell.status))});
            }
        }
    }
}

void write_density_csv(std::ostream& out, const std::vector<ConditionDensity>& densities) {
    csv::write_row(out, {"condition", "cluster", "age", "scaled_density"});
    for (const auto& d : densities) {
        const std::string cluster = d.cluster ? std::to_string(*d.cluster) : "";
        for (std::size_t g = 0; g < d.curve.grid.size(); ++g) {
            csv::write_row(out, {d.condition, cluster, csv::format_double(d.curve.grid[g]),
                                 csv::format_double(d.curve.density[g])});
        }
    }
}

} // namespace trajclust
