#pragma once

// Choosing the number of clusters with the point-biserial correlation.
//
// The coefficient is the Pearson correlation between the condensed distance
// vector and a twin indicator vector that is 0 for pairs in the same cluster
// and 1 otherwise. Higher is better: within-cluster distances are smaller.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajclust/distance.hpp"
#include "trajclust/hierarchy.hpp"

namespace trajclust {

inline constexpr std::size_t kDefaultMinClusters = 2;
inline constexpr std::size_t kDefaultMaxClusters = 20;

// Throws `undefined` when either vector has zero variance.
double point_biserial(const CondensedDistanceMatrix& matrix, const Partition& partition);

enum class SelectionPolicy { first_local_max, global_max_among_local, fixed };

struct SelectionRule {
    SelectionPolicy policy = SelectionPolicy::first_local_max;
    std::size_t fixed_k = 0; // used by SelectionPolicy::fixed
};

std::string_view to_string(SelectionPolicy p) noexcept;
// "first-local-max", "global-max", or "fixed=<k>" (underscores accepted).
SelectionRule parse_selection_rule(std::string_view text);

struct SelectionCurve {
    std::vector<std::size_t> k_values;
    std::vector<std::optional<double>> coefficients; // nullopt where undefined
    std::vector<std::size_t> local_maxima;           // strict interior maxima
    std::size_t chosen_k = 0;
    SelectionRule rule;
    bool chosen_is_local_max = false;
};

// Evaluates cut + point_biserial for every k in [k_min, k_max]; the per-k
// evaluations run on `workers` threads and are gathered in k order. The
// curve's chosen_k follows `rule` (first_local_max by default).
SelectionCurve scan(const MergeTree& tree, const CondensedDistanceMatrix& matrix,
                    std::size_t k_min = kDefaultMinClusters,
                    std::size_t k_max = kDefaultMaxClusters, unsigned workers = 1,
                    SelectionRule rule = {});

// Smallest-k local maximum, highest local maximum, or the fixed k. Without
// any local maximum, falls back to the argmax (smallest k on ties).
std::size_t select_k(const SelectionCurve& curve, SelectionRule rule);

// Recomputes local maxima from the coefficients; exposed for curves read back from disk.
std::vector<std::size_t> strict_local_maxima(const SelectionCurve& curve);

void write_curve_csv(std::ostream& out, const SelectionCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const SelectionCurve& curve);
SelectionCurve read_curve_csv(std::istream& in);

nlohmann::json curve_metadata(const SelectionCurve& curve, WardVariant variant);

} // namespace trajclust
