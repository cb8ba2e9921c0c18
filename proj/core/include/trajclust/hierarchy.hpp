#pragma once

// Ward agglomerative clustering on a precomputed dissimilarity matrix.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "trajclust/distance.hpp"

namespace trajclust {

// ward_d runs the Lance-Williams Ward update on raw dissimilarities;
// ward_d2 runs it on squared dissimilarities and reports sqrt heights.
enum class WardVariant { ward_d, ward_d2 };

std::string_view to_string(WardVariant v) noexcept;
WardVariant parse_ward_variant(std::string_view text); // "d" / "d2" / "ward_d" / "ward_d2"

// Node ids: leaves are 0..n-1, merge k creates node n+k. left < right.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;

    friend bool operator==(const Merge&, const Merge&) = default;
};

struct MergeTree {
    std::size_t n = 0;
    std::vector<Merge> merges;
    // Merges whose height is below the preceding merge height. Expected 0
    // for Ward; nonzero only through floating-point rounding.
    std::size_t monotonicity_violations = 0;
};

// Throws validation errors when node ids, sizes or counts are inconsistent.
void validate_tree(const MergeTree& tree);

struct Partition {
    std::size_t k = 0;
    std::vector<std::size_t> labels; // one per patient, in 0..k-1

    std::size_t size() const noexcept { return labels.size(); }
    std::vector<std::size_t> cluster_sizes() const;
    friend bool operator==(const Partition&, const Partition&) = default;
};

// Every label < k and every cluster non-empty.
void validate_partition(const Partition& partition);

// Nearest-neighbour-chain Ward linkage, O(n^2) time. The matrix is taken by
// value and used as the working buffer: pass std::move(matrix) to avoid a
// copy when the caller no longer needs the distances. Equal dissimilarities
// are resolved towards the previous chain element, then the earliest-created
// cluster, and each chain starts from the earliest-created cluster, so the
// tree is reproducible; merges are reported in order of height.
MergeTree ward_linkage(CondensedDistanceMatrix matrix, WardVariant variant);

// Undo the last k-1 merges. Labels are numbered by smallest member leaf.
Partition cut(const MergeTree& tree, std::size_t k);

void write_tree_csv(std::ostream& out, const MergeTree& tree);
void write_tree_csv(const std::filesystem::path& path, const MergeTree& tree);
MergeTree read_tree_csv(std::istream& in);
MergeTree read_tree_csv(const std::filesystem::path& path);

} // namespace trajclust
