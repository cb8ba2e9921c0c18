#pragma once

// Censoring-aware Jaccard dissimilarity between condition histories.
//
// A patient's state indicator for condition c is 0 on [0, onset), 1 on
// [onset, horizon] and undefined past the horizon. Two patients are compared
// on their common follow-up [0, W), W = min(horizon_a, horizon_b): pooled over
// all conditions, the distance is 1 - (time both positive) / (time either
// positive). Time where both are negative, or unobserved for either patient,
// never enters the ratio. A pair with no positive time at all gets distance 0.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "trajclust/cohort.hpp"

namespace trajclust {

// Interval-compressed state matrix: one onset per catalog condition.
struct StateTimeline {
    static constexpr double kAbsent = std::numeric_limits<double>::infinity();

    std::size_t patient_index = 0;
    double horizon = 0.0;
    std::vector<double> onsets; // kAbsent for conditions never recorded

    bool has(std::size_t condition) const { return onsets[condition] != kAbsent; }
};

StateTimeline timeline(const PatientRecord& patient, std::size_t condition_count,
                       std::size_t patient_index = 0);
std::vector<StateTimeline> timelines(const Cohort& cohort);

double jaccard(const StateTimeline& a, const StateTimeline& b);

// Strict upper triangle of a symmetric n x n dissimilarity matrix, stored
// row-major: pair (i, j), i < j, lives at i*n - i*(i+1)/2 + (j - i - 1).
class CondensedDistanceMatrix {
public:
    CondensedDistanceMatrix() = default;
    explicit CondensedDistanceMatrix(std::size_t n);
    CondensedDistanceMatrix(std::size_t n, std::vector<double> values);

    static constexpr std::size_t pair_count(std::size_t n) noexcept {
        return n < 2 ? 0 : n * (n - 1) / 2;
    }
    static constexpr std::size_t index(std::size_t n, std::size_t i, std::size_t j) noexcept {
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return index(n_, i, j); }

    // Symmetric accessor; (i, i) is 0.
    double operator()(std::size_t i, std::size_t j) const noexcept {
        if (i == j) return 0.0;
        return i < j ? values_[index(i, j)] : values_[index(j, i)];
    }
    double& at(std::size_t i, std::size_t j) noexcept {
        return i < j ? values_[index(i, j)] : values_[index(j, i)];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    friend bool operator==(const CondensedDistanceMatrix&,
                           const CondensedDistanceMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

struct DistanceDiagnostics {
    std::uint64_t empty_union_pairs = 0; // pairs defaulted to distance 0
};

// Pairs are split into row blocks evaluated on `workers` threads; every
// value lands in its own slot so the result is bitwise independent of the
// worker count.
CondensedDistanceMatrix condensed_matrix(std::span<const StateTimeline> timelines,
                                         unsigned workers = 1,
                                         DistanceDiagnostics* diagnostics = nullptr);
CondensedDistanceMatrix condensed_matrix(const Cohort& cohort, unsigned workers = 1,
                                         DistanceDiagnostics* diagnostics = nullptr);

// Binary cache: "TJD1", little-endian u64 n, then n(n-1)/2 little-endian
// float32 values in condensed order. Reading widens the floats back to double.
void write_matrix_cache(std::ostream& out, const CondensedDistanceMatrix& matrix);
void write_matrix_cache(const std::filesystem::path& path, const CondensedDistanceMatrix& matrix);
CondensedDistanceMatrix read_matrix_cache(std::istream& in);
CondensedDistanceMatrix read_matrix_cache(const std::filesystem::path& path);

} // namespace trajclust
