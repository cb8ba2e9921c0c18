#pragma once

// Descriptive and inferential statistics used to characterize clusters.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace trajclust {

// Linear interpolation between order statistics (Hyndman-Fan type 7):
// h = (n-1)p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
// `sorted` must be non-empty and ascending.
double quantile_sorted(std::span<const double> sorted, double p);

struct NumericSummary {
    std::size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

// Throws invalid_argument on an empty sample.
NumericSummary summarize(std::span<const double> values);

struct GroupedSummary {
    std::vector<NumericSummary> groups;
    NumericSummary overall;
};

// `labels[i]` in 0..group_count-1; every group must be non-empty.
GroupedSummary numeric_summary(std::span<const double> values,
                               std::span<const std::size_t> labels, std::size_t group_count);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df = 0.0;
};

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);

// Rank-based H with the ties correction; p from chi-square on k-1 df.
// All values tied gives H = 0, p = 1.
TestResult kruskal_wallis(std::span<const double> values, std::span<const std::size_t> labels,
                          std::size_t group_count);

// Row-major r x c table of counts.
struct ContingencyTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> counts;

    ContingencyTable(std::size_t r, std::size_t c) : rows(r), cols(c), counts(r * c, 0) {}
    std::uint64_t& operator()(std::size_t i, std::size_t j) { return counts[i * cols + j]; }
    std::uint64_t operator()(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

// Pearson X^2 = sum (O-E)^2/E. Throws `undefined` naming the first zero margin.
double pearson_chi_square(const ContingencyTable& table);

enum class AssociationMode { chi_square, monte_carlo };
std::string_view to_string(AssociationMode m) noexcept;

struct AssociationOptions {
    AssociationMode mode = AssociationMode::chi_square;
    std::size_t replicates = 10000;
    std::uint64_t stream_seed = 0; // already derived per test, see derive_stream_seed
};

// Association between a categorical variable (levels 0..level_count-1) and
// groups. monte_carlo draws tables with both margins fixed by permuting the
// group labels; p = (1 + #{X^2_sim >= X^2_obs}) / (R + 1).
TestResult association_test(std::span<const std::size_t> levels, std::size_t level_count,
                            std::span<const std::size_t> groups, std::size_t group_count,
                            const AssociationOptions& options = {});

struct LogisticFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd z;
    Eigen::VectorXd p_values;
    double deviance = 0.0;
    int iterations = 0;
};

struct LogisticOptions {
    double tolerance = 1e-8; // on |dev - dev_old| / (|dev| + 0.1)
    int max_iterations = 25;
    double divergence_bound = 15.0; // |beta| above this is read as separation
};

// Maximum likelihood by iteratively reweighted least squares. `design`
// includes the intercept column. Standard errors come from the inverse
// information at the optimum; p-values are two-sided Wald tests.
// Throws rank_deficient for a singular design, separation when the
// response is constant, any |beta| diverges, or the iteration cap is hit.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, std::span<const double> response,
                         const LogisticOptions& options = {});

// Score vector X^T (y - p) and deviance at `beta`; used for gradient checks.
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& design, std::span<const double> response,
                               const Eigen::VectorXd& beta);
double logistic_deviance(const Eigen::MatrixXd& design, std::span<const double> response,
                         const Eigen::VectorXd& beta);

struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    bool point_mass = false; // fewer than 2 samples: single (value, 1) point
};

inline constexpr std::size_t kDensityGridSize = 512;
inline constexpr double kMinBandwidth = 0.5;

// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5), floored at 0.5.
double silverman_bandwidth(std::span<const double> samples);

// Gaussian kernel density on 512 points spanning [min - 3h, max + 3h].
DensityCurve kernel_density(std::span<const double> samples);
// Same curve divided by its maximum.
DensityCurve scaled_density(std::span<const double> samples);

} // namespace trajclust
