#include "trajclust/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "trajclust/error.hpp"
#include "trajclust/rng.hpp"

namespace trajclust {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCategory::invalid_argument, "quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

NumericSummary summarize(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCategory::invalid_argument, "summary of empty group");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return {sorted.size(), quantile_sorted(sorted, 0.5), quantile_sorted(sorted, 0.25),
            quantile_sorted(sorted, 0.75)};
}

GroupedSummary numeric_summary(std::span<const double> values,
                               std::span<const std::size_t> labels, std::size_t group_count) {
    if (values.size() != labels.size()) {
        throw Error(ErrorCategory::invalid_argument, "values and labels differ in length");
    }
    std::vector<std::vector<double>> groups(group_count);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (labels[i] >= group_count) {
            throw Error(ErrorCategory::invalid_argument, "group label out of range");
        }
        groups[labels[i]].push_back(values[i]);
    }
    GroupedSummary out;
    for (std::size_t g = 0; g < group_count; ++g) {
        if (groups[g].empty()) {
            throw Error(ErrorCategory::invalid_argument,
                        "group " + std::to_string(g) + " is empty");
        }
        out.groups.push_back(summarize(groups[g]));
    }
    out.overall = summarize(values);
    return out;
}

double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw Error(ErrorCategory::invalid_argument, "chi-square df must be > 0");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

TestResult kruskal_wallis(std::span<const double> values, std::span<const std::size_t> labels,
                          std::size_t group_count) {
    if (values.size() != labels.size()) {
        throw Error(ErrorCategory::invalid_argument, "values and labels differ in length");
    }
    const std::size_t n = values.size();
    std::vector<double> rank_sum(group_count, 0.0);
    std::vector<std::size_t> group_size(group_count, 0);
    for (auto l : labels) {
        if (l >= group_count) throw Error(ErrorCategory::invalid_argument, "group label out of range");
        ++group_size[l];
    }
    const auto nonempty = static_cast<std::size_t>(
        std::count_if(group_size.begin(), group_size.end(), [](std::size_t s) { return s > 0; }));
    if (nonempty < 2) {
        throw Error(ErrorCategory::invalid_argument, "Kruskal-Wallis needs at least 2 non-empty groups");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double tie_term = 0.0;
    for (std::size_t start = 0; start < n;) {
        std::size_t stop = start + 1;
        while (stop < n && values[order[stop]] == values[order[start]]) ++stop;
        const double t = static_cast<double>(stop - start);
        const double average_rank = (static_cast<double>(start + 1) + static_cast<double>(stop)) / 2.0;
        for (std::size_t k = start; k < stop; ++k) rank_sum[labels[order[k]]] += average_rank;
        tie_term += t * t * t - t;
        start = stop;
    }

    const double N = static_cast<double>(n);
    const double correction = 1.0 - tie_term / (N * N * N - N);
    TestResult r;
    r.df = static_cast<double>(nonempty - 1);
    if (correction <= 0.0) {
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    double s = 0.0;
    for (std::size_t g = 0; g < group_count; ++g) {
        if (group_size[g] > 0) s += rank_sum[g] * rank_sum[g] / static_cast<double>(group_size[g]);
    }
    const double h = (12.0 / (N * (N + 1.0)) * s - 3.0 * (N + 1.0)) / correction;
    r.statistic = std::max(0.0, h);
    r.p_value = chi_square_sf(r.statistic, r.df);
    return r;
}

std::string_view to_string(AssociationMode m) noexcept {
    return m == AssociationMode::chi_square ? "chi_square" : "monte_carlo";
}

namespace {

struct Margins {
    std::vector<double> rows;
    std::vector<double> cols;
    double total = 0.0;
};

Margins margins_of(const ContingencyTable& t) {
    Margins m{std::vector<double>(t.rows, 0.0), std::vector<double>(t.cols, 0.0), 0.0};
    for (std::size_t i = 0; i < t.rows; ++i) {
        for (std::size_t j = 0; j < t.cols; ++j) {
            const auto v = static_cast<double>(t(i, j));
            m.rows[i] += v;
            m.cols[j] += v;
            m.total += v;
        }
    }
    for (std::size_t i = 0; i < t.rows; ++i) {
        if (m.rows[i] == 0.0) {
            throw Error(ErrorCategory::undefined, "row margin " + std::to_string(i) + " is zero");
        }
    }
    for (std::size_t j = 0; j < t.cols; ++j) {
        if (m.cols[j] == 0.0) {
            throw Error(ErrorCategory::undefined,
                        "column margin " + std::to_string(j) + " is zero");
        }
    }
    return m;
}

double chi_square_with(const ContingencyTable& t, const Margins& m) {
    double x2 = 0.0;
    for (std::size_t i = 0; i < t.rows; ++i) {
        for (std::size_t j = 0; j < t.cols; ++j) {
            const double e = m.rows[i] * m.cols[j] / m.total;
            const double d = static_cast<double>(t(i, j)) - e;
            x2 += d * d / e;
        }
    }
    return x2;
}

} // namespace

double pearson_chi_square(const ContingencyTable& table) {
    return chi_square_with(table, margins_of(table));
}

TestResult association_test(std::span<const std::size_t> levels, std::size_t level_count,
                            std::span<const std::size_t> groups, std::size_t group_count,
                            const AssociationOptions& options) {
    if (levels.size() != groups.size()) {
        throw Error(ErrorCategory::invalid_argument, "levels and groups differ in length");
    }
    if (level_count < 2 || group_count < 2) {
        throw Error(ErrorCategory::invalid_argument,
                    "association test needs at least 2 levels and 2 groups");
    }
    ContingencyTable table(level_count, group_count);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] >= level_count || groups[i] >= group_count) {
            throw Error(ErrorCategory::invalid_argument, "level or group out of range");
        }
        ++table(levels[i], groups[i]);
    }
    const Margins m = margins_of(table);
    TestResult r;
    r.statistic = chi_square_with(table, m);
    r.df = static_cast<double>((level_count - 1) * (group_count - 1));
    if (options.mode == AssociationMode::chi_square) {
        r.p_value = chi_square_sf(r.statistic, r.df);
        return r;
    }

    if (options.replicates == 0) {
        throw Error(ErrorCategory::invalid_argument, "monte carlo test needs replicates > 0");
    }
    Rng rng(options.stream_seed);
    std::vector<std::size_t> shuffled(groups.begin(), groups.end());
    const double threshold = r.statistic * (1.0 - 64.0 * std::numeric_limits<double>::epsilon());
    std::size_t at_least = 0;
    ContingencyTable sim(level_count, group_count);
    for (std::size_t rep = 0; rep < options.replicates; ++rep) {
        rng.shuffle(shuffled.begin(), shuffled.end());
        std::fill(sim.counts.begin(), sim.counts.end(), 0);
        for (std::size_t i = 0; i < levels.size(); ++i) ++sim(levels[i], shuffled[i]);
        if (chi_square_with(sim, m) >= threshold) ++at_least;
    }
    r.p_value = (1.0 + static_cast<double>(at_least)) / (static_cast<double>(options.replicates) + 1.0);
    return r;
}

namespace {

Eigen::VectorXd response_vector(std::span<const double> response) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(response.size()));
    for (std::size_t i = 0; i < response.size(); ++i) y[static_cast<Eigen::Index>(i)] = response[i];
    return y;
}

Eigen::VectorXd fitted_probabilities(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    return eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

double deviance_of(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    // -2 log-likelihood written with log1p(exp) to stay finite for large |eta|
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double e = eta[i];
        const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        dev += 2.0 * (log1pexp - y[i] * e);
    }
    return dev;
}

} // namespace

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& design, std::span<const double> response,
                               const Eigen::VectorXd& beta) {
    const Eigen::VectorXd y = response_vector(response);
    return design.transpose() * (y - fitted_probabilities(design, beta));
}

double logistic_deviance(const Eigen::MatrixXd& design, std::span<const double> response,
                         const Eigen::VectorXd& beta) {
    return deviance_of(response_vector(response), design * beta);
}

LogisticFit fit_logistic(const Eigen::MatrixXd& design, std::span<const double> response,
                         const LogisticOptions& options) {
    const auto n = design.rows();
    const auto p = design.cols();
    if (static_cast<std::size_t>(n) != response.size()) {
        throw Error(ErrorCategory::invalid_argument, "design rows and response length differ");
    }
    if (n == 0 || p == 0) throw Error(ErrorCategory::invalid_argument, "empty design matrix");
    const Eigen::VectorXd y = response_vector(response);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
            throw Error(ErrorCategory::invalid_argument, "response must be 0/1");
        }
    }
    if (y.sum() == 0.0 || y.sum() == static_cast<double>(n)) {
        throw Error(ErrorCategory::separation, "constant response: maximum likelihood estimate does not exist");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) {
        throw Error(ErrorCategory::rank_deficient,
                    "design matrix has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(p) + " columns");
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double dev = deviance_of(y, design * beta);
    bool converged = false;
    int iter = 0;
    Eigen::LDLT<Eigen::MatrixXd> information;
    for (iter = 1; iter <= options.max_iterations; ++iter) {
        const Eigen::VectorXd mu = fitted_probabilities(design, beta);
        const Eigen::VectorXd w = mu.unaryExpr([](double m) {
            return std::max(m * (1.0 - m), std::numeric_limits<double>::epsilon());
        });
        information.compute(design.transpose() * w.asDiagonal() * design);
        if (information.info() != Eigen::Success || !(information.rcond() > 1e-14)) {
            throw Error(ErrorCategory::rank_deficient, "information matrix is singular");
        }
        beta += information.solve(design.transpose() * (y - mu));
        const double dev_new = deviance_of(y, design * beta);
        if (!std::isfinite(dev_new)) break;
        const bool small = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1) < options.tolerance;
        dev = dev_new;
        if (small) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw Error(ErrorCategory::separation, "IRLS did not converge in " +
                                                   std::to_string(options.max_iterations) +
                                                   " iterations");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!std::isfinite(beta[j]) || std::abs(beta[j]) > options.divergence_bound) {
            throw Error(ErrorCategory::separation,
                        "coefficient " + std::to_string(j) + " diverges (|beta| > " +
                            std::to_string(options.divergence_bound) + ")");
        }
    }

    const Eigen::VectorXd mu = fitted_probabilities(design, beta);
    const Eigen::VectorXd w = mu.unaryExpr([](double m) { return m * (1.0 - m); });
    information.compute(design.transpose() * w.asDiagonal() * design);
    const Eigen::MatrixXd covariance =
        information.solve(Eigen::MatrixXd::Identity(p, p));

    LogisticFit fit;
    fit.coefficients = beta;
    fit.standard_errors = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.z = beta.cwiseQuotient(fit.standard_errors);
    fit.p_values = fit.z.unaryExpr(
        [](double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); });
    fit.deviance = dev;
    fit.iterations = iter;
    return fit;
}

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) return kMinBandwidth;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, kMinBandwidth);
}

DensityCurve kernel_density(std::span<const double> samples) {
    if (samples.empty()) {
        throw Error(ErrorCategory::invalid_argument, "density of an empty sample");
    }
    DensityCurve curve;
    if (samples.size() < 2) {
        curve.grid = {samples.front()};
        curve.density = {1.0};
        curve.bandwidth = 0.0;
        curve.point_mass = true;
        return curve;
    }
    const double h = silverman_bandwidth(samples);
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;
    curve.bandwidth = h;
    curve.grid.resize(kDensityGridSize);
    curve.density.resize(kDensityGridSize);
    const double step = (hi - lo) / static_cast<double>(kDensityGridSize - 1);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < kDensityGridSize; ++g) {
        const double x = g + 1 == kDensityGridSize ? hi : lo + step * static_cast<double>(g);
        double s = 0.0;
        for (double v : samples) {
            const double u = (x - v) / h;
            s += std::exp(-0.5 * u * u);
        }
        curve.grid[g] = x;
        curve.density[g] = s * norm;
    }
    return curve;
}

DensityCurve scaled_density(std::span<const double> samples) {
    DensityCurve curve = kernel_density(samples);
    const double peak = *std::max_element(curve.density.begin(), curve.density.end());
    if (peak > 0.0) {
        for (double& d : curve.density) d /= peak;
    }
    return curve;
}

} // namespace trajclust
