#include "trajclust/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "trajclust/error.hpp"
#include "trajclust/parallel.hpp"

namespace trajclust {

namespace {

struct Moments {
    double mean = 0.0;
    double centered_total = 0.0; // sum(d - mean); ~0 up to rounding
    double sum_squares = 0.0;    // sum((d - mean)^2)
    bool constant = true;
};

Moments moments_of(const CondensedDistanceMatrix& matrix) {
    const auto values = matrix.values();
    const std::size_t n = matrix.size();
    Moments m;
    if (values.empty()) return m;
    // row-wise partial sums keep the summation order fixed and the error small
    double total = 0.0;
    double lo = values.front();
    double hi = values.front();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t start = matrix.index(i, i + 1);
        const std::size_t stop = start + (n - i - 1);
        double row = 0.0;
        for (std::size_t k = start; k < stop; ++k) {
            row += values[k];
            lo = std::min(lo, values[k]);
            hi = std::max(hi, values[k]);
        }
        total += row;
    }
    m.constant = lo == hi;
    m.mean = total / static_cast<double>(values.size());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t start = matrix.index(i, i + 1);
        const std::size_t stop = start + (n - i - 1);
        double row_c = 0.0;
        double row_ss = 0.0;
        for (std::size_t k = start; k < stop; ++k) {
            const double c = values[k] - m.mean;
            row_c += c;
            row_ss += c * c;
        }
        m.centered_total += row_c;
        m.sum_squares += row_ss;
    }
    return m;
}

double point_biserial_with(const CondensedDistanceMatrix& matrix, const Partition& partition,
                           const Moments& m) {
    const std::size_t n = matrix.size();
    if (partition.size() != n) {
        throw Error(ErrorCategory::invalid_argument,
                    "partition over " + std::to_string(partition.size()) +
                        " patients does not match matrix over " + std::to_string(n));
    }
    if (m.constant || !(m.sum_squares > 0.0)) {
        throw Error(ErrorCategory::undefined,
                    "point-biserial undefined: all distances are equal");
    }
    const auto values = matrix.values();
    const auto& labels = partition.labels;
    double within_centered = 0.0;
    std::size_t within_pairs = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t li = labels[i];
        const double* row = values.data() + matrix.index(i, i + 1);
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (labels[j] == li) {
                acc += row[j - i - 1] - m.mean;
                ++count;
            }
        }
        within_centered += acc;
        within_pairs += count;
    }
    const std::size_t total_pairs = values.size();
    const std::size_t between_pairs = total_pairs - within_pairs;
    if (within_pairs == 0 || between_pairs == 0) {
        throw Error(ErrorCategory::undefined,
                    "point-biserial undefined: partition has no " +
                        std::string(within_pairs == 0 ? "within" : "between") + "-cluster pairs");
    }
    const double N = static_cast<double>(total_pairs);
    const double nb = static_cast<double>(between_pairs);
    const double nw = static_cast<double>(within_pairs);
    const double p = nb / N;
    const double between_centered = m.centered_total - within_centered;
    const double cross = between_centered - p * m.centered_total;
    const double r = cross / std::sqrt(m.sum_squares * nb * nw / N);
    return std::clamp(r, -1.0, 1.0);
}

} // namespace

double point_biserial(const CondensedDistanceMatrix& matrix, const Partition& partition) {
    return point_biserial_with(matrix, partition, moments_of(matrix));
}

std::string_view to_string(SelectionPolicy p) noexcept {
    switch (p) {
        case SelectionPolicy::first_local_max: return "first_local_max";
        case SelectionPolicy::global_max_among_local: return "global_max_among_local";
        case SelectionPolicy::fixed: return "fixed";
    }
    return "first_local_max";
}

SelectionRule parse_selection_rule(std::string_view text) {
    std::string t(text);
    std::replace(t.begin(), t.end(), '_', '-');
    if (t == "first-local-max") return {SelectionPolicy::first_local_max, 0};
    if (t == "global-max" || t == "global-max-among-local") {
        return {SelectionPolicy::global_max_among_local, 0};
    }
    if (t.starts_with("fixed=")) {
        std::size_t k = 0;
        const char* first = t.data() + 6;
        const char* last = t.data() + t.size();
        const auto [ptr, ec] = std::from_chars(first, last, k);
        if (ec == std::errc{} && ptr == last && first != last) return {SelectionPolicy::fixed, k};
    }
    throw Error(ErrorCategory::invalid_argument, "unknown selection policy '" + std::string(text) +
                                                     "' (expected first-local-max, global-max "
                                                     "or fixed=<k>)");
}

std::vector<std::size_t> strict_local_maxima(const SelectionCurve& curve) {
    std::vector<std::size_t> out;
    const auto& c = curve.coefficients;
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        if (c[i] && c[i - 1] && c[i + 1] && *c[i] > *c[i - 1] && *c[i] > *c[i + 1]) {
            out.push_back(curve.k_values[i]);
        }
    }
    return out;
}

std::size_t select_k(const SelectionCurve& curve, SelectionRule rule) {
    if (curve.k_values.empty()) {
        throw Error(ErrorCategory::invalid_argument, "empty selection curve");
    }
    if (rule.policy == SelectionPolicy::fixed) {
        if (rule.fixed_k < curve.k_values.front() || rule.fixed_k > curve.k_values.back()) {
            throw Error(ErrorCategory::invalid_argument,
                        "fixed k=" + std::to_string(rule.fixed_k) + " outside scanned range [" +
                            std::to_string(curve.k_values.front()) + ", " +
                            std::to_string(curve.k_values.back()) + "]");
        }
        return rule.fixed_k;
    }
    const auto coefficient_at = [&](std::size_t k) {
        const auto it = std::find(curve.k_values.begin(), curve.k_values.end(), k);
        return *curve.coefficients[static_cast<std::size_t>(it - curve.k_values.begin())];
    };
    if (!curve.local_maxima.empty()) {
        if (rule.policy == SelectionPolicy::first_local_max) return curve.local_maxima.front();
        std::size_t best = curve.local_maxima.front();
        for (auto k : curve.local_maxima) {
            if (coefficient_at(k) > coefficient_at(best)) best = k;
        }
        return best;
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
        if (!curve.coefficients[i]) continue;
        if (!best || *curve.coefficients[i] > coefficient_at(*best)) best = curve.k_values[i];
    }
    if (!best) {
        throw Error(ErrorCategory::undefined, "point-biserial undefined for every scanned k");
    }
    return *best;
}

SelectionCurve scan(const MergeTree& tree, const CondensedDistanceMatrix& matrix,
                    std::size_t k_min, std::size_t k_max, unsigned workers, SelectionRule rule) {
    const std::size_t n = matrix.size();
    if (tree.n != n) {
        throw Error(ErrorCategory::invalid_argument, "tree and matrix cover different patients");
    }
    if (k_min < 2 || k_min > k_max || n < 3 || k_max > n - 1) {
        throw Error(ErrorCategory::invalid_argument,
                    "k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                        "] must satisfy 2 <= k_min <= k_max <= n-1 (n=" + std::to_string(n) + ")");
    }
    const Moments m = moments_of(matrix);
    SelectionCurve curve;
    for (std::size_t k = k_min; k <= k_max; ++k) curve.k_values.push_back(k);
    curve.coefficients.resize(curve.k_values.size());
    parallel_for(curve.k_values.size(), workers, [&](std::size_t i) {
        try {
            curve.coefficients[i] = point_biserial_with(matrix, cut(tree, curve.k_values[i]), m);
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::undefined) throw;
            curve.coefficients[i] = std::nullopt;
        }
    });
    curve.local_maxima = strict_local_maxima(curve);
    curve.rule = rule;
    curve.chosen_k = select_k(curve, rule);
    curve.chosen_is_local_max = std::find(curve.local_maxima.begin(), curve.local_maxima.end(),
                                          curve.chosen_k) != curve.local_maxima.end();
    return curve;
}

void write_curve_csv(std::ostream& out, const SelectionCurve& curve) {
    csv::write_row(out, {"k", "coefficient", "is_local_max", "chosen"});
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
        const auto k = curve.k_values[i];
        const bool local = std::find(curve.local_maxima.begin(), curve.local_maxima.end(), k) !=
                           curve.local_maxima.end();
        csv::write_row(out, {std::to_string(k),
                             curve.coefficients[i] ? csv::format_double(*curve.coefficients[i])
                                                   : std::string("NA"),
                             local ? "1" : "0", k == curve.chosen_k ? "1" : "0"});
    }
}

void write_curve_csv(const std::filesystem::path& path, const SelectionCurve& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
    write_curve_csv(out, curve);
}

SelectionCurve read_curve_csv(std::istream& in) {
    csv::Reader reader(in, "curve.csv");
    const auto c_k = reader.column("k");
    const auto c_coef = reader.column("coefficient");
    const auto c_chosen = reader.column("chosen");
    SelectionCurve curve;
    while (reader.next()) {
        curve.k_values.push_back(reader.parse_unsigned(c_k));
        if (reader.field(c_coef) == "NA") {
            curve.coefficients.emplace_back(std::nullopt);
        } else {
            curve.coefficients.emplace_back(reader.parse_double(c_coef));
        }
        if (reader.parse_bool(c_chosen)) curve.chosen_k = curve.k_values.back();
    }
    curve.local_maxima = strict_local_maxima(curve);
    curve.chosen_is_local_max = std::find(curve.local_maxima.begin(), curve.local_maxima.end(),
                                          curve.chosen_k) != curve.local_maxima.end();
    return curve;
}

nlohmann::json curve_metadata(const SelectionCurve& curve, WardVariant variant) {
    nlohmann::json j;
    j["policy"] = to_string(curve.rule.policy);
    if (curve.rule.policy == SelectionPolicy::fixed) j["fixed_k"] = curve.rule.fixed_k;
    j["k_min"] = curve.k_values.empty() ? 0 : curve.k_values.front();
    j["k_max"] = curve.k_values.empty() ? 0 : curve.k_values.back();
    j["ward_variant"] = to_string(variant);
    j["chosen_k"] = curve.chosen_k;
    j["chosen_is_local_max"] = curve.chosen_is_local_max;
    j["local_maxima"] = curve.local_maxima;
    j["coefficient"] = "point_biserial";
    j["indicator_coding"] = "same_cluster=0,different_cluster=1";
    return j;
}

} // namespace trajclust
