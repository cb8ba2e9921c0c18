#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "oracles.hpp"
#include "trajclust/error.hpp"
#include "trajclust/rng.hpp"
#include "trajclust/selection.hpp"

using namespace trajclust;

namespace {

SelectionCurve curve_of(std::vector<std::optional<double>> values, std::size_t k_min = 2) {
    SelectionCurve c;
    for (std::size_t i = 0; i < values.size(); ++i) c.k_values.push_back(k_min + i);
    c.coefficients = std::move(values);
    c.local_maxima = strict_local_maxima(c);
    return c;
}

ErrorCategory category_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    return ErrorCategory::io;
}

} // namespace

TEST_CASE("perfect separation gives +1") {
    // {0,1} | {2,3}: 0 within, 1 between
    CondensedDistanceMatrix m(4, {0, 1, 1, 1, 1, 0});
    CHECK(point_biserial(m, {2, {0, 0, 1, 1}}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("undefined cases") {
    CondensedDistanceMatrix flat(4, std::vector<double>(6, 0.5));
    CHECK(category_of([&] { point_biserial(flat, {2, {0, 0, 1, 1}}); }) == ErrorCategory::undefined);
    CondensedDistanceMatrix m(3, {0.1, 0.5, 0.7});
    CHECK(category_of([&] { point_biserial(m, {1, {0, 0, 0}}); }) == ErrorCategory::undefined);
    CHECK(category_of([&] { point_biserial(m, {3, {0, 1, 2}}); }) == ErrorCategory::undefined);
    CHECK_THROWS_AS(point_biserial(m, {2, {0, 1}}), Error);
}

TEST_CASE("four-point example equals brute-force Pearson") {
    // order: d01 d02 d03 d12 d13 d23
    CondensedDistanceMatrix m(4, {0.1, 0.8, 0.9, 0.7, 0.85, 0.2});
    const std::vector<std::size_t> labels = {0, 0, 1, 1};
    const double direct = oracle::point_biserial_pearson(m, labels);
    CHECK(point_biserial(m, {2, labels}) == doctest::Approx(direct).epsilon(1e-14));
    // by hand: x = {.1,.8,.9,.7,.85,.2}, y = {0,1,1,1,1,0}
    const double mx = 3.55 / 6, my = 4.0 / 6;
    const double x[] = {0.1, 0.8, 0.9, 0.7, 0.85, 0.2};
    const double y[] = {0, 1, 1, 1, 1, 0};
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 6; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    CHECK(direct == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-14));
}

TEST_CASE("invariant under positive affine maps of the distances") {
    Rng rng(4);
    CondensedDistanceMatrix m(30);
    for (auto& v : m.values()) v = rng.uniform();
    CondensedDistanceMatrix scaled = m;
    for (auto& v : scaled.values()) v = 3.0 * v + 0.25;
    std::vector<std::size_t> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = i % 4;
    const Partition p{4, labels};
    CHECK(point_biserial(m, p) == doctest::Approx(point_biserial(scaled, p)).epsilon(1e-12));
    CHECK(point_biserial(m, p) == doctest::Approx(oracle::point_biserial_pearson(m, labels)).epsilon(1e-12));
}

TEST_CASE("policies") {
    auto c = curve_of({0.1, 0.2, 0.25, 0.30, 0.2, 0.25, 0.28, 0.33, 0.3}); // k = 2..10
    CHECK(c.local_maxima == std::vector<std::size_t>{5, 9});
    // set k=8 to 0.33 by using k_min so that maxima land on 5 and 8
    c = curve_of({0.2, 0.25, 0.30, 0.2, 0.25, 0.33, 0.3}, 3); // k = 3..9
    CHECK(c.local_maxima == std::vector<std::size_t>{5, 8});
    CHECK(select_k(c, {SelectionPolicy::first_local_max, 0}) == 5);
    CHECK(select_k(c, {SelectionPolicy::global_max_among_local, 0}) == 8);
    CHECK(select_k(c, {SelectionPolicy::fixed, 8}) == 8);
    CHECK(select_k(c, {SelectionPolicy::fixed, 3}) == 3);
    CHECK_THROWS_AS(select_k(c, {SelectionPolicy::fixed, 20}), Error);
}

TEST_CASE("monotone curve falls back to argmax") {
    const auto c = curve_of({0.5, 0.4, 0.3, 0.2});
    CHECK(c.local_maxima.empty());
    CHECK(select_k(c, {}) == 2);
    const auto undefined_edge = curve_of({std::nullopt, 0.4, 0.6, std::nullopt});
    CHECK(undefined_edge.local_maxima.empty());
    CHECK(select_k(undefined_edge, {}) == 4);
}

TEST_CASE("policy parsing") {
    CHECK(parse_selection_rule("first-local-max").policy == SelectionPolicy::first_local_max);
    CHECK(parse_selection_rule("global_max").policy == SelectionPolicy::global_max_among_local);
    const auto f = parse_selection_rule("fixed=8");
    CHECK(f.policy == SelectionPolicy::fixed);
    CHECK(f.fixed_k == 8);
    CHECK_THROWS_AS(parse_selection_rule("fixed=x"), Error);
    CHECK_THROWS_AS(parse_selection_rule("best"), Error);
}

TEST_CASE("scan defaults and range checks") {
    CHECK(kDefaultMinClusters == 2);
    CHECK(kDefaultMaxClusters == 20);
    Rng rng(8);
    CondensedDistanceMatrix m(25);
    for (auto& v : m.values()) v = rng.uniform();
    const auto tree = ward_linkage(m, WardVariant::ward_d2);
    const auto curve = scan(tree, m);
    CHECK(curve.k_values.front() == 2);
    CHECK(curve.k_values.back() == 20);
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
        REQUIRE(curve.coefficients[i]);
        CHECK(*curve.coefficients[i] ==
              doctest::Approx(point_biserial(m, cut(tree, curve.k_values[i]))).epsilon(1e-12));
    }
    CHECK(scan(tree, m, 2, 20, 4).coefficients == curve.coefficients);
    CHECK_THROWS_AS(scan(tree, m, 1, 5), Error);
    CHECK_THROWS_AS(scan(tree, m, 6, 5), Error);
    CHECK_THROWS_AS(scan(tree, m, 2, 25), Error);
}

TEST_CASE("curve csv round trip") {
    auto c = curve_of({0.1, std::nullopt, 0.3, 0.2});
    c.chosen_k = select_k(c, {});
    std::stringstream buf;
    write_curve_csv(buf, c);
    const auto back = read_curve_csv(buf);
    CHECK(back.k_values == c.k_values);
    CHECK(back.coefficients == c.coefficients);
    CHECK(back.chosen_k == c.chosen_k);
    const auto meta = curve_metadata(c, WardVariant::ward_d2);
    CHECK(meta["policy"] == "first_local_max");
    CHECK(meta["ward_variant"] == "ward_d2");
}
