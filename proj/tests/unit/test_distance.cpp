#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "trajclust/distance.hpp"
#include "trajclust/error.hpp"

using namespace trajclust;
using testing::make_patient;

namespace {

StateTimeline tl(double end, std::vector<std::pair<std::size_t, double>> events,
                 std::size_t conditions = 2) {
    return timeline(make_patient("x", end, std::move(events)), conditions);
}

} // namespace

TEST_CASE("timeline maps onsets densely") {
    const auto t = tl(80, {{0, 65}, {1, 50}}, 3);
    CHECK(t.horizon == 80);
    CHECK(t.onsets[0] == 65);
    CHECK(t.onsets[1] == 50);
    CHECK_FALSE(t.has(2));
}

TEST_CASE("worked jaccard examples") {
    CHECK(jaccard(tl(20, {{0, 10}}), tl(20, {{0, 15}})) == 0.5);
    CHECK(jaccard(tl(40, {{0, 10}}), tl(20, {{0, 10}})) == 0.0);
    CHECK(jaccard(tl(10, {{0, 5}}), tl(10, {{1, 5}})) == 1.0);
    const auto a = tl(70, {{0, 12.5}, {1, 40}});
    CHECK(jaccard(a, a) == 0.0);
}

TEST_CASE("onset at origin and at horizon") {
    // stroke@0 end 10 vs stroke@5 end 10: I=5 U=10
    CHECK(jaccard(tl(10, {{0, 0}}), tl(10, {{0, 5}})) == 0.5);
    // zero-length positive interval adds nothing
    const auto degenerate = tl(70, {{0, 70}, {1, 20}});
    const auto other = tl(70, {{1, 20}});
    CHECK(jaccard(degenerate, other) == 0.0);
}

TEST_CASE("empty union gives zero") {
    // both positive sets start at or after the common horizon
    CHECK(jaccard(tl(30, {{0, 30}}), tl(50, {{1, 40}})) == 0.0);
}

TEST_CASE("mismatched catalogs are rejected") {
    CHECK_THROWS_AS(jaccard(tl(20, {{0, 1}}, 2), tl(20, {{0, 1}}, 3)), Error);
}

TEST_CASE("grid oracle agrees exactly on integer data") {
    const auto cohort = testing::random_cohort(60, 8, 5, true);
    const auto ts = timelines(cohort);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = i; j < ts.size(); ++j) {
            CHECK(std::abs(jaccard(ts[i], ts[j]) - oracle::jaccard_grid(ts[i], ts[j], 1.0)) <= 1e-12);
        }
    }
    CHECK(oracle::jaccard_grid(ts[3], ts[3], 1.0) == 0.0);
}

TEST_CASE("grid oracle converges on fractional onsets") {
    const auto a = tl(63.7, {{0, 10.3}, {1, 41.9}});
    const auto b = tl(58.2, {{0, 17.65}, {1, 30.05}});
    const double exact = jaccard(a, b);
    double previous = 1.0;
    for (double r : {1.0, 0.25, 0.1, 0.01}) {
        const double err = std::abs(oracle::jaccard_grid(a, b, r) - exact);
        CHECK(err <= previous + 1e-12);
        CHECK(err <= 2.0 * r);
        previous = err;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("condensed indexing") {
    CHECK(CondensedDistanceMatrix::pair_count(2) == 1);
    CHECK(CondensedDistanceMatrix::pair_count(9847) == 48476781u);
    const std::size_t n = 7;
    std::size_t expected = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) CHECK(CondensedDistanceMatrix::index(n, i, j) == expected++);
    }
}

TEST_CASE("condensed matrix values") {
    Cohort cohort;
    cohort.catalog = testing::make_catalog(3);
    for (int i = 0; i < 3; ++i) cohort.patients.push_back(make_patient("p" + std::to_string(i), 50, {{0, 20}}));
    const auto m = condensed_matrix(cohort);
    CHECK(m.values().size() == 3);
    for (double v : m.values()) CHECK(v == 0.0);

    Cohort one;
    one.catalog = cohort.catalog;
    one.patients.push_back(cohort.patients[0]);
    CHECK_THROWS_AS(condensed_matrix(one), Error);

    const auto random = testing::random_cohort(50, 6, 9, false);
    const auto ts = timelines(random);
    const auto rm = condensed_matrix(random, 3);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = i + 1; j < ts.size(); ++j) CHECK(rm(i, j) == jaccard(ts[i], ts[j]));
    }
    CHECK(rm == condensed_matrix(random, 1));
}

TEST_CASE("empty-union pairs are counted") {
    Cohort cohort;
    cohort.catalog = testing::make_catalog(2);
    cohort.patients.push_back(make_patient("a", 30, {{0, 30}}));
    cohort.patients.push_back(make_patient("b", 50, {{0, 40}}));
    DistanceDiagnostics diag;
    const auto m = condensed_matrix(cohort, 1, &diag);
    CHECK(m(0, 1) == 0.0);
    CHECK(diag.empty_union_pairs == 1);
}

TEST_CASE("matrix cache round trip") {
    const auto m = condensed_matrix(testing::random_cohort(25, 5, 3, false));
    std::stringstream buf;
    write_matrix_cache(buf, m);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "TJD1");
    CHECK(bytes.size() == 4 + 8 + 4 * m.values().size());
    CHECK(static_cast<unsigned char>(bytes[4]) == 25); // little-endian n
    const auto back = read_matrix_cache(buf);
    REQUIRE(back.size() == m.size());
    for (std::size_t k = 0; k < m.values().size(); ++k) {
        CHECK(back.values()[k] == static_cast<double>(static_cast<float>(m.values()[k])));
    }

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_matrix_cache(truncated), Error);
    std::stringstream bad_magic("TJD2" + bytes.substr(4));
    CHECK_THROWS_AS(read_matrix_cache(bad_magic), Error);
}

TEST_CASE("per-pair horizons can break the triangle inequality") {
    // a is only seen up to 10, where it looks exactly like b
    const auto a = tl(10, {{0, 0}});
    const auto b = tl(100, {{0, 0}, {1, 10}});
    const auto c = tl(100, {{1, 0}});
    CHECK(jaccard(a, b) == 0.0);
    CHECK(jaccard(b, c) == doctest::Approx(0.55));
    CHECK(jaccard(a, c) == 1.0);
    CHECK(jaccard(a, c) > jaccard(a, b) + jaccard(b, c));
}
