#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "trajclust/error.hpp"
#include "trajclust/hierarchy.hpp"
#include "trajclust/rng.hpp"

using namespace trajclust;

namespace {

CondensedDistanceMatrix three_points() {
    return CondensedDistanceMatrix(3, {1.0, 5.0, 5.0}); // d01, d02, d12
}

CondensedDistanceMatrix random_matrix(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    CondensedDistanceMatrix m(n);
    for (auto& v : m.values()) v = rng.uniform();
    return m;
}

} // namespace

TEST_CASE("two leaves") {
    const auto tree = ward_linkage(CondensedDistanceMatrix(2, {0.7}), WardVariant::ward_d);
    REQUIRE(tree.merges.size() == 1);
    CHECK(tree.merges[0] == Merge{0, 1, 0.7, 2});
    CHECK(ward_linkage(CondensedDistanceMatrix(2, {0.7}), WardVariant::ward_d2).merges[0].height ==
          doctest::Approx(0.7));
}

TEST_CASE("three leaves by hand") {
    for (auto variant : {WardVariant::ward_d, WardVariant::ward_d2}) {
        const auto tree = ward_linkage(three_points(), variant);
        REQUIRE(tree.merges.size() == 2);
        CHECK(tree.merges[0].left == 0);
        CHECK(tree.merges[0].right == 1);
        CHECK(tree.merges[0].height == doctest::Approx(1.0));
        CHECK(tree.merges[1].left == 2);
        CHECK(tree.merges[1].right == 3);
        CHECK(tree.merges[1].size == 3);
        if (variant == WardVariant::ward_d) {
            CHECK(tree.merges[1].height == doctest::Approx(19.0 / 3.0).epsilon(1e-12));
        } else {
            CHECK(tree.merges[1].height == doctest::Approx(std::sqrt((2 * 25.0 + 2 * 25.0 - 1) / 3.0)));
        }
        CHECK(tree.monotonicity_violations == 0);
    }
}

TEST_CASE("fewer than two leaves is an error") {
    CHECK_THROWS_AS(ward_linkage(CondensedDistanceMatrix(1), WardVariant::ward_d2), Error);
}

TEST_CASE("all-equal four points resolve by the tie rule") {
    const auto tree = ward_linkage(CondensedDistanceMatrix(4, std::vector<double>(6, 1.0)),
                                   WardVariant::ward_d);
    REQUIRE(tree.merges.size() == 3);
    CHECK(tree.merges[0].left == 0);
    CHECK(tree.merges[0].right == 1);
    CHECK(tree.merges[1].left == 2);
    CHECK(tree.merges[1].right == 3);
    CHECK(tree.merges[2].left == 4);
    CHECK(tree.merges[2].right == 5);
    const auto naive = oracle::naive_ward(oracle::expand(CondensedDistanceMatrix(4, std::vector<double>(6, 1.0))),
                                          WardVariant::ward_d);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(naive[m].left == tree.merges[m].left);
        CHECK(naive[m].right == tree.merges[m].right);
    }
}

TEST_CASE("nn-chain matches the naive oracle on random matrices") {
    for (auto variant : {WardVariant::ward_d, WardVariant::ward_d2}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto m = random_matrix(30, seed);
            const auto tree = ward_linkage(m, variant);
            const auto naive = oracle::naive_ward(oracle::expand(m), variant);
            REQUIRE(tree.merges.size() == naive.size());
            for (std::size_t k = 0; k < naive.size(); ++k) {
                CHECK(tree.merges[k].left == naive[k].left);
                CHECK(tree.merges[k].right == naive[k].right);
                CHECK(tree.merges[k].size == naive[k].size);
                CHECK(std::abs(tree.merges[k].height - naive[k].height) <= 1e-9);
            }
        }
    }
}

TEST_CASE("non-finite input is rejected") {
    CondensedDistanceMatrix m(3, {1.0, NAN, 2.0});
    CHECK_THROWS_AS(ward_linkage(m, WardVariant::ward_d), Error);
}

TEST_CASE("cut") {
    const auto tree = ward_linkage(three_points(), WardVariant::ward_d);
    CHECK(cut(tree, 1).labels == std::vector<std::size_t>{0, 0, 0});
    CHECK(cut(tree, 2).labels == std::vector<std::size_t>{0, 0, 1});
    CHECK(cut(tree, 3).labels == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(cut(tree, 0), Error);
    CHECK_THROWS_AS(cut(tree, 4), Error);

    const auto big = ward_linkage(random_matrix(40, 17), WardVariant::ward_d2);
    for (std::size_t k = 1; k <= 40; ++k) {
        const auto p = cut(big, k);
        CHECK(p.k == k);
        CHECK_NOTHROW(validate_partition(p));
    }
}

TEST_CASE("variant names") {
    CHECK(parse_ward_variant("d") == WardVariant::ward_d);
    CHECK(parse_ward_variant("d2") == WardVariant::ward_d2);
    CHECK(parse_ward_variant("ward.D2") == WardVariant::ward_d2);
    CHECK_THROWS_AS(parse_ward_variant("single"), Error);
}

TEST_CASE("tree csv round trip and validation") {
    const auto tree = ward_linkage(random_matrix(12, 2), WardVariant::ward_d2);
    std::stringstream buf;
    write_tree_csv(buf, tree);
    CHECK(buf.str().rfind("merge_index,left,right,height,size\n", 0) == 0);
    const auto back = read_tree_csv(buf);
    CHECK(back.n == tree.n);
    CHECK(back.merges == tree.merges);

    MergeTree broken = tree;
    broken.merges[3].size += 1;
    CHECK_THROWS_AS(validate_tree(broken), Error);
    broken = tree;
    broken.merges[5].right = broken.merges[5].left;
    CHECK_THROWS_AS(validate_tree(broken), Error);
}
