#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "trajclust/characterize.hpp"
#include "trajclust/error.hpp"
#include "trajclust/rng.hpp"

using namespace trajclust;

namespace {

Partition labels_of(std::size_t k, std::vector<std::size_t> labels) { return {k, std::move(labels)}; }

// n patients over 4 conditions (index 0); cluster 0 gets condition 1 with
// probability `p_in`, the others with `p_out`.
std::pair<Cohort, Partition> enriched(std::size_t n, double p_in, double p_out, std::uint64_t seed) {
    Cohort cohort;
    cohort.catalog = testing::make_catalog(4);
    Rng rng(seed);
    Partition part{3, {}};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % 3;
        std::vector<std::pair<std::size_t, double>> ev = {{0, 60.0 + rng.normal(0, 5)}};
        if (rng.bernoulli(c == 0 ? p_in : p_out)) ev.push_back({1, 50.0});
        if (rng.bernoulli(0.3)) ev.push_back({2, 55.0});
        auto p = testing::make_patient("p" + std::to_string(i), 90.0, ev);
        p.gender = rng.bernoulli(0.5) ? Gender::female : Gender::male;
        p.ethnicity = static_cast<Ethnicity>(rng.below(kEthnicityCount));
        p.imd_band = rng.bernoulli(0.6) ? ImdBand::most_deprived : ImdBand::less_deprived;
        for (auto& r : p.risk_factors) r = rng.bernoulli(0.3);
        cohort.patients.push_back(std::move(p));
        part.labels.push_back(c);
    }
    return {std::move(cohort), std::move(part)};
}

} // namespace

TEST_CASE("clusters are renumbered by decreasing size") {
    // A=0 (10), B=1 (30), C=2 (20)
    std::vector<std::size_t> l;
    l.insert(l.end(), 10, 0);
    l.insert(l.end(), 30, 1);
    l.insert(l.end(), 20, 2);
    const auto o = order_clusters(labels_of(3, l));
    CHECK(o.labels[0] == 2);
    CHECK(o.labels[10] == 0);
    CHECK(o.labels[40] == 1);

    const auto already = labels_of(3, {0, 0, 0, 1, 1, 2});
    CHECK(order_clusters(already) == already);

    const auto tie = labels_of(2, {1, 0, 1, 0});
    CHECK(order_clusters(tie) == tie);
}

TEST_CASE("summary table shape") {
    auto [cohort, part] = enriched(300, 0.6, 0.2, 7);
    const auto ordered = order_clusters(part);
    const auto s = summarize_clusters(cohort, ordered);
    CHECK(s.k == 3);
    std::size_t gender_rows = 0;
    for (const auto& r : s.rows) {
        if (r.variable == "gender") {
            ++gender_rows;
            CHECK(r.test == "chi_square");
        }
        if (r.variable == "c0") FAIL("index condition must not be summarized");
        if (r.variable == "c3") CHECK(r.test == "none"); // nobody has c3
        if (r.variable == "age_at_index") CHECK(r.test == "kruskal_wallis");
    }
    CHECK(gender_rows == 2 * 4);
    // percents of a binary variable add to 100 within each column
    double total = 0.0;
    for (const auto& r : s.rows) {
        if (r.variable == "c1" && r.cluster == 1) total += *r.percent;
    }
    CHECK(total == doctest::Approx(100.0));

    const auto mc = summarize_clusters(cohort, ordered, {AssociationMode::monte_carlo, 500, 3, 2});
    const auto mc_again = summarize_clusters(cohort, ordered, {AssociationMode::monte_carlo, 500, 3, 1});
    REQUIRE(mc.rows.size() == mc_again.rows.size());
    for (std::size_t i = 0; i < mc.rows.size(); ++i) CHECK(mc.rows[i].p_value == mc_again.rows[i].p_value);

    std::stringstream out;
    write_summary_csv(out, s);
    CHECK(out.str().rfind("variable,level,cluster,count,percent,median,q1,q3,test,stat,p\n", 0) == 0);
}

TEST_CASE("heatmap needs two clusters") {
    auto [cohort, part] = enriched(60, 0.5, 0.5, 1);
    Partition one{1, std::vector<std::size_t>(60, 0)};
    CHECK_THROWS_AS(log_odds_heatmap(cohort, one, HeatmapPanel::ltc), Error);
}

TEST_CASE("enriched condition gets a significant positive coefficient") {
    // 4x enrichment: 0.4 in cluster 1 vs 0.1 elsewhere
    auto [cohort, part] = enriched(1000, 0.4, 0.1, 21);
    const auto table = log_odds_heatmap(cohort, part, HeatmapPanel::ltc);
    const auto& row = table.rows[0];
    const auto& cell = row.cells[0];
    CHECK(cell.variable == "c1");
    REQUIRE(cell.status == CellStatus::estimated);
    CHECK(*cell.log_odds > 0.0);
    CHECK(*cell.p_value < 0.05);
    CHECK(cell.displayed);
    // c3 never recorded
    CHECK(row.cells[2].status == CellStatus::constant);

    const auto upper = log_odds_heatmap(cohort, part, HeatmapPanel::sociodemographic_risk, {false, 3});
    CHECK(upper.rows[0].cells.size() == 2 + 4 + 2 + kRiskFactorCount);
    for (const auto& r : upper.rows) {
        for (const auto& c : r.cells) {
            if (c.p_value) CHECK(c.displayed == (*c.p_value < 0.05));
        }
    }
}

TEST_CASE("rare variable absent from a cluster is reported as separation") {
    auto [cohort, part] = enriched(300, 0.5, 0.5, 5);
    // condition 3 in two patients of cluster 1 only
    cohort.patients[1].events.push_back({3, 40.0});
    cohort.patients[4].events.push_back({3, 41.0});
    const auto table = log_odds_heatmap(cohort, part, HeatmapPanel::ltc);
    CHECK(table.rows[0].cells[2].status == CellStatus::separation);
    CHECK(table.rows[2].cells[2].status == CellStatus::separation);
    CHECK_FALSE(table.rows[0].cells[2].log_odds);
}

TEST_CASE("density per cluster") {
    auto [cohort, part] = enriched(90, 0.9, 0.0, 2);
    const auto whole = age_density(cohort, 1);
    REQUIRE(whole.size() == 1);
    CHECK_FALSE(whole[0].cluster);
    const auto per = age_density(cohort, 1, &part);
    REQUIRE(per.size() == 1); // only cluster 1 has condition 1
    CHECK(*per[0].cluster == 1);
    CHECK_THROWS_AS(age_density(cohort, 3), Error);
    std::stringstream out;
    write_density_csv(out, whole);
    CHECK(out.str().rfind("condition,cluster,age,scaled_density\n", 0) == 0);
}
