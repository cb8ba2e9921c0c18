#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "support.hpp"
#include "trajclust/cohort.hpp"
#include "trajclust/error.hpp"

using namespace trajclust;

namespace {

const char* kCatalog =
    "condition_id,label,category,code_set,is_index\n"
    "hypertension,Hypertension,Circulatory,I10,0\n"
    "stroke,Stroke,Circulatory,I60-I64,1\n"
    "diabetes,Diabetes,Endocrine,E10-E14,0\n"
    "depression,Depression,Mental,F32,0\n";

const char* kPatientsHeader =
    "patient_id,gender,ethnicity,imd_band,follow_up_end,end_status,smoking_ever,"
    "substance_dependency,alcohol,chronic_pain,hypercholesterolaemia,morbid_obesity\n";

LtcCatalog catalog() {
    std::istringstream in(kCatalog);
    return read_catalog(in);
}

Cohort load(const std::string& events, const std::string& patients) {
    std::istringstream e(events);
    std::istringstream p(std::string(kPatientsHeader) + patients);
    return load_cohort(e, p, catalog());
}

ErrorCategory category_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("no error thrown");
    return ErrorCategory::io;
}

} // namespace

TEST_CASE("catalog has exactly one index condition") {
    const auto c = catalog();
    CHECK(c.size() == 4);
    CHECK(c[c.index_condition()].condition_id == "stroke");
    CHECK(c.find("diabetes") == 2u);
    CHECK_FALSE(c.find("asthma"));

    std::istringstream two("condition_id,label,category,code_set,is_index\na,A,x,,1\nb,B,x,,1\n");
    CHECK(category_of([&] { read_catalog(two); }) == ErrorCategory::validation);
    std::istringstream none("condition_id,label,category,code_set,is_index\na,A,x,,0\n");
    CHECK_THROWS_AS(read_catalog(none), Error);
    std::istringstream dup("condition_id,label,category,code_set,is_index\na,A,x,,1\na,B,x,,0\n");
    CHECK_THROWS_AS(read_catalog(dup), Error);
}

TEST_CASE("duplicate events keep the earliest onset") {
    const auto cohort = load(
        "patient_id,condition_id,onset_age\n"
        "p1,hypertension,62.0\np1,stroke,70\np1,hypertension,60.0\n",
        "p1,female,White,most_deprived,80,censored,0,0,0,0,0,0\n");
    REQUIRE(cohort.size() == 1);
    const auto& p = cohort.patients[0];
    CHECK(p.events.size() == 2);
    CHECK(p.onset_of(0) == 60.0);
    CHECK(p.onset_of(1) == 70.0);
}

TEST_CASE("patient without the index condition is rejected") {
    CHECK(category_of([] {
              load("patient_id,condition_id,onset_age\n",
                   "p1,female,White,most_deprived,80,censored,0,0,0,0,0,0\n");
          }) == ErrorCategory::validation);
}

TEST_CASE("onset after follow-up end is rejected") {
    CHECK(category_of([] {
              load("patient_id,condition_id,onset_age\np1,stroke,70.0\n",
                   "p1,male,Asian,less_deprived,65.0,died,0,0,0,0,0,0\n");
          }) == ErrorCategory::validation);
}

TEST_CASE("other record invariants") {
    const std::string ok = "patient_id,condition_id,onset_age\np1,stroke,70\n";
    CHECK_THROWS_AS(load("patient_id,condition_id,onset_age\np1,stroke,-1\n",
                         "p1,male,White,,80,censored,0,0,0,0,0,0\n"),
                    Error);
    CHECK(category_of([&] { load(ok, "p1,male,White,,nan,censored,0,0,0,0,0,0\n"); }) ==
          ErrorCategory::validation);
    CHECK(category_of([&] { load(ok, "p1,male,White,,eighty,censored,0,0,0,0,0,0\n"); }) ==
          ErrorCategory::schema);
    CHECK_THROWS_AS(load(ok, "p1,male,White,,80,alive,0,0,0,0,0,0\n"), Error);
    CHECK_THROWS_AS(load(ok, "p1,male,White,,80,censored,0,0,2,0,0,0\n"), Error);
    CHECK_THROWS_AS(load(ok, "p1,male,White,,80,censored,0,0,0,0,0\n"), Error);
    // unknown ids
    CHECK_THROWS_AS(load("patient_id,condition_id,onset_age\np1,stroke,70\np1,gout,60\n",
                         "p1,male,White,,80,censored,0,0,0,0,0,0\n"),
                    Error);
    CHECK_THROWS_AS(load("patient_id,condition_id,onset_age\np1,stroke,70\np2,stroke,60\n",
                         "p1,male,White,,80,censored,0,0,0,0,0,0\n"),
                    Error);
    // duplicate patients
    CHECK_THROWS_AS(load(ok, "p1,male,White,,80,censored,0,0,0,0,0,0\n"
                             "p1,male,White,,80,censored,0,0,0,0,0,0\n"),
                    Error);
}

TEST_CASE("categorical levels parse leniently where documented") {
    const auto cohort = load(
        "patient_id,condition_id,onset_age\np1,stroke,70\np2,stroke,50\np3,stroke,50\n",
        "p1,FEMALE,asian,,80,Died,1,0,1,0,0,1\n"
        "p2,male,,missing,60,censored,0,0,0,0,0,0\n"
        "p3,male,Other,Less_Deprived,60,censored,0,0,0,0,0,0\n");
    CHECK(cohort.patients[0].gender == Gender::female);
    CHECK(cohort.patients[0].ethnicity == Ethnicity::asian);
    CHECK(cohort.patients[0].imd_band == ImdBand::missing);
    CHECK(cohort.patients[0].end_status == EndStatus::died);
    CHECK(cohort.patients[0].has(RiskFactor::morbid_obesity));
    CHECK_FALSE(cohort.patients[0].has(RiskFactor::substance_dependency));
    CHECK(cohort.patients[1].ethnicity == Ethnicity::other_unknown);
    CHECK(cohort.patients[2].imd_band == ImdBand::less_deprived);
}

TEST_CASE("write then load is idempotent") {
    auto cohort = testing::random_cohort(40, 6, 11, false);
    const auto dir = std::filesystem::temp_directory_path() / "trajclust_cohort_roundtrip";
    std::filesystem::create_directories(dir);
    write_cohort(dir, cohort);
    const auto again = load_cohort(dir / "events.csv", dir / "patients.csv", dir / "catalog.csv");
    CHECK(again.catalog == cohort.catalog);
    CHECK(again.patients == cohort.patients);
    write_cohort(dir, again);
    const auto third = load_cohort(dir / "events.csv", dir / "patients.csv", dir / "catalog.csv");
    CHECK(third.patients == again.patients);
    std::filesystem::remove_all(dir);
}

TEST_CASE("incidence rate per 100,000 person-years") {
    CHECK(incidence_rate(1, 1000) == 100.0);
    CHECK(incidence_rate(0, 5000) == 0.0);
    CHECK(std::abs(incidence_rate(9847, 5918735.3) - 166.37) <= 0.01);
    CHECK_THROWS_AS(incidence_rate(1, 0), Error);
}

TEST_CASE("LTC counts exclude the index condition") {
    Cohort cohort;
    cohort.catalog = catalog();
    cohort.patients.push_back(testing::make_patient("a", 90, {{1, 60}}));
    cohort.patients.push_back(testing::make_patient("b", 90, {{0, 50}, {1, 60}, {2, 55}, {3, 40}}));
    auto dist = ltc_count_distribution(cohort);
    CHECK(dist.per_patient == std::vector<std::size_t>{0, 3});
    CHECK(dist.histogram.size() == cohort.catalog.size());
    CHECK(dist.histogram[0] == 1);
    CHECK(dist.histogram[3] == 1);
}

TEST_CASE("LTC count quartiles on planted counts {0,2,3,3,5}") {
    Cohort cohort;
    cohort.catalog = testing::make_catalog(6, 0);
    const std::vector<std::size_t> planted = {0, 2, 3, 3, 5};
    for (std::size_t i = 0; i < planted.size(); ++i) {
        std::vector<std::pair<std::size_t, double>> events = {{0, 50}};
        for (std::size_t c = 1; c <= planted[i]; ++c) events.push_back({c, 40});
        cohort.patients.push_back(testing::make_patient("p" + std::to_string(i), 90, events));
    }
    const auto dist = ltc_count_distribution(cohort);
    CHECK(dist.median == 3.0);
    CHECK(dist.q1 == 2.0);
    CHECK(dist.q3 == 3.0);
}
