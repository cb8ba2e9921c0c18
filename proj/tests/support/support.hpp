#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajclust/cohort.hpp"
#include "trajclust/rng.hpp"

namespace trajclust::testing {

// Conditions c0..c{count-1}; `index` is the index condition.
inline LtcCatalog make_catalog(std::size_t count, std::size_t index = 0) {
    std::vector<LtcEntry> entries;
    for (std::size_t c = 0; c < count; ++c) {
        entries.push_back({"c" + std::to_string(c), "condition " + std::to_string(c), "test", "",
                           c == index});
    }
    return LtcCatalog(std::move(entries));
}

inline PatientRecord make_patient(std::string id, double end,
                                  std::vector<std::pair<std::size_t, double>> events) {
    PatientRecord p;
    p.patient_id = std::move(id);
    p.follow_up_end = end;
    for (auto [c, onset] : events) p.events.push_back({c, onset});
    std::sort(p.events.begin(), p.events.end(),
              [](const auto& x, const auto& y) { return x.condition < y.condition; });
    return p;
}

// Integer horizons in [lo, hi] and integer onsets in [0, horizon]; each
// condition present with probability `p`, the index condition always.
inline PatientRecord random_patient(Rng& rng, const LtcCatalog& catalog, std::size_t i,
                                    bool integer, double p = 0.3, double lo = 20.0,
                                    double hi = 100.0) {
    PatientRecord pr;
    pr.patient_id = "p" + std::to_string(i);
    pr.follow_up_end = integer ? lo + static_cast<double>(rng.below(static_cast<std::uint64_t>(hi - lo) + 1))
                               : lo + (hi - lo) * rng.uniform();
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        if (c != catalog.index_condition() && !rng.bernoulli(p)) continue;
        const double onset =
            integer ? static_cast<double>(rng.below(static_cast<std::uint64_t>(pr.follow_up_end) + 1))
                    : pr.follow_up_end * rng.uniform();
        pr.events.push_back({c, onset});
    }
    pr.gender = rng.bernoulli(0.5) ? Gender::female : Gender::male;
    return pr;
}

inline Cohort random_cohort(std::size_t n, std::size_t conditions, std::uint64_t seed,
                            bool integer = true) {
    Cohort cohort;
    cohort.catalog = make_catalog(conditions);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        cohort.patients.push_back(random_patient(rng, cohort.catalog, i, integer));
    }
    return cohort;
}

} // namespace trajclust::testing
