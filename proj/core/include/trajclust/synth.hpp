#pragma once

// Planted-cluster synthetic cohorts with known ground truth.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajclust/cohort.hpp"

namespace trajclust {

struct OnsetDistribution {
    double probability = 0.0; // chance the condition is ever recorded
    double mean = 0.0;        // onset age, normal truncated to [0, follow-up end]
    double sd = 1.0;
};

struct Archetype {
    std::string name;
    double weight = 0.0;
    double follow_up_mean = 75.0;
    double follow_up_sd = 10.0;
    double death_probability = 0.0;
    std::map<std::string, OnsetDistribution> conditions; // keyed by condition_id
    std::array<double, 2> gender{0.5, 0.5};              // female, male
    std::array<double, kEthnicityCount> ethnicity{0.51, 0.07, 0.25, 0.03, 0.14};
    std::array<double, kImdBandCount> imd_band{0.68, 0.31, 0.01};
    std::array<double, kRiskFactorCount> risk_factors{0.6, 0.06, 0.25, 0.57, 0.69, 0.06};
};

struct ArchetypeSpec {
    std::vector<Archetype> archetypes;
};

inline constexpr double kMinFollowUp = 1.0;
inline constexpr double kMaxFollowUp = 110.0;
inline constexpr int kMaxRejectionAttempts = 1000;

// Weights sum to 1, probabilities in [0,1], sds > 0, every condition in the
// catalog, and each archetype gives an onset distribution for the index
// condition (whose probability is treated as 1).
void validate_spec(const ArchetypeSpec& spec, const LtcCatalog& catalog);

// JSON layout:
//   {"archetypes": [{"name": ..., "weight": ..., "follow_up": {"mean", "sd"},
//     "death_probability": ..., "conditions": {"<id>": {"p", "mean", "sd"}},
//     "gender": {"female", "male"}, "ethnicity": {"White", ...},
//     "imd_band": {"most_deprived", ...}, "risk_factors": {"smoking_ever", ...}}]}
// Socio-demographic blocks are optional.
ArchetypeSpec parse_archetype_spec(const nlohmann::json& j);
ArchetypeSpec read_archetype_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ArchetypeSpec& spec);

struct LabeledCohort {
    Cohort cohort;
    std::vector<std::size_t> truth; // archetype index per patient
};

// Deterministic in (spec, catalog, n, seed). Truncated normals are drawn by
// rejection with a 1,000-attempt cap, then clamped into range.
LabeledCohort generate(const ArchetypeSpec& spec, const LtcCatalog& catalog, std::size_t n,
                       std::uint64_t seed);

// truth.csv: patient_id,archetype (archetype name).
void write_truth_csv(std::ostream& out, const LabeledCohort& labeled, const ArchetypeSpec& spec);

// Adjusted Rand index from the pair-counting contingency table.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

} // namespace trajclust
