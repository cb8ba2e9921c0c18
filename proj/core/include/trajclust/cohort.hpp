#pragma once

// Patient records, the long-term-condition catalog, and their CSV forms.
//
// Ages are decimal years measured from birth; the timeline of every patient
// starts at age 0 and ends at its follow-up end.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trajclust {

struct LtcEntry {
    std::string condition_id;
    std::string label;
    std::string category;
    std::string code_set;
    bool is_index = false;
};

// Ordered list of tracked conditions. Exactly one entry is the index
// condition that defines cohort eligibility.
class LtcCatalog {
public:
    LtcCatalog() = default;
    explicit LtcCatalog(std::vector<LtcEntry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    const LtcEntry& operator[](std::size_t i) const { return entries_[i]; }
    std::span<const LtcEntry> entries() const noexcept { return entries_; }

    std::optional<std::size_t> find(std::string_view condition_id) const;
    std::size_t index_condition() const noexcept { return index_; }

    friend bool operator==(const LtcCatalog& a, const LtcCatalog& b);

private:
    std::vector<LtcEntry> entries_;
    std::unordered_map<std::string, std::size_t> lookup_;
    std::size_t index_ = 0;
};

bool operator==(const LtcEntry& a, const LtcEntry& b);

enum class Gender { female, male };
enum class Ethnicity { white, asian, black, mixed, other_unknown };
enum class ImdBand { most_deprived, less_deprived, missing };
enum class EndStatus { censored, died };

enum class RiskFactor {
    smoking_ever,
    substance_dependency,
    alcohol,
    chronic_pain,
    hypercholesterolaemia,
    morbid_obesity,
};
inline constexpr std::size_t kRiskFactorCount = 6;
inline constexpr std::size_t kEthnicityCount = 5;
inline constexpr std::size_t kImdBandCount = 3;

std::string_view to_string(Gender g) noexcept;
std::string_view to_string(Ethnicity e) noexcept;
std::string_view to_string(ImdBand b) noexcept;
std::string_view to_string(EndStatus s) noexcept;
std::string_view to_string(RiskFactor r) noexcept;

Gender parse_gender(std::string_view text);
Ethnicity parse_ethnicity(std::string_view text);
ImdBand parse_imd_band(std::string_view text);
EndStatus parse_end_status(std::string_view text);

struct ConditionEvent {
    std::size_t condition = 0; // catalog position
    double onset_age = 0.0;

    friend bool operator==(const ConditionEvent&, const ConditionEvent&) = default;
};

struct PatientRecord {
    std::string patient_id;
    std::vector<ConditionEvent> events; // sorted by catalog position, one per condition
    double follow_up_end = 0.0;
    EndStatus end_status = EndStatus::censored;
    Gender gender = Gender::female;
    Ethnicity ethnicity = Ethnicity::other_unknown;
    ImdBand imd_band = ImdBand::missing;
    std::array<bool, kRiskFactorCount> risk_factors{};

    std::optional<double> onset_of(std::size_t condition) const;
    bool has(RiskFactor r) const { return risk_factors[static_cast<std::size_t>(r)]; }

    friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct Cohort {
    LtcCatalog catalog;
    std::vector<PatientRecord> patients;
    std::uint64_t population_size = 0; // registered population, 0 when unknown

    // Largest follow-up end: the right edge of every state matrix.
    double horizon() const;
    std::size_t size() const noexcept { return patients.size(); }
};

// Throws validation errors for any broken record invariant.
void validate_patient(const PatientRecord& patient, const LtcCatalog& catalog);
void validate_cohort(const Cohort& cohort);

LtcCatalog read_catalog(std::istream& in, const std::string& source = "catalog.csv");
LtcCatalog read_catalog(const std::filesystem::path& path);

// Duplicate (patient, condition) events collapse to the earliest onset.
Cohort load_cohort(std::istream& events, std::istream& patients, LtcCatalog catalog,
                   std::uint64_t population_size = 0);
Cohort load_cohort(const std::filesystem::path& events, const std::filesystem::path& patients,
                   const std::filesystem::path& catalog);

void write_catalog(std::ostream& out, const LtcCatalog& catalog);
void write_patients(std::ostream& out, const Cohort& cohort);
void write_events(std::ostream& out, const Cohort& cohort);
// Writes catalog.csv, patients.csv and events.csv into `dir`.
void write_cohort(const std::filesystem::path& dir, const Cohort& cohort);

// Cases per 100,000 person-years.
double incidence_rate(double case_count, double person_years);

struct LtcCountDistribution {
    std::vector<std::size_t> per_patient; // conditions other than the index one
    std::vector<std::size_t> histogram;   // histogram[c] = patients with c conditions
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

LtcCountDistribution ltc_count_distribution(const Cohort& cohort);

} // namespace trajclust
