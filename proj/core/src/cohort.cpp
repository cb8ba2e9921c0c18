#include "trajclust/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "csv.hpp"
#include "trajclust/error.hpp"
#include "trajclust/stats.hpp"

namespace trajclust {

namespace {

std::string lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == ' ' && (out.empty())) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

[[noreturn]] void unknown_value(std::string_view what, std::string_view text) {
    throw Error(ErrorCategory::schema,
                "unknown " + std::string(what) + " value '" + std::string(text) + "'");
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
    return in;
}

constexpr std::array<std::string_view, kRiskFactorCount> kRiskFactorColumns = {
    "smoking_ever", "substance_dependency", "alcohol",
    "chronic_pain", "hypercholesterolaemia", "morbid_obesity",
};

} // namespace

bool operator==(const LtcEntry& a, const LtcEntry& b) {
    return a.condition_id == b.condition_id && a.label == b.label && a.category == b.category &&
           a.code_set == b.code_set && a.is_index == b.is_index;
}

LtcCatalog::LtcCatalog(std::vector<LtcEntry> entries) : entries_(std::move(entries)) {
    std::size_t index_count = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& id = entries_[i].condition_id;
        if (id.empty()) {
            throw Error(ErrorCategory::validation,
                        "catalog entry " + std::to_string(i + 1) + " has an empty condition_id");
        }
        if (!lookup_.emplace(id, i).second) {
            throw Error(ErrorCategory::validation, "duplicate condition_id '" + id + "' in catalog");
        }
        if (entries_[i].is_index) {
            index_ = i;
            ++index_count;
        }
    }
    if (index_count != 1) {
        throw Error(ErrorCategory::validation,
                    "catalog must flag exactly one index condition, found " +
                        std::to_string(index_count));
    }
}

std::optional<std::size_t> LtcCatalog::find(std::string_view condition_id) const {
    const auto it = lookup_.find(std::string(condition_id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

bool operator==(const LtcCatalog& a, const LtcCatalog& b) {
    return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(), b.entries_.end());
}

std::string_view to_string(Gender g) noexcept {
    return g == Gender::female ? "female" : "male";
}

std::string_view to_string(Ethnicity e) noexcept {
    switch (e) {
        case Ethnicity::white: return "White";
        case Ethnicity::asian: return "Asian";
        case Ethnicity::black: return "Black";
        case Ethnicity::mixed: return "Mixed";
        case Ethnicity::other_unknown: return "Other/Unknown";
    }
    return "Other/Unknown";
}

std::string_view to_string(ImdBand b) noexcept {
    switch (b) {
        case ImdBand::most_deprived: return "most_deprived";
        case ImdBand::less_deprived: return "less_deprived";
        case ImdBand::missing: return "missing";
    }
    return "missing";
}

std::string_view to_string(EndStatus s) noexcept {
    return s == EndStatus::died ? "died" : "censored";
}

std::string_view to_string(RiskFactor r) noexcept {
    return kRiskFactorColumns[static_cast<std::size_t>(r)];
}

Gender parse_gender(std::string_view text) {
    const auto t = lower(text);
    if (t == "female" || t == "f") return Gender::female;
    if (t == "male" || t == "m") return Gender::male;
    unknown_value("gender", text);
}

Ethnicity parse_ethnicity(std::string_view text) {
    const auto t = lower(text);
    if (t == "white") return Ethnicity::white;
    if (t == "asian") return Ethnicity::asian;
    if (t == "black") return Ethnicity::black;
    if (t == "mixed") return Ethnicity::mixed;
    if (t.empty() || t == "other/unknown" || t == "other" || t == "unknown" ||
        t == "not stated") {
        return Ethnicity::other_unknown;
    }
    unknown_value("ethnicity", text);
}

ImdBand parse_imd_band(std::string_view text) {
    const auto t = lower(text);
    if (t == "most_deprived" || t == "1-2") return ImdBand::most_deprived;
    if (t == "less_deprived" || t == "3-5") return ImdBand::less_deprived;
    if (t.empty() || t == "missing" || t == "na") return ImdBand::missing;
    unknown_value("imd_band", text);
}

EndStatus parse_end_status(std::string_view text) {
    const auto t = lower(text);
    if (t == "censored") return EndStatus::censored;
    if (t == "died") return EndStatus::died;
    unknown_value("end_status", text);
}

std::optional<double> PatientRecord::onset_of(std::size_t condition) const {
    const auto it = std::lower_bound(
        events.begin(), events.end(), condition,
        [](const ConditionEvent& e, std::size_t c) { return e.condition < c; });
    if (it == events.end() || it->condition != condition) return std::nullopt;
    return it->onset_age;
}

double Cohort::horizon() const {
    double h = 0.0;
    for (const auto& p : patients) h = std::max(h, p.follow_up_end);
    return h;
}

void validate_patient(const PatientRecord& patient, const LtcCatalog& catalog) {
    const auto where = [&] { return "patient '" + patient.patient_id + "': "; };
    if (patient.patient_id.empty()) {
        throw Error(ErrorCategory::validation, "patient with empty patient_id");
    }
    if (!std::isfinite(patient.follow_up_end) || patient.follow_up_end < 0.0) {
        throw Error(ErrorCategory::validation, where() + "follow_up_end must be a finite age >= 0");
    }
    if (patient.events.size() > catalog.size()) {
        throw Error(ErrorCategory::validation, where() + "more events than catalog conditions");
    }
    bool has_index = false;
    for (std::size_t i = 0; i < patient.events.size(); ++i) {
        const auto& e = patient.events[i];
        if (e.condition >= catalog.size()) {
            throw Error(ErrorCategory::validation, where() + "event outside the catalog");
        }
        if (i > 0 && patient.events[i - 1].condition >= e.condition) {
            throw Error(ErrorCategory::validation,
                        where() + "events must be unique and ordered by condition");
        }
        const auto& id = catalog[e.condition].condition_id;
        if (!std::isfinite(e.onset_age) || e.onset_age < 0.0) {
            throw Error(ErrorCategory::validation, where() + "negative onset age for '" + id + "'");
        }
        if (e.onset_age > patient.follow_up_end) {
            throw Error(ErrorCategory::validation,
                        where() + "onset of '" + id + "' at " + csv::format_double(e.onset_age) +
                            " is after follow_up_end " +
                            csv::format_double(patient.follow_up_end));
        }
        has_index = has_index || e.condition == catalog.index_condition();
    }
    if (!has_index) {
        throw Error(ErrorCategory::validation,
                    where() + "lacks the index condition '" +
                        catalog[catalog.index_condition()].condition_id + "'");
    }
}

void validate_cohort(const Cohort& cohort) {
    std::unordered_set<std::string_view> ids;
    for (const auto& p : cohort.patients) {
        validate_patient(p, cohort.catalog);
        if (!ids.insert(p.patient_id).second) {
            throw Error(ErrorCategory::validation, "duplicate patient_id '" + p.patient_id + "'");
        }
    }
}

LtcCatalog read_catalog(std::istream& in, const std::string& source) {
    csv::Reader reader(in, source);
    const auto c_id = reader.column("condition_id");
    const auto c_label = reader.column("label");
    const auto c_category = reader.column("category");
    const auto c_codes = reader.column("code_set");
    const auto c_index = reader.column("is_index");
    std::vector<LtcEntry> entries;
    while (reader.next()) {
        entries.push_back({reader.field(c_id), reader.field(c_label), reader.field(c_category),
                           reader.field(c_codes), reader.parse_bool(c_index)});
    }
    return LtcCatalog(std::move(entries));
}

LtcCatalog read_catalog(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_catalog(in, path.string());
}

Cohort load_cohort(std::istream& events, std::istream& patients, LtcCatalog catalog,
                   std::uint64_t population_size) {
    Cohort cohort;
    cohort.catalog = std::move(catalog);
    cohort.population_size = population_size;

    std::unordered_map<std::string, std::size_t> by_id;
    {
        csv::Reader reader(patients, "patients.csv");
        const auto c_id = reader.column("patient_id");
        const auto c_gender = reader.column("gender");
        const auto c_eth = reader.column("ethnicity");
        const auto c_imd = reader.column("imd_band");
        const auto c_end = reader.column("follow_up_end");
        const auto c_status = reader.column("end_status");
        std::array<std::size_t, kRiskFactorCount> c_risk{};
        for (std::size_t r = 0; r < kRiskFactorCount; ++r) {
            c_risk[r] = reader.column(kRiskFactorColumns[r]);
        }
        while (reader.next()) {
            PatientRecord p;
            p.patient_id = reader.field(c_id);
            try {
                p.gender = parse_gender(reader.field(c_gender));
                p.ethnicity = parse_ethnicity(reader.field(c_eth));
                p.imd_band = parse_imd_band(reader.field(c_imd));
                p.end_status = parse_end_status(reader.field(c_status));
            } catch (const Error& e) {
                reader.fail(e.what());
            }
            p.follow_up_end = reader.parse_double(c_end);
            for (std::size_t r = 0; r < kRiskFactorCount; ++r) {
                p.risk_factors[r] = reader.parse_bool(c_risk[r]);
            }
            if (!by_id.emplace(p.patient_id, cohort.patients.size()).second) {
                reader.fail("duplicate patient_id '" + p.patient_id + "'");
            }
            cohort.patients.push_back(std::move(p));
        }
    }

    {
        csv::Reader reader(events, "events.csv");
        const auto c_id = reader.column("patient_id");
        const auto c_cond = reader.column("condition_id");
        const auto c_onset = reader.column("onset_age");
        while (reader.next()) {
            const auto pit = by_id.find(reader.field(c_id));
            if (pit == by_id.end()) {
                reader.fail("event references unknown patient_id '" + reader.field(c_id) + "'");
            }
            const auto cond = cohort.catalog.find(reader.field(c_cond));
            if (!cond) {
                reader.fail("event references unknown condition_id '" + reader.field(c_cond) +
                            "'");
            }
            const double onset = reader.parse_double(c_onset);
            cohort.patients[pit->second].events.push_back({*cond, onset});
        }
    }

    for (auto& p : cohort.patients) {
        auto& ev = p.events;
        std::sort(ev.begin(), ev.end(), [](const ConditionEvent& a, const ConditionEvent& b) {
            return a.condition != b.condition ? a.condition < b.condition
                                              : a.onset_age < b.onset_age;
        });
        // first ever record wins
        ev.erase(std::unique(ev.begin(), ev.end(),
                             [](const ConditionEvent& a, const ConditionEvent& b) {
                                 return a.condition == b.condition;
                             }),
                 ev.end());
    }
    validate_cohort(cohort);
    return cohort;
}

Cohort load_cohort(const std::filesystem::path& events, const std::filesystem::path& patients,
                   const std::filesystem::path& catalog) {
    auto catalog_data = read_catalog(catalog);
    auto ev = open_input(events);
    auto pa = open_input(patients);
    return load_cohort(ev, pa, std::move(catalog_data));
}

void write_catalog(std::ostream& out, const LtcCatalog& catalog) {
    csv::write_row(out, {"condition_id", "label", "category", "code_set", "is_index"});
    for (const auto& e : catalog.entries()) {
        csv::write_row(out, {e.condition_id, e.label, e.category, e.code_set,
                             e.is_index ? "1" : "0"});
    }
}

void write_patients(std::ostream& out, const Cohort& cohort) {
    std::vector<std::string> header = {"patient_id", "gender",        "ethnicity",
                                       "imd_band",   "follow_up_end", "end_status"};
    header.insert(header.end(), kRiskFactorColumns.begin(), kRiskFactorColumns.end());
    csv::write_row(out, header);
    for (const auto& p : cohort.patients) {
        std::vector<std::string> row = {p.patient_id,
                                        std::string(to_string(p.gender)),
                                        std::string(to_string(p.ethnicity)),
                                        std::string(to_string(p.imd_band)),
                                        csv::format_double(p.follow_up_end),
                                        std::string(to_string(p.end_status))};
        for (bool flag : p.risk_factors) row.emplace_back(flag ? "1" : "0");
        csv::write_row(out, row);
    }
}

void write_events(std::ostream& out, const Cohort& cohort) {
    csv::write_row(out, {"patient_id", "condition_id", "onset_age"});
    for (const auto& p : cohort.patients) {
        for (const auto& e : p.events) {
            csv::write_row(out, {p.patient_id, cohort.catalog[e.condition].condition_id,
                                 csv::format_double(e.onset_age)});
        }
    }
}

void write_cohort(const std::filesystem::path& dir, const Cohort& cohort) {
    std::filesystem::create_directories(dir);
    const auto emit = [&](const char* name, auto&& writer) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error(ErrorCategory::io, "cannot write '" + (dir / name).string() + "'");
        writer(out);
    };
    emit("catalog.csv", [&](std::ostream& o) { write_catalog(o, cohort.catalog); });
    emit("patients.csv", [&](std::ostream& o) { write_patients(o, cohort); });
    emit("events.csv", [&](std::ostream& o) { write_events(o, cohort); });
}

double incidence_rate(double case_count, double person_years) {
    if (!(person_years > 0.0)) {
        throw Error(ErrorCategory::invalid_argument, "person_years must be positive");
    }
    if (case_count < 0.0) {
        throw Error(ErrorCategory::invalid_argument, "case_count must be non-negative");
    }
    return case_count / person_years * 100000.0;
}

LtcCountDistribution ltc_count_distribution(const Cohort& cohort) {
    LtcCountDistribution out;
    const auto index = cohort.catalog.index_condition();
    out.histogram.assign(cohort.catalog.size(), 0);
    std::vector<double> counts;
    counts.reserve(cohort.size());
    for (const auto& p : cohort.patients) {
        std::size_t c = 0;
        for (const auto& e : p.events) c += e.condition != index ? 1 : 0;
        out.per_patient.push_back(c);
        ++out.histogram[std::min(c, out.histogram.size() - 1)];
        counts.push_back(static_cast<double>(c));
    }
    if (!counts.empty()) {
        const auto s = summarize(counts);
        out.median = s.median;
        out.q1 = s.q1;
        out.q3 = s.q3;
    }
    return out;
}

} // namespace trajclust
