#include "trajclust/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "trajclust/error.hpp"
#include "trajclust/rng.hpp"

namespace trajclust {

namespace {

[[noreturn]] void bad_spec(const std::string& message) {
    throw Error(ErrorCategory::config, "archetype spec: " + message);
}

void check_probability(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) bad_spec(what + " must be a probability in [0,1]");
}

template <std::size_t N>
void check_distribution(const std::array<double, N>& probs, const std::string& what) {
    double total = 0.0;
    for (double p : probs) {
        check_probability(p, what);
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) bad_spec(what + " probabilities must sum to 1");
}

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    for (int attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
        const double x = rng.normal(mean, sd);
        if (x >= lo && x <= hi) return x;
    }
    return std::clamp(mean, lo, hi);
}

template <std::size_t N>
std::array<double, N> read_levels(const nlohmann::json& j, const std::array<double, N>& fallback,
                                  const std::array<std::string_view, N>& names,
                                  const std::string& what) {
    if (!j.is_object()) return fallback;
    std::array<double, N> out{};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto pos = std::find(names.begin(), names.end(), it.key());
        if (pos == names.end()) bad_spec("unknown " + what + " level '" + it.key() + "'");
        out[static_cast<std::size_t>(pos - names.begin())] = it.value().get<double>();
    }
    return out;
}

template <std::size_t N>
nlohmann::json write_levels(const std::array<double, N>& values,
                            const std::array<std::string_view, N>& names) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < N; ++i) j[std::string(names[i])] = values[i];
    return j;
}

constexpr std::array<std::string_view, 2> kGenderNames = {"female", "male"};
constexpr std::array<std::string_view, kEthnicityCount> kEthnicityNames = {
    "White", "Asian", "Black", "Mixed", "Other/Unknown"};
constexpr std::array<std::string_view, kImdBandCount> kImdNames = {"most_deprived",
                                                                   "less_deprived", "missing"};
constexpr std::array<std::string_view, kRiskFactorCount> kRiskNames = {
    "smoking_ever", "substance_dependency", "alcohol",
    "chronic_pain", "hypercholesterolaemia", "morbid_obesity"};

} // namespace

void validate_spec(const ArchetypeSpec& spec, const LtcCatalog& catalog) {
    if (spec.archetypes.empty()) bad_spec("no archetypes");
    double total = 0.0;
    for (const auto& a : spec.archetypes) {
        const std::string where = "archetype '" + a.name + "': ";
        if (!(a.weight >= 0.0)) bad_spec(where + "weight must be >= 0");
        total += a.weight;
        if (!(a.follow_up_sd > 0.0)) bad_spec(where + "follow-up sd must be > 0");
        if (!std::isfinite(a.follow_up_mean)) bad_spec(where + "follow-up mean must be finite");
        check_probability(a.death_probability, where + "death_probability");
        check_distribution(a.gender, where + "gender");
        check_distribution(a.ethnicity, where + "ethnicity");
        check_distribution(a.imd_band, where + "imd_band");
        for (double p : a.risk_factors) check_probability(p, where + "risk factor");
        for (const auto& [id, d] : a.conditions) {
            if (!catalog.find(id)) bad_spec(where + "unknown condition '" + id + "'");
            check_probability(d.probability, where + id);
            if (!(d.sd > 0.0)) bad_spec(where + id + " onset sd must be > 0");
            if (!std::isfinite(d.mean)) bad_spec(where + id + " onset mean must be finite");
        }
        const auto& index_id = catalog[catalog.index_condition()].condition_id;
        if (!a.conditions.contains(index_id)) {
            bad_spec(where + "missing onset distribution for index condition '" + index_id + "'");
        }
    }
    if (std::abs(total - 1.0) > 1e-6) bad_spec("archetype weights must sum to 1");
}

ArchetypeSpec parse_archetype_spec(const nlohmann::json& j) {
    try {
        ArchetypeSpec spec;
        for (const auto& a : j.at("archetypes")) {
            Archetype arch;
            arch.name = a.at("name").get<std::string>();
            arch.weight = a.at("weight").get<double>();
            if (a.contains("follow_up")) {
                arch.follow_up_mean = a["follow_up"].at("mean").get<double>();
                arch.follow_up_sd = a["follow_up"].at("sd").get<double>();
            }
            arch.death_probability = a.value("death_probability", 0.0);
            for (auto it = a.at("conditions").begin(); it != a.at("conditions").end(); ++it) {
                const auto& c = it.value();
                arch.conditions[it.key()] = {c.at("p").get<double>(), c.at("mean").get<double>(),
                                             c.at("sd").get<double>()};
            }
            arch.gender = read_levels(a.value("gender", nlohmann::json()), arch.gender,
                                      kGenderNames, "gender");
            arch.ethnicity = read_levels(a.value("ethnicity", nlohmann::json()), arch.ethnicity,
                                         kEthnicityNames, "ethnicity");
            arch.imd_band = read_levels(a.value("imd_band", nlohmann::json()), arch.imd_band,
                                        kImdNames, "imd_band");
            if (a.contains("risk_factors")) {
                // unspecified risk factors default to 0 once the block is present
                std::array<double, kRiskFactorCount> zero{};
                arch.risk_factors = read_levels(a["risk_factors"], zero, kRiskNames, "risk factor");
            }
            spec.archetypes.push_back(std::move(arch));
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        bad_spec(e.what());
    }
}

ArchetypeSpec read_archetype_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::config, path.string() + ": " + e.what());
    }
    return parse_archetype_spec(j);
}

nlohmann::json to_json(const ArchetypeSpec& spec) {
    nlohmann::json out;
    out["archetypes"] = nlohmann::json::array();
    for (const auto& a : spec.archetypes) {
        nlohmann::json j;
        j["name"] = a.name;
        j["weight"] = a.weight;
        j["follow_up"] = {{"mean", a.follow_up_mean}, {"sd", a.follow_up_sd}};
        j["death_probability"] = a.death_probability;
        j["conditions"] = nlohmann::json::object();
        for (const auto& [id, d] : a.conditions) {
            j["conditions"][id] = {{"p", d.probability}, {"mean", d.mean}, {"sd", d.sd}};
        }
        j["gender"] = write_levels(a.gender, kGenderNames);
        j["ethnicity"] = write_levels(a.ethnicity, kEthnicityNames);
        j["imd_band"] = write_levels(a.imd_band, kImdNames);
        j["risk_factors"] = write_levels(a.risk_factors, kRiskNames);
        out["archetypes"].push_back(std::move(j));
    }
    return out;
}

LabeledCohort generate(const ArchetypeSpec& spec, const LtcCatalog& catalog, std::size_t n,
                       std::uint64_t seed) {
    validate_spec(spec, catalog);
    if (n < 1) throw Error(ErrorCategory::invalid_argument, "synthetic cohort needs n >= 1");

    // resolve condition ids once; catalog order fixes the draw order
    struct Resolved {
        std::vector<std::optional<OnsetDistribution>> by_condition;
    };
    std::vector<Resolved> resolved(spec.archetypes.size());
    std::vector<double> weights;
    for (std::size_t a = 0; a < spec.archetypes.size(); ++a) {
        resolved[a].by_condition.assign(catalog.size(), std::nullopt);
        for (const auto& [id, d] : spec.archetypes[a].conditions) {
            resolved[a].by_condition[*catalog.find(id)] = d;
        }
        weights.push_back(spec.archetypes[a].weight);
    }

    const std::size_t width = std::max<std::size_t>(6, std::to_string(n).size());
    LabeledCohort out;
    out.cohort.catalog = catalog;
    out.cohort.patients.reserve(n);
    out.truth.reserve(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = rng.categorical(weights);
        const auto& arch = spec.archetypes[a];
        PatientRecord p;
        const std::string digits = std::to_string(i + 1);
        p.patient_id = "P" + std::string(width - digits.size(), '0') + digits;
        p.follow_up_end = truncated_normal(rng, arch.follow_up_mean, arch.follow_up_sd,
                                           kMinFollowUp, kMaxFollowUp);
        p.end_status = rng.bernoulli(arch.death_probability) ? EndStatus::died : EndStatus::censored;
        p.gender = static_cast<Gender>(rng.categorical(arch.gender));
        p.ethnicity = static_cast<Ethnicity>(rng.categorical(arch.ethnicity));
        p.imd_band = static_cast<ImdBand>(rng.categorical(arch.imd_band));
        for (std::size_t r = 0; r < kRiskFactorCount; ++r) {
            p.risk_factors[r] = rng.bernoulli(arch.risk_factors[r]);
        }
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            const auto& d = resolved[a].by_condition[c];
            if (!d) continue;
            const bool forced = c == catalog.index_condition();
            const bool present = rng.bernoulli(d->probability);
            if (!forced && !present) continue;
            p.events.push_back(
                {c, truncated_normal(rng, d->mean, d->sd, 0.0, p.follow_up_end)});
        }
        out.cohort.patients.push_back(std::move(p));
        out.truth.push_back(a);
    }
    validate_cohort(out.cohort);
    return out;
}

void write_truth_csv(std::ostream& out, const LabeledCohort& labeled, const ArchetypeSpec& spec) {
    csv::write_row(out, {"patient_id", "archetype"});
    for (std::size_t i = 0; i < labeled.truth.size(); ++i) {
        csv::write_row(out, {labeled.cohort.patients[i].patient_id,
                             spec.archetypes.at(labeled.truth[i]).name});
    }
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCategory::invalid_argument, "labelings differ in length");
    }
    const auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> rows;
    std::map<std::size_t, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0;
    for (const auto& [key, m] : joint) index += pairs(m);
    double sum_a = 0.0;
    for (const auto& [key, m] : rows) sum_a += pairs(m);
    double sum_b = 0.0;
    for (const auto& [key, m] : cols) sum_b += pairs(m);
    const double total = pairs(static_cast<double>(a.size()));
    if (total == 0.0) return 1.0;
    const double expected = sum_a * sum_b / total;
    const double maximum = (sum_a + sum_b) / 2.0;
    if (maximum == expected) return 1.0; // both labelings trivial and identical in structure
    return (index - expected) / (maximum - expected);
}

} // namespace trajclust
