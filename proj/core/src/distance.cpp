#include "trajclust/distance.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "trajclust/error.hpp"
#include "trajclust/parallel.hpp"

namespace trajclust {

namespace {

// Pooled censored Jaccard on raw onset rows. Absent conditions are +inf, so
// max(0, w - onset) is 0 for them without branching.
inline double pair_distance(const double* a, double horizon_a, const double* b, double horizon_b,
                            std::size_t conditions, bool& empty_union) {
    const double w = std::min(horizon_a, horizon_b);
    double both = 0.0;
    double either = 0.0;
    for (std::size_t c = 0; c < conditions; ++c) {
        const double lo = std::min(a[c], b[c]);
        const double hi = std::max(a[c], b[c]);
        both += std::max(0.0, w - hi);
        either += std::max(0.0, w - lo);
    }
    if (either == 0.0) {
        empty_union = true;
        return 0.0;
    }
    empty_union = false;
    return 1.0 - both / either;
}

constexpr std::array<char, 4> kMagic = {'T', 'J', 'D', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<unsigned char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::uint64_t get_u64(const unsigned char* bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

} // namespace

StateTimeline timeline(const PatientRecord& patient, std::size_t condition_count,
                       std::size_t patient_index) {
    StateTimeline t;
    t.patient_index = patient_index;
    t.horizon = patient.follow_up_end;
    t.onsets.assign(condition_count, StateTimeline::kAbsent);
    for (const auto& e : patient.events) t.onsets.at(e.condition) = e.onset_age;
    return t;
}

std::vector<StateTimeline> timelines(const Cohort& cohort) {
    std::vector<StateTimeline> out;
    out.reserve(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        out.push_back(timeline(cohort.patients[i], cohort.catalog.size(), i));
    }
    return out;
}

double jaccard(const StateTimeline& a, const StateTimeline& b) {
    if (a.onsets.size() != b.onsets.size()) {
        throw Error(ErrorCategory::invalid_argument,
                    "timelines built over different catalogs (" +
                        std::to_string(a.onsets.size()) + " vs " +
                        std::to_string(b.onsets.size()) + " conditions)");
    }
    bool empty = false;
    return pair_distance(a.onsets.data(), a.horizon, b.onsets.data(), b.horizon,
                         a.onsets.size(), empty);
}

CondensedDistanceMatrix::CondensedDistanceMatrix(std::size_t n)
    : n_(n), values_(pair_count(n), 0.0) {}

CondensedDistanceMatrix::CondensedDistanceMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
    if (values_.size() != pair_count(n)) {
        throw Error(ErrorCategory::invalid_argument,
                    "condensed matrix for n=" + std::to_string(n) + " needs " +
                        std::to_string(pair_count(n)) + " values, got " +
                        std::to_string(values_.size()));
    }
}

CondensedDistanceMatrix condensed_matrix(std::span<const StateTimeline> timelines,
                                         unsigned workers, DistanceDiagnostics* diagnostics) {
    const std::size_t n = timelines.size();
    if (n < 2) {
        throw Error(ErrorCategory::invalid_argument,
                    "distance matrix needs at least 2 patients, got " + std::to_string(n));
    }
    const std::size_t conditions = timelines.front().onsets.size();
    std::vector<double> onsets(n * conditions);
    std::vector<double> horizons(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (timelines[i].onsets.size() != conditions) {
            throw Error(ErrorCategory::invalid_argument, "timelines built over different catalogs");
        }
        std::copy(timelines[i].onsets.begin(), timelines[i].onsets.end(),
                  onsets.begin() + static_cast<std::ptrdiff_t>(i * conditions));
        horizons[i] = timelines[i].horizon;
    }

    CondensedDistanceMatrix matrix(n);
    auto values = matrix.values();
    std::vector<std::uint64_t> empty_per_row(n, 0);
    parallel_for(n - 1, workers, [&](std::size_t i) {
        const double* a = onsets.data() + i * conditions;
        double* out = values.data() + CondensedDistanceMatrix::index(n, i, i + 1);
        std::uint64_t empty_count = 0;
        for (std::size_t j = i + 1; j < n; ++j) {
            bool empty = false;
            *out++ = pair_distance(a, horizons[i], onsets.data() + j * conditions, horizons[j],
                                   conditions, empty);
            empty_count += empty ? 1 : 0;
        }
        empty_per_row[i] = empty_count;
    });
    if (diagnostics) {
        diagnostics->empty_union_pairs = 0;
        for (auto c : empty_per_row) diagnostics->empty_union_pairs += c;
    }
    return matrix;
}

CondensedDistanceMatrix condensed_matrix(const Cohort& cohort, unsigned workers,
                                         DistanceDiagnostics* diagnostics) {
    const auto t = timelines(cohort);
    return condensed_matrix(t, workers, diagnostics);
}

void write_matrix_cache(std::ostream& out, const CondensedDistanceMatrix& matrix) {
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, matrix.size());
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<unsigned char> buffer;
    buffer.reserve(kChunk * 4);
    const auto values = matrix.values();
    for (std::size_t start = 0; start < values.size(); start += kChunk) {
        const std::size_t stop = std::min(values.size(), start + kChunk);
        buffer.clear();
        for (std::size_t k = start; k < stop; ++k) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[k]));
            for (int b = 0; b < 4; ++b) buffer.push_back(static_cast<unsigned char>(bits >> (8 * b)));
        }
        out.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size()));
    }
    if (!out) throw Error(ErrorCategory::io, "failed writing distance matrix cache");
}

void write_matrix_cache(const std::filesystem::path& path, const CondensedDistanceMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write '" + path.string() + "'");
    write_matrix_cache(out, matrix);
}

CondensedDistanceMatrix read_matrix_cache(std::istream& in) {
    std::array<char, 4> magic{};
    std::array<unsigned char, 8> header{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw Error(ErrorCategory::schema, "matrix cache: bad magic bytes (expected TJD1)");
    }
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (!in) throw Error(ErrorCategory::schema, "matrix cache: truncated header");
    const std::uint64_t n = get_u64(header.data());
    const std::size_t count = CondensedDistanceMatrix::pair_count(n);
    std::vector<double> values(count);
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<unsigned char> buffer(kChunk * 4);
    for (std::size_t start = 0; start < count; start += kChunk) {
        const std::size_t stop = std::min(count, start + kChunk);
        const auto bytes = static_cast<std::streamsize>((stop - start) * 4);
        in.read(reinterpret_cast<char*>(buffer.data()), bytes);
        if (in.gcount() != bytes) {
            throw Error(ErrorCategory::schema, "matrix cache: truncated payload for n=" +
                                                   std::to_string(n));
        }
        for (std::size_t k = start; k < stop; ++k) {
            const unsigned char* p = buffer.data() + (k - start) * 4;
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                                       static_cast<std::uint32_t>(p[1]) << 8 |
                                       static_cast<std::uint32_t>(p[2]) << 16 |
                                       static_cast<std::uint32_t>(p[3]) << 24;
            values[k] = static_cast<double>(std::bit_cast<float>(bits));
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorCategory::schema, "matrix cache: trailing bytes after payload");
    }
    return CondensedDistanceMatrix(static_cast<std::size_t>(n), std::move(values));
}

CondensedDistanceMatrix read_matrix_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");
    return read_matrix_cache(in);
}

} // namespace trajclust
