// Throughput of the three hot loops: pairwise distances, Ward linkage and
// the point-biserial scan, on cohorts drawn from the bundled archetype spec.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>

#include "trajclust/distance.hpp"
#include "trajclust/hierarchy.hpp"
#include "trajclust/selection.hpp"
#include "trajclust/synth.hpp"

namespace {

using namespace trajclust;

const Cohort& cohort(std::size_t n) {
    static std::map<std::size_t, Cohort> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        const std::filesystem::path data(TRAJCLUST_BENCH_DATA_DIR);
        const auto catalog = read_catalog(data / "catalog.csv");
        const auto spec = read_archetype_spec(data / "paper_like_spec.json");
        it = cache.emplace(n, generate(spec, catalog, n, 11).cohort).first;
    }
    return it->second;
}

const CondensedDistanceMatrix& matrix(std::size_t n) {
    static std::map<std::size_t, CondensedDistanceMatrix> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, condensed_matrix(cohort(n))).first;
    return it->second;
}

void BM_Jaccard(benchmark::State& state) {
    const auto tl = timelines(cohort(256));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(jaccard(tl[i % tl.size()], tl[(i * 7 + 3) % tl.size()]));
        ++i;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Jaccard);

void BM_CondensedMatrix(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto tl = timelines(cohort(n));
    const auto workers = static_cast<unsigned>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(condensed_matrix(tl, workers));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(CondensedDistanceMatrix::pair_count(n)));
}
BENCHMARK(BM_CondensedMatrix)
    ->Args({1000, 1})
    ->Args({2000, 1})
    ->Args({2000, 4})
    ->Unit(benchmark::kMillisecond);

void BM_WardLinkage(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto& m = matrix(n);
    for (auto _ : state) benchmark::DoNotOptimize(ward_linkage(m, WardVariant::ward_d2));
}
BENCHMARK(BM_WardLinkage)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PointBiserialScan(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto& m = matrix(n);
    const auto tree = ward_linkage(m, WardVariant::ward_d2);
    for (auto _ : state) benchmark::DoNotOptimize(scan(tree, m, 2, 20));
}
BENCHMARK(BM_PointBiserialScan)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
