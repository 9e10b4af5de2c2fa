#include <benchmark/benchmark.h>

#include "radiomap/kriging.hpp"
#include "radiomap/rng.hpp"

using namespace radiomap;

static void BM_krige_query(benchmark::State& state) {
    Rng rng(7);
    std::vector<ResidualRecord> records;
    for (int i = 0; i < 1000; ++i) {
        Link l;
        l.user = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), 1.5};
        l.aerial = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), rng.uniform(20.0, 120.0)};
        records.push_back({l, 3.0 * rng.normal()});
    }
    const ResidualStore store(std::move(records));
    Variogram vario{9.0, 40.0, 1.0};
    const int neighbors = static_cast<int>(state.range(0));
    std::vector<Link> queries(64);
    for (Link& l : queries) {
        l.user = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), 1.5};
        l.aerial = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), rng.uniform(20.0, 120.0)};
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(krige(store, vario, queries[i % queries.size()], neighbors));
        ++i;
    }
}
BENCHMARK(BM_krige_query)->Arg(16)->Arg(64);
