#include <benchmark/benchmark.h>

#include "radiomap/geometry.hpp"
#include "radiomap/rng.hpp"

using namespace radiomap;

namespace {

GridSpec bench_grid() {
    GridSpec grid;
    grid.spacing = 9.0;
    grid.nx = 17;
    grid.ny = 17;
    grid.h_max = 50.0;
    return grid;
}

std::vector<Link> bench_links(int n) {
    Rng rng(1234);
    std::vector<Link> links(static_cast<std::size_t>(n));
    for (Link& l : links) {
        l.user = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), 1.5};
        l.aerial = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), rng.uniform(20.0, 120.0)};
    }
    return links;
}

}  // namespace

static void BM_trace_link(benchmark::State& state) {
    const GridSpec grid = bench_grid();
    const std::vector<Link> links = bench_links(256);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(trace_link(links[i % links.size()], grid));
        ++i;
    }
}
BENCHMARK(BM_trace_link);
