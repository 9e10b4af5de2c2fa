#include <benchmark/benchmark.h>

#include "radiomap/obstacle.hpp"
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

}  // namespace

static void BM_soft_likelihood(benchmark::State& state) {
    const GridSpec grid = bench_grid();
    ObstacleMap map(grid, 1);
    Rng rng(99);
    for (int cell = 0; cell < grid.cell_count(); ++cell)
        map.set_height(cell, 1, rng.uniform(0.0, 50.0));
    const SoftFilter filter = make_filter(4.5, 4.5, FilterMode::cross);
    std::vector<Link> links(64);
    for (Link& l : links) {
        l.user = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), 1.5};
        l.aerial = {rng.uniform(0.0, 153.0), rng.uniform(0.0, 153.0), rng.uniform(20.0, 120.0)};
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(soft_likelihood(links[i % links.size()], map, filter, grid));
        ++i;
    }
}
BENCHMARK(BM_soft_likelihood);
