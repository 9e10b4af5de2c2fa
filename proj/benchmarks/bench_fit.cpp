#include <benchmark/benchmark.h>

#include "radiomap/estimator.hpp"
#include "radiomap/synthdata.hpp"

using namespace radiomap;

static void BM_fit_small_map(benchmark::State& state) {
    EnvironmentSpec spec;
    spec.grid.spacing = 15.0;
    spec.grid.nx = 6;
    spec.grid.ny = 6;
    spec.grid.h_max = 50.0;
    spec.classes = 1;
    spec.theta_true.values = {-22.0, -28.0, -36.0, -22.0};
    spec.buildings = {{15.0, 15.0, 45.0, 45.0, 30.0, 1}, {60.0, 45.0, 85.0, 80.0, 40.0, 1}};
    spec.sigma_n = 2.0;
    spec.sampling.n_users = 10;
    spec.sampling.n_links = 250;
    spec.seed = 5;
    const SyntheticData synth = generate_synthetic(spec);

    FitConfig cfg;
    cfg.classes = 1;
    cfg.max_outer_iters = 4;
    cfg.z_grid_size = 65;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(synth.train, spec.grid, SoftFilter::point(), cfg));
    }
}
BENCHMARK(BM_fit_small_map)->Unit(benchmark::kMillisecond);
