#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "radiomap/csv_io.hpp"
#include "radiomap/radio_map.hpp"
#include "radiomap/synthdata.hpp"
#include "support/oracles.hpp"

using namespace radiomap;
using namespace testsupport;

TEST_CASE("doubles are printed in their shortest exact form") {
    for (double v : {0.1, 1.0 / 3.0, 1e300, -0.0, 0.0, -72.5, 1e-9, 123456789.123}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("measurement files round-trip bit for bit") {
    TempDir dir;
    Dataset data;
    Rng rng(61);
    for (int i = 0; i < 25; ++i) {
        Link link;
        link.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), rng.uniform(0.0, 3.0)};
        link.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), rng.uniform(20.0, 120.0)};
        data.records.push_back({link, -70.0 + 10.0 * rng.normal()});
    }
    const std::string path = dir.file("links.csv");
    write_measurements_csv(path, data);
    const Dataset back = read_measurements_csv(path);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.records[i].rss == data.records[i].rss);
        CHECK(back.records[i].link.user.x == data.records[i].link.user.x);
        CHECK(back.records[i].link.user.y == data.records[i].link.user.y);
        CHECK(back.records[i].link.user.z == data.records[i].link.user.z);
        CHECK(back.records[i].link.aerial.x == data.records[i].link.aerial.x);
        CHECK(back.records[i].link.aerial.y == data.records[i].link.aerial.y);
        CHECK(back.records[i].link.aerial.z == data.records[i].link.aerial.z);
    }
}

TEST_CASE("malformed measurement files carry path and line in the error") {
    TempDir dir;
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_measurements_csv(dir.file("absent.csv")), DataError);
    }
    SUBCASE("wrong header") {
        const std::string path = dir.file("badheader.csv");
        std::ofstream(path) << "a,b,c\n";
        CHECK_THROWS_WITH_AS(read_measurements_csv(path),
                             doctest::Contains("badheader.csv:1"), DataError);
    }
    SUBCASE("non-numeric fields") {
        const std::string path = dir.file("badnum.csv");
        std::ofstream(path) << "xu,yu,zu,xd,yd,zd,rss_db\n1,2,3,4,5,6,-70\n1,2,oops,4,5,6,-70\n";
        CHECK_THROWS_WITH_AS(read_measurements_csv(path), doctest::Contains("badnum.csv:3"),
                             DataError);
    }
    SUBCASE("wrong column count") {
        const std::string path = dir.file("badcols.csv");
        std::ofstream(path) << "xu,yu,zu,xd,yd,zd,rss_db\n1,2,3,4,5\n";
        CHECK_THROWS_WITH_AS(read_measurements_csv(path), doctest::Contains("badcols.csv:2"),
                             DataError);
    }
}

TEST_CASE("obstacle files round-trip and reject inconsistent shapes") {
    TempDir dir;
    GridSpec grid;
    grid.spacing = 10.0;
    grid.nx = 3;
    grid.ny = 2;
    grid.h_max = 50.0;
    ObstacleMap map(grid, 2);
    Rng rng(62);
    for (int cell = 0; cell < 6; ++cell) {
        const double h1 = rng.uniform(0.0, 50.0);
        map.set_height(cell, 1, h1);
        map.set_height(cell, 2, rng.uniform(0.0, h1));
    }
    const std::string path = dir.file("obstacles.csv");
    write_obstacles_csv(path, map);
    const std::vector<double> heights = read_obstacles_csv(path, 6, 2);
    REQUIRE(heights.size() == 12);
    for (int cell = 0; cell < 6; ++cell) {
        CHECK(heights[static_cast<std::size_t>(cell) * 2 + 0] == map.height(cell, 1));
        CHECK(heights[static_cast<std::size_t>(cell) * 2 + 1] == map.height(cell, 2));
    }
    SUBCASE("row count must match the grid") {
        CHECK_THROWS_AS(read_obstacles_csv(path, 7, 2), DataError);
    }
    SUBCASE("class count must match the header") {
        CHECK_THROWS_AS(read_obstacles_csv(path, 6, 3), DataError);
    }
    SUBCASE("cell indices must be sequential") {
        const std::string bad = dir.file("badcell.csv");
        std::ofstream(bad) << "cell,h_1\n0,5\n2,5\n";
        CHECK_THROWS_WITH_AS(read_obstacles_csv(bad, 2, 1), doctest::Contains("badcell.csv:3"),
                             DataError);
    }
}

TEST_CASE("residual files round-trip bit for bit") {
    TempDir dir;
    std::vector<ResidualRecord> records;
    Rng rng(63);
    for (int i = 0; i < 12; ++i) {
        ResidualRecord r;
        r.link.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
        r.link.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), rng.uniform(20.0, 120.0)};
        r.value = 3.0 * rng.normal();
        records.push_back(r);
    }
    const std::string path = dir.file("residuals.csv");
    write_residuals_csv(path, records);
    const std::vector<ResidualRecord> back = read_residuals_csv(path);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].value == records[i].value);
        CHECK(back[i].link.aerial.z == records[i].link.aerial.z);
    }
}

TEST_CASE("a fitted map survives a save/load cycle unchanged") {
    EnvironmentSpec spec = desk_env(64, 400, 2.0);
    const SyntheticData synth = generate_synthetic(spec);
    FitConfig fit_cfg;
    fit_cfg.classes = 1;
    KrigeConfig krige_cfg;
    const FittedBundle bundle =
        fit_radio_map(synth.train, spec.grid, make_filter(4.5, 4.5, FilterMode::cross), fit_cfg, krige_cfg);

    TempDir dir;
    const std::string path = dir.file("map.json");
    save_radio_map(bundle.map, path);
    const RadioMap loaded = load_radio_map(path);

    CHECK(loaded.theta.values == bundle.map.theta.values);
    CHECK(loaded.obstacles.raw() == bundle.map.obstacles.raw());
    CHECK(loaded.variogram.alpha_s == bundle.map.variogram.alpha_s);
    CHECK(loaded.variogram.alpha_r == bundle.map.variogram.alpha_r);
    CHECK(loaded.variogram.sigma_n2 == bundle.map.variogram.sigma_n2);
    CHECK(loaded.krige_neighbors == bundle.map.krige_neighbors);
    REQUIRE(loaded.residuals.size() == bundle.map.residuals.size());

    Rng rng(65);
    for (int trial = 0; trial < 20; ++trial) {
        Link q;
        q.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
        q.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), rng.uniform(20.0, 120.0)};
        CHECK(loaded.full_gain(q) == bundle.map.full_gain(q));
    }
}

TEST_CASE("tiny datasets produce a map without a residual model") {
    EnvironmentSpec spec = desk_env(66, 11, 0.0);
    const SyntheticData synth = generate_synthetic(spec);
    REQUIRE(synth.train.size() < 10);
    FitConfig fit_cfg;
    fit_cfg.classes = 1;
    const FittedBundle bundle = fit_radio_map(synth.train, spec.grid, SoftFilter::point(),
                                              fit_cfg, KrigeConfig{});
    CHECK(!bundle.map.has_residual_model());
    TempDir dir;
    const std::string path = dir.file("bare.json");
    save_radio_map(bundle.map, path);
    const RadioMap loaded = load_radio_map(path);
    CHECK(!loaded.has_residual_model());
    const Link q{{10.0, 10.0, 1.5}, {100.0, 100.0, 60.0}};
    CHECK(loaded.full_gain(q) == bundle.map.full_gain(q));
    CHECK(loaded.shadowing(q) == 0.0);
}

TEST_CASE("corrupted bundles are rejected with a data error") {
    EnvironmentSpec spec = desk_env(67, 100, 1.0);
    const SyntheticData synth = generate_synthetic(spec);
    FitConfig fit_cfg;
    fit_cfg.classes = 1;
    const FittedBundle bundle = fit_radio_map(synth.train, spec.grid, SoftFilter::point(),
                                              fit_cfg, KrigeConfig{});
    SUBCASE("negative obstacle height") {
        TempDir dir;
        const std::string path = dir.file("map.json");
        save_radio_map(bundle.map, path);
        // Rewrite the obstacle sidecar with a negative height.
        std::ofstream(dir.file("map.obstacles.csv")) << "cell,h_1\n0,-3\n";
        CHECK_THROWS_AS(load_radio_map(path), DataError);
    }
    SUBCASE("class rows out of order") {
        GridSpec grid;
        grid.spacing = 10.0;
        grid.nx = 1;
        grid.ny = 1;
        grid.h_max = 50.0;
        RadioMap map = bundle.map;
        map.obstacles = ObstacleMap(grid, 2);
        map.theta.values = {-22.0, -28.0, -30.0, -24.0, -36.0, -22.0};
        TempDir dir;
        const std::string path = dir.file("two.json");
        save_radio_map(map, path);
        std::ofstream(dir.file("two.obstacles.csv")) << "cell,h_1,h_2\n0,5,9\n";
        CHECK_THROWS_AS(load_radio_map(path), DataError);
    }
    SUBCASE("truncated JSON") {
        TempDir dir;
        const std::string path = dir.file("broken.json");
        std::ofstream(path) << "{\"theta\": [1, 2,";
        CHECK_THROWS_AS(load_radio_map(path), DataError);
    }
}

TEST_CASE("a supplied noise variance overrides the variogram nugget") {
    EnvironmentSpec spec = desk_env(68, 400, 3.0);
    const SyntheticData synth = generate_synthetic(spec);
    FitConfig fit_cfg;
    fit_cfg.classes = 1;
    KrigeConfig krige_cfg;
    krige_cfg.sigma_n2_override = 9.0;
    const FittedBundle bundle =
        fit_radio_map(synth.train, spec.grid, make_filter(4.5, 4.5, FilterMode::cross), fit_cfg, krige_cfg);
    CHECK(bundle.map.variogram.sigma_n2 == 9.0);
}
