#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "radiomap/csv_io.hpp"
#include "radiomap/radio_map.hpp"
#include "radiomap/synthdata.hpp"
#include "support/oracles.hpp"

using namespace radiomap;
using namespace testsupport;

#ifndef RADIOMAP_CLI_BIN
#error "RADIOMAP_CLI_BIN must point at the command-line binary"
#endif

namespace {

const std::string kCli = RADIOMAP_CLI_BIN;

/// 90x90 m, two buildings, 300 links: small enough for fast end-to-end runs.
void write_tiny_spec(const std::string& path, double sigma_n, int n_links = 300,
                     std::uint64_t seed = 7) {
    std::ofstream out(path);
    out << R"({
  "area": {"origin_x": 0, "origin_y": 0, "spacing": 9, "nx": 10, "ny": 10, "h_max": 50},
  "classes": 1,
  "theta_true": [-22, -28, -36, -22],
  "buildings": [
    {"x_min": 18, "y_min": 18, "x_max": 36, "y_max": 45, "height_m": 30, "class": 1},
    {"x_min": 54, "y_min": 54, "x_max": 81, "y_max": 72, "height_m": 42, "class": 1}
  ],
  "sigma_n": )" << sigma_n
        << R"(,
  "sampling": {"n_users": 12, "n_links": )" << n_links
        << R"(, "altitude_min": 20, "altitude_max": 120},
  "seed": )" << seed
        << "\n}\n";
}

void write_tiny_fit_config(const std::string& path, const std::string& filter_mode = "cross") {
    std::ofstream out(path);
    out << R"({
  "grid": {"origin_x": 0, "origin_y": 0, "spacing": 9, "nx": 10, "ny": 10, "h_max": 50},
  "classes": 1,
  "filter": {"mode": ")" << filter_mode
        << R"("},
  "fit": {"max_outer_iters": 6, "z_grid_size": 65}
}
)";
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

}  // namespace

TEST_CASE("generate writes the dataset files and an accurate manifest") {
    TempDir dir;
    write_tiny_spec(dir.file("env.json"), 2.0);
    REQUIRE(run_cli(kCli, "generate --spec env.json --out data", dir.path) == 0);

    const std::string train = read_file(dir.file("data/train.csv"));
    const std::string test = read_file(dir.file("data/test.csv"));
    CHECK(first_line(train) == "xu,yu,zu,xd,yd,zd,rss_db");
    CHECK(first_line(test) == "xu,yu,zu,xd,yd,zd,rss_db");
    CHECK(count_lines(train) == 241);  // header + 80% of 300
    CHECK(count_lines(test) == 61);

    const std::string truth = read_file(dir.file("data/truth.obstacles.csv"));
    CHECK(first_line(truth) == "cell,h_1");
    CHECK(count_lines(truth) == 101);

    const std::string manifest = read_file(dir.file("data/manifest.json"));
    CHECK(manifest.find("\"seed\": 7") != std::string::npos);
    CHECK(manifest.find("-36") != std::string::npos);
    CHECK(manifest.find("\"n_train\": 240") != std::string::npos);
    CHECK(manifest.find("\"n_test\": 60") != std::string::npos);

    SUBCASE("--seed overrides the spec seed") {
        REQUIRE(run_cli(kCli, "--seed 99 generate --spec env.json --out data99", dir.path) == 0);
        const std::string m99 = read_file(dir.file("data99/manifest.json"));
        CHECK(m99.find("\"seed\": 99") != std::string::npos);
        CHECK(read_file(dir.file("data99/train.csv")) != train);
        // Same override twice reproduces byte-identical data.
        REQUIRE(run_cli(kCli, "--seed 99 generate --spec env.json --out data99b", dir.path) ==
                0);
        CHECK(read_file(dir.file("data99b/train.csv")) ==
              read_file(dir.file("data99/train.csv")));
    }
}

TEST_CASE("error paths use distinct exit codes") {
    TempDir dir;
    // Unknown subcommand / bad flags: usage errors, exit 1.
    CHECK(run_cli(kCli, "frobnicate", dir.path) == 1);
    CHECK(run_cli(kCli, "generate --out only", dir.path) == 1);
    // Missing input file: data error, exit 2.
    CHECK(run_cli(kCli, "generate --spec nothere.json --out data", dir.path) == 2);
    // Corrupt CSV: data error, exit 2.
    write_tiny_fit_config(dir.file("fit.json"));
    std::ofstream(dir.file("bad.csv")) << "xu,yu,zu,xd,yd,zd,rss_db\n1,2,3,4,5,6,oops\n";
    CHECK(run_cli(kCli, "fit --train bad.csv --config fit.json --out map.json", dir.path) == 2);
    // Unknown evaluation method: usage error, exit 1.
    write_tiny_spec(dir.file("env.json"), 0.0, 60);
    REQUIRE(run_cli(kCli, "generate --spec env.json --out d", dir.path) == 0);
    REQUIRE(run_cli(kCli, "fit --train d/train.csv --config fit.json --out map.json",
                    dir.path) == 0);
    CHECK(run_cli(kCli, "eval --map map.json --test d/test.csv --out r.csv --method bogus",
                  dir.path) == 1);
    CHECK(run_cli(kCli, "eval --map map.json --test d/test.csv --out r.csv --method truth",
                  dir.path) == 1);
}

TEST_CASE("the fit, predict, and eval pipeline runs end to end") {
    TempDir dir;
    write_tiny_spec(dir.file("env.json"), 0.0);
    write_tiny_fit_config(dir.file("fit.json"), "point");
    REQUIRE(run_cli(kCli, "generate --spec env.json --out data", dir.path) == 0);
    REQUIRE(run_cli(kCli, "fit --train data/train.csv --config fit.json --out map.json",
                    dir.path) == 0);
    CHECK(read_file(dir.file("cli_log.txt")).find("objective") != std::string::npos);

    SUBCASE("refitting with the same inputs is byte-identical") {
        const std::string map1 = read_file(dir.file("map.json"));
        const std::string obs1 = read_file(dir.file("map.obstacles.csv"));
        REQUIRE(run_cli(kCli, "fit --train data/train.csv --config fit.json --out map.json",
                        dir.path) == 0);
        CHECK(read_file(dir.file("map.json")) == map1);
        CHECK(read_file(dir.file("map.obstacles.csv")) == obs1);
    }

    SUBCASE("predict accepts both bare links and full measurement files") {
        REQUIRE(run_cli(kCli, "predict --map map.json --links data/test.csv --out pred7.csv",
                        dir.path) == 0);
        const std::string pred7 = read_file(dir.file("pred7.csv"));
        CHECK(first_line(pred7) == "xu,yu,zu,xd,yd,zd,gain_db");
        CHECK(count_lines(pred7) == 61);

        // Strip the rss column to make a 6-column link file.
        std::istringstream in(read_file(dir.file("data/test.csv")));
        std::ofstream links(dir.file("links.csv"));
        std::string line;
        while (std::getline(in, line)) {
            const std::size_t cut = line.rfind(',');
            links << line.substr(0, cut) << '\n';
        }
        links.close();
        REQUIRE(run_cli(kCli, "predict --map map.json --links links.csv --out pred6.csv",
                        dir.path) == 0);
        CHECK(read_file(dir.file("pred6.csv")) == pred7);
    }

    SUBCASE("eval reports every requested method") {
        REQUIRE(run_cli(kCli,
                        "eval --map map.json --test data/test.csv --out report.csv --method all",
                        dir.path) == 0);
        const std::string report = read_file(dir.file("report.csv"));
        CHECK(first_line(report) == "method,mae_db,n");
        CHECK(count_lines(report) == 5);
        CHECK(report.find("proposed,") != std::string::npos);
        CHECK(report.find("knn,") != std::string::npos);
        CHECK(report.find("kriging,") != std::string::npos);
        CHECK(report.find("statistical,") != std::string::npos);
    }

    SUBCASE("a noiseless fit reproduces its own training data almost exactly") {
        REQUIRE(run_cli(kCli,
                        "eval --map map.json --test data/train.csv --out self.csv "
                        "--method proposed",
                        dir.path) == 0);
        std::istringstream in(read_file(dir.file("self.csv")));
        std::string header, row;
        REQUIRE(std::getline(in, header));
        REQUIRE(std::getline(in, row));
        std::istringstream cells(row);
        std::string method, mae;
        std::getline(cells, method, ',');
        std::getline(cells, mae, ',');
        CHECK(method == "proposed");
        CHECK(std::stod(mae) < 0.1);
    }
}

TEST_CASE("slice output is a full raster in row-major cell order") {
    TempDir dir;
    // Hand-build an obstacle-free map so the slice must be radially symmetric
    // around the user.
    GridSpec grid;
    grid.spacing = 9.0;
    grid.nx = 11;
    grid.ny = 11;
    grid.h_max = 50.0;
    PathLossParams theta;
    theta.values = {-22.0, -28.0, -36.0, -22.0};
    RadioMap map{theta, ObstacleMap(grid, 1), SoftFilter::point(), Variogram{},
                 ResidualStore{}, 64};
    save_radio_map(map, dir.file("flat.json"));

    REQUIRE(run_cli(kCli, "slice --map flat.json --user 49.5,49.5,1.5 --altitude 60 "
                          "--out slice.csv",
                    dir.path) == 0);
    const std::string slice = read_file(dir.file("slice.csv"));
    CHECK(first_line(slice) == "x,y,gain_db");
    CHECK(count_lines(slice) == 122);

    std::istringstream in(slice);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, ys, gains;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string a, b, c;
        std::getline(cells, a, ',');
        std::getline(cells, b, ',');
        std::getline(cells, c, ',');
        xs.push_back(std::stod(a));
        ys.push_back(std::stod(b));
        gains.push_back(std::stod(c));
    }
    // Row-major: x varies fastest, starting at the first cell center.
    CHECK(xs[0] == 4.5);
    CHECK(ys[0] == 4.5);
    CHECK(xs[1] == 13.5);
    CHECK(ys[1] == 4.5);
    CHECK(ys[11] == 13.5);
    // The user sits at the center cell; mirror cells must agree exactly.
    auto at = [&](int ix, int iy) { return gains[static_cast<std::size_t>(iy) * 11 + ix]; };
    for (int iy = 0; iy < 11; ++iy)
        for (int ix = 0; ix < 11; ++ix) {
            CHECK(at(ix, iy) == doctest::Approx(at(10 - ix, iy)).epsilon(1e-9));
            CHECK(at(ix, iy) == doctest::Approx(at(ix, 10 - iy)).epsilon(1e-9));
            CHECK(at(ix, iy) == doctest::Approx(at(iy, ix)).epsilon(1e-9));
        }

    SUBCASE("altitudes above the modeled ceiling still render, with a warning") {
        REQUIRE(run_cli(kCli, "slice --map flat.json --user 49.5,49.5,1.5 --altitude 500 "
                              "--out high.csv",
                        dir.path) == 0);
        CHECK(read_file(dir.file("cli_log.txt")).find("warning") != std::string::npos);
        CHECK(first_line(read_file(dir.file("high.csv"))) == "x,y,gain_db");
    }
}

TEST_CASE("a slice of the refit map tracks a slice of the truth map") {
    TempDir dir;

    // Reference map straight from the generating parameters.
    EnvironmentSpec spec;
    spec.grid.spacing = 9.0;
    spec.grid.nx = 10;
    spec.grid.ny = 10;
    spec.grid.h_max = 50.0;
    spec.classes = 1;
    spec.theta_true.values = {-22.0, -28.0, -36.0, -22.0};
    spec.buildings = {{18.0, 18.0, 36.0, 45.0, 30.0, 1}, {54.0, 54.0, 81.0, 72.0, 42.0, 1}};
    RadioMap truth_map{spec.theta_true, rasterize_truth(spec), SoftFilter::point(),
                       Variogram{},     ResidualStore{},       64};
    save_radio_map(truth_map, dir.file("truth.json"));

    // Noiseless training data that covers, among others, every link the
    // slice below will query, so the round trip is fully determined.
    const Vec3 slice_user{40.0, 40.0, 1.5};
    Dataset train;
    for (int iy = 0; iy < 10; ++iy)
        for (int ix = 0; ix < 10; ++ix) {
            const Link link{slice_user,
                            {spec.grid.cell_center_x(ix), spec.grid.cell_center_y(iy), 60.0}};
            train.records.push_back({link, truth_map.deterministic(link)});
        }
    Rng rng(77);
    for (int u = 0; u < 8; ++u) {
        const Vec3 user{rng.uniform(2.0, 88.0), rng.uniform(2.0, 88.0), 1.5};
        for (int i = 0; i < 40; ++i) {
            const Link link{user,
                            {rng.uniform(0.0, 90.0), rng.uniform(0.0, 90.0),
                             rng.uniform(10.0, 100.0)}};
            train.records.push_back({link, truth_map.deterministic(link)});
        }
    }
    write_measurements_csv(dir.file("train.csv"), train);

    write_tiny_fit_config(dir.file("fit.json"), "point");
    REQUIRE(run_cli(kCli, "fit --train train.csv --config fit.json --out map.json", dir.path) ==
            0);
    REQUIRE(run_cli(kCli, "slice --map truth.json --user 40,40,1.5 --altitude 60 "
                          "--out truth_slice.csv",
                    dir.path) == 0);
    REQUIRE(run_cli(kCli, "slice --map map.json --user 40,40,1.5 --altitude 60 "
                          "--out fit_slice.csv",
                    dir.path) == 0);

    auto read_gains = [](const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        std::vector<double> gains;
        while (std::getline(in, line))
            gains.push_back(std::stod(line.substr(line.rfind(',') + 1)));
        return gains;
    };
    const std::vector<double> want = read_gains(read_file(dir.file("truth_slice.csv")));
    const std::vector<double> got = read_gains(read_file(dir.file("fit_slice.csv")));
    REQUIRE(want.size() == 100);
    REQUIRE(got.size() == 100);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
        max_diff = std::max(max_diff, std::abs(want[i] - got[i]));
    CHECK(max_diff < 0.5);
}

TEST_CASE("relay reports one row per planning method") {
    TempDir dir;
    write_tiny_spec(dir.file("env.json"), 2.0, 420);
    write_tiny_fit_config(dir.file("fit.json"));
    REQUIRE(run_cli(kCli, "generate --spec env.json --out data", dir.path) == 0);
    REQUIRE(run_cli(kCli,
                    "relay --env env.json --train data/train.csv --config fit.json "
                    "--out relay.csv --methods truth,knn --pairs 3 "
                    "--lattice-nx 4 --lattice-ny 4 --lattice-levels 2",
                    dir.path) == 0);
    const std::string report = read_file(dir.file("relay.csv"));
    CHECK(first_line(report) == "method,mean_capacity_bps,n_pairs");
    CHECK(count_lines(report) == 3);
    CHECK(report.find("truth,") != std::string::npos);
    CHECK(report.find("knn,") != std::string::npos);
}
