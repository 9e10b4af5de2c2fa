// Command-line front end: synthetic data generation, map fitting, prediction,
// evaluation, map slicing, and the relay placement benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radiomap/baselines.hpp"
#include "radiomap/csv_io.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/estimator.hpp"
#include "radiomap/log.hpp"
#include "radiomap/radio_map.hpp"
#include "radiomap/relay.hpp"
#include "radiomap/rng.hpp"
#include "radiomap/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace radiomap;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& message) : std::runtime_error(message) {}
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open for reading");
    try {
        json root;
        in >> root;
        return root;
    } catch (const json::parse_error& err) {
        throw DataError(path + ": invalid JSON: " + err.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw DataError(path + ": write failed");
}

double get_number(const json& node, const char* key, const std::string& path) {
    if (!node.contains(key) || !node[key].is_number())
        throw DataError(path + ": field \"" + key + "\" must be a number");
    return node[key].get<double>();
}

double get_number_or(const json& node, const char* key, double fallback,
                     const std::string& path) {
    if (!node.contains(key)) return fallback;
    if (!node[key].is_number())
        throw DataError(path + ": field \"" + key + "\" must be a number");
    return node[key].get<double>();
}

// Grid from {origin_x, origin_y, spacing, h_max} plus either {nx, ny} or
// {width, depth} (width/depth must be whole multiples of the spacing).
GridSpec parse_grid(const json& node, const std::string& path) {
    if (!node.is_object()) throw DataError(path + ": grid/area must be an object");
    GridSpec grid;
    grid.origin_x = get_number_or(node, "origin_x", 0.0, path);
    grid.origin_y = get_number_or(node, "origin_y", 0.0, path);
    grid.spacing = get_number(node, "spacing", path);
    grid.h_max = get_number(node, "h_max", path);
    if (node.contains("nx") || node.contains("ny")) {
        grid.nx = static_cast<int>(get_number(node, "nx", path));
        grid.ny = static_cast<int>(get_number(node, "ny", path));
    } else {
        const double width = get_number(node, "width", path);
        const double depth = get_number(node, "depth", path);
        if (!(grid.spacing > 0.0)) throw DataError(path + ": spacing must be positive");
        const double fx = width / grid.spacing;
        const double fy = depth / grid.spacing;
        grid.nx = static_cast<int>(std::llround(fx));
        grid.ny = static_cast<int>(std::llround(fy));
        if (std::abs(fx - grid.nx) > 1e-6 || std::abs(fy - grid.ny) > 1e-6)
            throw DataError(path + ": width/depth must be whole multiples of spacing");
    }
    try {
        grid.validate();
    } catch (const std::invalid_argument& err) {
        throw DataError(path + ": " + err.what());
    }
    return grid;
}

SoftFilter parse_filter(const json& node, const GridSpec& grid, const std::string& path) {
    if (!node.is_object()) throw DataError(path + ": filter must be an object");
    const std::string mode = node.value("mode", "point");
    if (mode == "point") return SoftFilter::point();
    if (mode != "cross")
        throw DataError(path + ": filter mode must be \"point\" or \"cross\"");
    const double delta = get_number_or(node, "delta", grid.spacing / 2.0, path);
    const double sigma_w = get_number_or(node, "sigma_w", delta, path);
    try {
        return make_filter(sigma_w, delta, FilterMode::cross);
    } catch (const std::invalid_argument& err) {
        throw DataError(path + ": " + err.what());
    }
}

std::vector<Building> parse_buildings(const json& array, const std::string& path) {
    if (!array.is_array()) throw DataError(path + ": buildings must be an array");
    std::vector<Building> out;
    for (const json& node : array) {
        if (!node.is_object()) throw DataError(path + ": each building must be an object");
        Building b;
        b.x_min = get_number(node, "x_min", path);
        b.y_min = get_number(node, "y_min", path);
        b.x_max = get_number(node, "x_max", path);
        b.y_max = get_number(node, "y_max", path);
        b.height = node.contains("height_m") ? get_number(node, "height_m", path)
                                             : get_number(node, "height", path);
        b.cls = static_cast<int>(get_number_or(node, "class", 1.0, path));
        out.push_back(b);
    }
    return out;
}

EnvironmentSpec parse_env_spec(const json& root, const std::string& path) {
    if (!root.is_object()) throw DataError(path + ": environment spec must be a JSON object");
    EnvironmentSpec spec;
    if (!root.contains("area")) throw DataError(path + ": missing \"area\"");
    spec.grid = parse_grid(root["area"], path);
    spec.classes = static_cast<int>(get_number_or(root, "classes", 1.0, path));

    if (root.contains("buildings")) {
        const std::vector<Building> inline_list = parse_buildings(root["buildings"], path);
        spec.buildings.insert(spec.buildings.end(), inline_list.begin(), inline_list.end());
    }
    if (root.contains("buildings_file")) {
        const std::string rel = root["buildings_file"].get<std::string>();
        const std::string file = (fs::path(path).parent_path() / rel).string();
        const std::vector<Building> from_file = parse_buildings(load_json(file), file);
        spec.buildings.insert(spec.buildings.end(), from_file.begin(), from_file.end());
    }

    if (!root.contains("theta_true") || !root["theta_true"].is_array())
        throw DataError(path + ": \"theta_true\" must be a numeric array");
    spec.theta_true.values = root["theta_true"].get<std::vector<double>>();

    spec.sigma_n = get_number_or(root, "sigma_n", 0.0, path);
    if (root.contains("shadowing")) {
        const json& sh = root["shadowing"];
        const std::string kind = sh.value("kind", "none");
        if (kind == "none") {
            spec.shadowing.kind = ShadowingKind::none;
        } else if (kind == "iid") {
            spec.shadowing.kind = ShadowingKind::iid;
            spec.shadowing.alpha_s = get_number(sh, "alpha_s", path);
        } else if (kind == "gp") {
            spec.shadowing.kind = ShadowingKind::gp;
            spec.shadowing.alpha_s = get_number(sh, "alpha_s", path);
            spec.shadowing.alpha_r = get_number(sh, "alpha_r", path);
        } else {
            throw DataError(path + ": shadowing kind must be none, iid, or gp");
        }
    }
    if (root.contains("truth_filter"))
        spec.truth_filter = parse_filter(root["truth_filter"], spec.grid, path);

    if (root.contains("sampling")) {
        const json& s = root["sampling"];
        spec.sampling.n_users = static_cast<int>(get_number_or(s, "n_users", 20.0, path));
        spec.sampling.n_links = static_cast<int>(get_number_or(s, "n_links", 1000.0, path));
        spec.sampling.altitude_min = get_number_or(s, "altitude_min", 20.0, path);
        spec.sampling.altitude_max = get_number_or(s, "altitude_max", 120.0, path);
        spec.sampling.user_altitude = get_number_or(s, "user_altitude", 1.5, path);
        spec.sampling.train_fraction = get_number_or(s, "train_fraction", 0.8, path);
    }
    spec.seed = static_cast<std::uint64_t>(get_number_or(root, "seed", 0.0, path));
    try {
        spec.validate();
    } catch (const std::invalid_argument& err) {
        throw DataError(path + ": " + err.what());
    }
    return spec;
}

struct FitSettings {
    GridSpec grid;
    SoftFilter filter = SoftFilter::point();
    FitConfig fit;
    KrigeConfig krige;
};

FitSettings parse_fit_config(const json& root, const std::string& path) {
    if (!root.is_object()) throw DataError(path + ": fit config must be a JSON object");
    FitSettings s;
    if (!root.contains("grid")) throw DataError(path + ": missing \"grid\"");
    s.grid = parse_grid(root["grid"], path);
    s.fit.classes = static_cast<int>(get_number_or(root, "classes", 1.0, path));
    s.filter = root.contains("filter") ? parse_filter(root["filter"], s.grid, path)
                                       : parse_filter(json::object({{"mode", "cross"}}), s.grid,
                                                      path);
    if (root.contains("fit")) {
        const json& f = root["fit"];
        s.fit.eps_height = get_number_or(f, "eps_height", s.fit.eps_height, path);
        s.fit.eps_outer = get_number_or(f, "eps_outer", s.fit.eps_outer, path);
        s.fit.max_outer_iters =
            static_cast<int>(get_number_or(f, "max_outer_iters", s.fit.max_outer_iters, path));
        s.fit.bandwidth = get_number_or(f, "bandwidth", s.fit.bandwidth, path);
        s.fit.z_grid_size =
            static_cast<int>(get_number_or(f, "z_grid_size", s.fit.z_grid_size, path));
        s.fit.ridge = get_number_or(f, "ridge", s.fit.ridge, path);
        s.fit.em_iters = static_cast<int>(get_number_or(f, "em_iters", s.fit.em_iters, path));
        if (f.contains("freeze_theta")) s.fit.freeze_theta = f["freeze_theta"].get<bool>();
        if (f.contains("initial_theta")) {
            PathLossParams theta;
            theta.values = f["initial_theta"].get<std::vector<double>>();
            s.fit.initial_theta = theta;
        }
    }
    if (root.contains("kriging")) {
        const json& k = root["kriging"];
        s.krige.neighbors = static_cast<int>(get_number_or(k, "neighbors", 64.0, path));
        s.krige.max_pairs =
            static_cast<std::size_t>(get_number_or(k, "max_pairs", 100000.0, path));
        if (k.contains("sigma_n2") && !k["sigma_n2"].is_null())
            s.krige.sigma_n2_override = get_number(k, "sigma_n2", path);
    }
    return s;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (std::thread& th : pool) th.join();
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const std::string& spec_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_flag) {
    EnvironmentSpec spec = parse_env_spec(load_json(spec_path), spec_path);
    if (seed_flag) spec.seed = *seed_flag;

    fs::create_directories(out_dir);
    const SyntheticData data = generate_synthetic(spec);

    const std::string train_path = (fs::path(out_dir) / "train.csv").string();
    const std::string test_path = (fs::path(out_dir) / "test.csv").string();
    const std::string truth_path = (fs::path(out_dir) / "truth.obstacles.csv").string();
    write_measurements_csv(train_path, data.train);
    write_measurements_csv(test_path, data.test);
    write_obstacles_csv(truth_path, data.truth);

    json manifest;
    manifest["seed"] = spec.seed;
    manifest["theta_true"] = spec.theta_true.values;
    manifest["classes"] = spec.classes;
    manifest["sigma_n"] = spec.sigma_n;
    manifest["n_train"] = data.train.size();
    manifest["n_test"] = data.test.size();
    manifest["files"] = {{"train", "train.csv"},
                         {"test", "test.csv"},
                         {"truth_obstacles", "truth.obstacles.csv"}};
    write_text((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

    std::cout << "wrote " << data.train.size() << " training and " << data.test.size()
              << " test measurements to " << out_dir << "\n";
    return 0;
}

// --- fit ---------------------------------------------------------------------

int cmd_fit(const std::string& train_path, const std::string& config_path,
            const std::string& out_path, std::optional<std::uint64_t> seed_flag) {
    FitSettings settings = parse_fit_config(load_json(config_path), config_path);
    if (seed_flag) settings.krige.seed = *seed_flag;
    const Dataset train = read_measurements_csv(train_path);

    const FittedBundle bundle =
        fit_radio_map(train, settings.grid, settings.filter, settings.fit, settings.krige);
    save_radio_map(bundle.map, out_path);

    const double objective =
        bundle.objective_trace.empty() ? 0.0 : bundle.objective_trace.back();
    std::cout << "objective " << format_double(objective) << " iterations "
              << bundle.iterations << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

// --- predict ------------------------------------------------------------------

std::vector<Link> read_links_csv(const std::string& path) {
    // Accepts the 7-column measurement schema (rss ignored) or the 6-column
    // link schema "xu,yu,zu,xd,yd,zd".
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open for reading");
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ":1: missing header row");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    in.close();
    if (header == "xu,yu,zu,xd,yd,zd,rss_db") {
        const Dataset data = read_measurements_csv(path);
        std::vector<Link> links;
        links.reserve(data.size());
        for (const Measurement& rec : data.records) links.push_back(rec.link);
        return links;
    }
    if (header != "xu,yu,zu,xd,yd,zd")
        throw DataError(path + ":1: header must be \"xu,yu,zu,xd,yd,zd\" (rss_db optional)");

    std::ifstream again(path);
    std::string line;
    std::getline(again, line);  // header
    std::vector<Link> links;
    std::size_t line_no = 1;
    while (std::getline(again, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::vector<double> v;
        std::string field;
        while (std::getline(row, field, ',')) {
            try {
                std::size_t used = 0;
                const double value = std::stod(field, &used);
                if (used != field.size()) throw std::invalid_argument(field);
                v.push_back(value);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) + ": expected a number, got \"" +
                                field + "\"");
            }
        }
        if (v.size() != 6)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 6 fields");
        links.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    }
    return links;
}

int cmd_predict(const std::string& map_path, const std::string& links_path,
                const std::string& out_path, int threads) {
    const RadioMap map = load_radio_map(map_path);
    const std::vector<Link> links = read_links_csv(links_path);

    std::vector<double> gains(links.size(), 0.0);
    parallel_for(static_cast<int>(links.size()), threads,
                 [&](int i) { gains[static_cast<std::size_t>(i)] = map.full_gain(links[static_cast<std::size_t>(i)]); });

    std::ofstream out(out_path);
    if (!out) throw DataError(out_path + ": cannot open for writing");
    out << "xu,yu,zu,xd,yd,zd,gain_db\n";
    for (std::size_t i = 0; i < links.size(); ++i) {
        const Link& l = links[i];
        out << format_double(l.user.x) << ',' << format_double(l.user.y) << ','
            << format_double(l.user.z) << ',' << format_double(l.aerial.x) << ','
            << format_double(l.aerial.y) << ',' << format_double(l.aerial.z) << ','
            << format_double(gains[i]) << "\n";
    }
    out.flush();
    if (!out) throw DataError(out_path + ": write failed");
    std::cout << "wrote " << links.size() << " predictions to " << out_path << "\n";
    return 0;
}

// --- eval --------------------------------------------------------------------

std::vector<std::string> parse_methods(const std::string& arg) {
    std::vector<std::string> methods;
    std::istringstream stream(arg);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (token.empty()) continue;
        if (token == "all") return {"proposed", "knn", "kriging", "statistical"};
        if (token != "proposed" && token != "knn" && token != "kriging" &&
            token != "statistical" && token != "truth")
            throw UsageError("unknown method \"" + token + "\"");
        methods.push_back(token);
    }
    if (methods.empty()) throw UsageError("no method given");
    return methods;
}

// Training measurements reconstructed from the bundle's stored residuals:
// y_i = residual_i + deterministic(link_i), exact for the data the map was
// fitted on.
Dataset training_data_from_map(const RadioMap& map) {
    if (!map.has_residual_model())
        throw DataError("map bundle stores no residuals; baselines need the training data");
    Dataset train;
    train.records.reserve(map.residuals.size());
    for (const ResidualRecord& rec : map.residuals.records())
        train.records.push_back({rec.link, rec.value + map.deterministic(rec.link)});
    return train;
}

int cmd_eval(const std::string& map_path, const std::string& test_path,
             const std::string& methods_arg, const std::string& out_path, int threads) {
    const std::vector<std::string> methods = parse_methods(methods_arg);
    for (const std::string& m : methods)
        if (m == "truth") throw UsageError("method \"truth\" is only available in relay");

    const RadioMap map = load_radio_map(map_path);
    const Dataset test = read_measurements_csv(test_path);
    if (test.size() == 0) throw DataError(test_path + ": no test rows");

    const bool needs_train = std::any_of(methods.begin(), methods.end(),
                                         [](const std::string& m) { return m != "proposed"; });
    Dataset train;
    if (needs_train) train = training_data_from_map(map);

    std::optional<KrigingBaseline> kriging_model;
    std::optional<StatModel> stat_model;
    for (const std::string& m : methods) {
        if (m == "kriging" && !kriging_model) kriging_model.emplace(train);
        if (m == "statistical" && !stat_model) stat_model = stat_fit(train);
    }

    std::ostringstream report;
    report << "method,mae_db,n\n";
    for (const std::string& method : methods) {
        std::vector<double> errors(test.size(), 0.0);
        parallel_for(static_cast<int>(test.size()), threads, [&](int i) {
            const Measurement& rec = test.records[static_cast<std::size_t>(i)];
            double prediction = 0.0;
            if (method == "proposed") {
                prediction = map.full_gain(rec.link);
            } else if (method == "knn") {
                prediction = knn_predict(rec.link, train);
            } else if (method == "kriging") {
                prediction = kriging_model->predict(rec.link);
            } else {
                prediction = stat_predict(*stat_model, rec.link);
            }
            errors[static_cast<std::size_t>(i)] = std::abs(prediction - rec.rss);
        });
        double total = 0.0;
        for (double e : errors) total += e;
        const double mae = total / static_cast<double>(test.size());
        report << method << ',' << format_double(mae) << ',' << test.size() << "\n";
        std::cout << method << " mae_db " << format_double(mae) << "\n";
    }
    write_text(out_path, report.str());
    return 0;
}

// --- slice -------------------------------------------------------------------

int cmd_slice(const std::string& map_path, const std::vector<double>& user_xyz, double altitude,
              const std::string& out_path, int threads) {
    const RadioMap map = load_radio_map(map_path);
    const GridSpec& grid = map.obstacles.grid();
    if (altitude > grid.h_max || altitude < 0.0)
        log_line(LogLevel::error, "warning: slice altitude " + format_double(altitude) +
                                      " lies outside the obstacle domain [0, " +
                                      format_double(grid.h_max) + "]; computing anyway");
    const Vec3 user{user_xyz[0], user_xyz[1], user_xyz[2]};

    const int count = grid.cell_count();
    std::vector<double> gains(static_cast<std::size_t>(count), 0.0);
    parallel_for(count, threads, [&](int cell) {
        const int ix = cell % grid.nx;
        const int iy = cell / grid.nx;
        const Link link{user, {grid.cell_center_x(ix), grid.cell_center_y(iy), altitude}};
        gains[static_cast<std::size_t>(cell)] = map.full_gain(link);
    });

    std::ostringstream out;
    out << "x,y,gain_db\n";
    for (int cell = 0; cell < count; ++cell) {
        const int ix = cell % grid.nx;
        const int iy = cell / grid.nx;
        out << format_double(grid.cell_center_x(ix)) << ',' << format_double(grid.cell_center_y(iy))
            << ',' << format_double(gains[static_cast<std::size_t>(cell)]) << "\n";
    }
    write_text(out_path, out.str());
    std::cout << "wrote " << count << " slice cells to " << out_path << "\n";
    return 0;
}

// --- relay -------------------------------------------------------------------

int cmd_relay(const std::string& env_path, const std::string& train_path,
              const std::string& config_path, const std::string& methods_arg,
              const std::string& out_path, int n_pairs, std::optional<std::uint64_t> seed_flag,
              int lattice_nx, int lattice_ny, int lattice_levels, int threads) {
    const std::vector<std::string> methods = parse_methods(methods_arg);
    EnvironmentSpec spec = parse_env_spec(load_json(env_path), env_path);
    if (n_pairs < 1) throw UsageError("--pairs must be positive");

    const ObstacleMap truth = rasterize_truth(spec);
    const GainFn truth_gain = [&](const Link& link) {
        return deterministic_gain(link, spec.theta_true, truth, spec.truth_filter);
    };

    const Dataset train = read_measurements_csv(train_path);

    // Per-method planning oracles.
    std::optional<RadioMap> proposed;
    std::optional<KrigingBaseline> kriging_model;
    std::optional<StatModel> stat_model;
    for (const std::string& m : methods) {
        if (m == "proposed" && !proposed) {
            FitSettings settings;
            if (config_path.empty()) {
                settings.grid = spec.grid;
                settings.fit.classes = spec.classes;
                settings.filter = make_filter(spec.grid.spacing / 2.0, spec.grid.spacing / 2.0,
                                              FilterMode::cross);
            } else {
                settings = parse_fit_config(load_json(config_path), config_path);
            }
            if (seed_flag) settings.krige.seed = *seed_flag;
            settings.krige.neighbors = 16;  // cheap queries; relay sweeps many candidates
            proposed = fit_radio_map(train, settings.grid, settings.filter, settings.fit,
                                     settings.krige)
                           .map;
        }
        if (m == "kriging" && !kriging_model) kriging_model.emplace(train, 16);
        if (m == "statistical" && !stat_model) stat_model = stat_fit(train);
    }

    std::vector<std::pair<std::string, GainFn>> oracles;
    for (const std::string& m : methods) {
        if (m == "truth") {
            oracles.emplace_back(m, truth_gain);
        } else if (m == "proposed") {
            oracles.emplace_back(m, [&](const Link& l) { return proposed->full_gain(l); });
        } else if (m == "knn") {
            oracles.emplace_back(m, [&](const Link& l) { return knn_predict(l, train); });
        } else if (m == "kriging") {
            oracles.emplace_back(m, [&](const Link& l) { return kriging_model->predict(l); });
        } else {
            oracles.emplace_back(m, [&](const Link& l) { return stat_predict(*stat_model, l); });
        }
    }

    // User pairs from the environment's ground distribution.
    Rng rng(seed_flag ? *seed_flag : spec.seed);
    const std::vector<Vec3> endpoints = sample_users(spec, 2 * n_pairs, rng);
    std::vector<std::pair<Vec3, Vec3>> pairs;
    pairs.reserve(static_cast<std::size_t>(n_pairs));
    for (int p = 0; p < n_pairs; ++p)
        pairs.emplace_back(endpoints[static_cast<std::size_t>(2 * p)],
                           endpoints[static_cast<std::size_t>(2 * p + 1)]);

    RelayParams params;
    std::vector<double> altitudes;
    for (int level = 0; level < lattice_levels; ++level) {
        const double t = lattice_levels == 1
                             ? 0.5
                             : static_cast<double>(level) / (lattice_levels - 1);
        altitudes.push_back(spec.sampling.altitude_min +
                            t * (spec.sampling.altitude_max - spec.sampling.altitude_min));
    }
    params.candidates = candidate_lattice(spec.grid, lattice_nx, lattice_ny, altitudes);

    std::ostringstream report;
    report << "method,mean_capacity_bps,n_pairs\n";
    for (const auto& [method, gain] : oracles) {
        std::vector<double> capacities(pairs.size(), 0.0);
        parallel_for(static_cast<int>(pairs.size()), threads, [&](int p) {
            const auto& [user_a, user_b] = pairs[static_cast<std::size_t>(p)];
            const RelayPlacement placement = optimize_placement(user_a, user_b, gain, params);
            capacities[static_cast<std::size_t>(p)] =
                df_capacity(placement.position, user_a, user_b, truth_gain, params);
        });
        double total = 0.0;
        for (double c : capacities) total += c;
        const double mean = total / static_cast<double>(pairs.size());
        report << method << ',' << format_double(mean) << ',' << pairs.size() << "\n";
        std::cout << method << " mean_capacity_bps " << format_double(mean) << "\n";
    }
    write_text(out_path, report.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"6D radio-map construction from air-to-ground RSS measurements"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed_flag;
    int threads = 1;
    app.add_option("--seed", seed_flag, "Override the configured random seed");
    app.add_option("--threads", threads, "Worker threads for embarrassingly parallel stages")
        ->check(CLI::PositiveNumber);

    // generate
    auto* generate = app.add_subcommand("generate", "Generate synthetic measurements");
    std::string gen_spec, gen_out;
    generate->add_option("--spec", gen_spec, "Environment spec JSON")->required();
    generate->add_option("--out", gen_out, "Output directory")->required();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a radio map from measurements");
    std::string fit_train, fit_config, fit_out;
    fit_cmd->add_option("--train", fit_train, "Training measurement CSV")->required();
    fit_cmd->add_option("--config", fit_config, "Fit config JSON")->required();
    fit_cmd->add_option("--out", fit_out, "Output map bundle JSON")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "Predict gains at given links");
    std::string pred_map, pred_links, pred_out;
    predict->add_option("--map", pred_map, "Map bundle JSON")->required();
    predict->add_option("--links", pred_links, "Links CSV")->required();
    predict->add_option("--out", pred_out, "Output CSV")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate MAE on held-out measurements");
    std::string eval_map, eval_test, eval_out, eval_methods = "proposed";
    eval->add_option("--map", eval_map, "Map bundle JSON")->required();
    eval->add_option("--test", eval_test, "Held-out measurement CSV")->required();
    eval->add_option("--out", eval_out, "Output report CSV")->required();
    eval->add_option("--method", eval_methods,
                     "Comma list of proposed,knn,kriging,statistical or all");

    // slice
    auto* slice = app.add_subcommand("slice", "Export a horizontal map slice");
    std::string slice_map, slice_out;
    std::vector<double> slice_user;
    double slice_alt = 0.0;
    slice->add_option("--map", slice_map, "Map bundle JSON")->required();
    slice->add_option("--user", slice_user, "User position x,y,z")
        ->required()
        ->delimiter(',')
        ->expected(3);
    slice->add_option("--altitude", slice_alt, "Aerial altitude in meters")->required();
    slice->add_option("--out", slice_out, "Output CSV")->required();

    // relay
    auto* relay = app.add_subcommand("relay", "Relay placement benchmark");
    std::string relay_env, relay_train, relay_config, relay_out;
    std::string relay_methods = "truth,proposed,knn,kriging,statistical";
    int relay_pairs = 20, relay_nx = 15, relay_ny = 15, relay_levels = 4;
    relay->add_option("--env", relay_env, "Environment spec JSON")->required();
    relay->add_option("--train", relay_train, "Training measurement CSV")->required();
    relay->add_option("--out", relay_out, "Output report CSV")->required();
    relay->add_option("--config", relay_config, "Fit config JSON for the proposed method");
    relay->add_option("--methods", relay_methods, "Comma list of planning methods");
    relay->add_option("--pairs", relay_pairs, "Number of user pairs");
    relay->add_option("--lattice-nx", relay_nx, "Candidate lattice width");
    relay->add_option("--lattice-ny", relay_ny, "Candidate lattice depth");
    relay->add_option("--lattice-levels", relay_levels, "Candidate altitude count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen_spec, gen_out, seed_flag);
        if (fit_cmd->parsed()) return cmd_fit(fit_train, fit_config, fit_out, seed_flag);
        if (predict->parsed()) return cmd_predict(pred_map, pred_links, pred_out, threads);
        if (eval->parsed()) return cmd_eval(eval_map, eval_test, eval_methods, eval_out, threads);
        if (slice->parsed()) return cmd_slice(slice_map, slice_user, slice_alt, slice_out, threads);
        if (relay->parsed())
            return cmd_relay(relay_env, relay_train, relay_config, relay_methods, relay_out,
                             relay_pairs, seed_flag, relay_nx, relay_ny, relay_levels, threads);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
