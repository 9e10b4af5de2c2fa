#include "radiomap/radio_map.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "radiomap/csv_io.hpp"
#include "radiomap/log.hpp"

namespace radiomap {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kBundleFormat = "radiomap-bundle";
constexpr int kBundleVersion = 1;

std::string sidecar_name(const std::string& json_path, const char* suffix) {
    return fs::path(json_path).stem().string() + suffix;
}

std::string resolve_sibling(const std::string& json_path, const std::string& name) {
    return (fs::path(json_path).parent_path() / name).string();
}

double require_number(const json& node, const char* key, const std::string& path) {
    if (!node.contains(key) || !node[key].is_number())
        throw DataError(path + ": bundle field \"" + std::string(key) + "\" must be a number");
    return node[key].get<double>();
}

}  // namespace

double RadioMap::deterministic(const Link& link) const {
    return deterministic_gain(link, theta, obstacles, filter);
}

double RadioMap::shadowing(const Link& link) const {
    if (!has_residual_model()) return 0.0;
    return krige(residuals, variogram, link, krige_neighbors);
}

double RadioMap::full_gain(const Link& link) const { return deterministic(link) + shadowing(link); }

FittedBundle fit_radio_map(const Dataset& data, const GridSpec& grid, const SoftFilter& filter,
                           const FitConfig& fit_cfg, const KrigeConfig& krige_cfg) {
    FitResult fitted = fit(data, grid, filter, fit_cfg);
    RadioMap map{fitted.theta,   std::move(fitted.obstacles), filter,
                 Variogram{},    ResidualStore{},             krige_cfg.neighbors};
    if (data.size() >= 10) {
        ResidualStore store = extract_residuals(data, map.theta, map.obstacles, map.filter);
        Variogram variogram = fit_variogram(store, krige_cfg.max_pairs, krige_cfg.seed);
        if (krige_cfg.sigma_n2_override) variogram.sigma_n2 = *krige_cfg.sigma_n2_override;
        map.variogram = variogram;
        map.residuals = std::move(store);
    } else if (log_enabled(LogLevel::info)) {
        log_line(LogLevel::info, "skipping residual model: fewer than 10 records");
    }
    return FittedBundle{std::move(map), std::move(fitted.objective_trace), fitted.iterations};
}

void save_radio_map(const RadioMap& map, const std::string& json_path) {
    map.theta.validate(map.obstacles.classes());
    map.filter.validate();
    const std::string obstacles_name = sidecar_name(json_path, ".obstacles.csv");
    const std::string residuals_name = sidecar_name(json_path, ".residuals.csv");

    const GridSpec& grid = map.obstacles.grid();
    json root;
    root["format"] = kBundleFormat;
    root["version"] = kBundleVersion;
    root["grid"] = {{"origin_x", grid.origin_x}, {"origin_y", grid.origin_y},
                    {"spacing", grid.spacing},   {"nx", grid.nx},
                    {"ny", grid.ny},             {"h_max", grid.h_max}};
    root["classes"] = map.obstacles.classes();
    root["theta"] = map.theta.values;
    json filter_node;
    filter_node["sigma_w"] = map.filter.sigma_w;
    filter_node["offsets"] = json::array();
    for (const auto& offset : map.filter.offsets)
        filter_node["offsets"].push_back(std::vector<double>(offset.begin(), offset.end()));
    filter_node["weights"] = map.filter.weights;
    root["filter"] = filter_node;
    root["krige_neighbors"] = map.krige_neighbors;
    if (map.has_residual_model()) {
        root["variogram"] = {{"alpha_s", map.variogram.alpha_s},
                             {"alpha_r", map.variogram.alpha_r},
                             {"sigma_n2", map.variogram.sigma_n2}};
    } else {
        root["variogram"] = nullptr;
    }
    root["obstacles_file"] = obstacles_name;
    root["residuals_file"] = residuals_name;

    write_obstacles_csv(resolve_sibling(json_path, obstacles_name), map.obstacles);
    write_residuals_csv(resolve_sibling(json_path, residuals_name), map.residuals.records());

    std::ofstream out(json_path);
    if (!out) throw DataError(json_path + ": cannot open for writing");
    out << root.dump(2) << "\n";
    out.flush();
    if (!out) throw DataError(json_path + ": write failed");
}

RadioMap load_radio_map(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw DataError(json_path + ": cannot open for reading");
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& err) {
        throw DataError(json_path + ": invalid JSON: " + err.what());
    }

    if (!root.is_object() || root.value("format", "") != kBundleFormat)
        throw DataError(json_path + ": not a radio-map bundle");
    if (root.value("version", 0) != kBundleVersion)
        throw DataError(json_path + ": unsupported bundle version");
    if (!root.contains("grid") || !root["grid"].is_object())
        throw DataError(json_path + ": bundle field \"grid\" must be an object");

    const json& grid_node = root["grid"];
    GridSpec grid;
    grid.origin_x = require_number(grid_node, "origin_x", json_path);
    grid.origin_y = require_number(grid_node, "origin_y", json_path);
    grid.spacing = require_number(grid_node, "spacing", json_path);
    grid.nx = static_cast<int>(require_number(grid_node, "nx", json_path));
    grid.ny = static_cast<int>(require_number(grid_node, "ny", json_path));
    grid.h_max = require_number(grid_node, "h_max", json_path);
    try {
        grid.validate();
    } catch (const std::invalid_argument& err) {
        throw DataError(json_path + ": " + err.what());
    }

    const int classes = static_cast<int>(require_number(root, "classes", json_path));
    if (classes < 1) throw DataError(json_path + ": bundle needs at least one obstacle class");

    if (!root.contains("theta") || !root["theta"].is_array())
        throw DataError(json_path + ": bundle field \"theta\" must be an array");
    PathLossParams theta;
    theta.values = root["theta"].get<std::vector<double>>();
    try {
        theta.validate(classes);
    } catch (const std::invalid_argument& err) {
        throw DataError(json_path + ": " + err.what());
    }

    if (!root.contains("filter") || !root["filter"].is_object())
        throw DataError(json_path + ": bundle field \"filter\" must be an object");
    const json& filter_node = root["filter"];
    SoftFilter filter;
    filter.sigma_w = require_number(filter_node, "sigma_w", json_path);
    if (!filter_node.contains("offsets") || !filter_node["offsets"].is_array() ||
        !filter_node.contains("weights") || !filter_node["weights"].is_array())
        throw DataError(json_path + ": filter needs \"offsets\" and \"weights\" arrays");
    for (const json& entry : filter_node["offsets"]) {
        const std::vector<double> values = entry.get<std::vector<double>>();
        if (values.size() != 6)
            throw DataError(json_path + ": each filter offset needs 6 coordinates");
        std::array<double, 6> offset;
        std::copy(values.begin(), values.end(), offset.begin());
        filter.offsets.push_back(offset);
    }
    filter.weights = filter_node["weights"].get<std::vector<double>>();
    try {
        filter.validate();
    } catch (const std::invalid_argument& err) {
        throw DataError(json_path + ": " + err.what());
    }

    const std::string obstacles_file = root.value("obstacles_file", "");
    const std::string residuals_file = root.value("residuals_file", "");
    if (obstacles_file.empty() || residuals_file.empty())
        throw DataError(json_path + ": bundle needs obstacles_file and residuals_file");

    ObstacleMap obstacles(grid, classes, 0.0);
    const std::string obstacles_path = resolve_sibling(json_path, obstacles_file);
    const std::vector<double> heights =
        read_obstacles_csv(obstacles_path, grid.cell_count(), classes);
    for (int m = 0; m < grid.cell_count(); ++m) {
        for (int k = 1; k <= classes; ++k) {
            const double h = heights[static_cast<std::size_t>(m) * classes +
                                     static_cast<std::size_t>(k - 1)];
            if (!(h >= 0.0) || !(h <= grid.h_max))
                throw DataError(obstacles_path + ": height out of [0, h_max] at cell " +
                                std::to_string(m));
            if (k > 1 && h > obstacles.height(m, k - 1))
                throw DataError(obstacles_path + ": class heights must be non-increasing at cell " +
                                std::to_string(m));
            obstacles.set_height(m, k, h);
        }
    }

    RadioMap map{std::move(theta), std::move(obstacles), std::move(filter),
                 Variogram{},      ResidualStore{},      64};
    map.krige_neighbors = static_cast<int>(require_number(root, "krige_neighbors", json_path));

    std::vector<ResidualRecord> residual_records =
        read_residuals_csv(resolve_sibling(json_path, residuals_file));
    if (!residual_records.empty()) {
        if (!root.contains("variogram") || !root["variogram"].is_object())
            throw DataError(json_path + ": residuals present but \"variogram\" is missing");
        const json& vg = root["variogram"];
        map.variogram.alpha_s = require_number(vg, "alpha_s", json_path);
        map.variogram.alpha_r = require_number(vg, "alpha_r", json_path);
        map.variogram.sigma_n2 = require_number(vg, "sigma_n2", json_path);
        try {
            map.variogram.validate();
        } catch (const std::invalid_argument& err) {
            throw DataError(json_path + ": " + err.what());
        }
        map.residuals = ResidualStore(std::move(residual_records));
    }
    return map;
}

}  // namespace radiomap
