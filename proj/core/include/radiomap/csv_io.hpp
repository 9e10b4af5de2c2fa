#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/kriging.hpp"
#include "radiomap/obstacle.hpp"

namespace radiomap {

/// Unreadable, malformed, or inconsistent input data. Messages carry
/// "path:line:" prefixes where a line is known.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& message) : std::runtime_error(message) {}
};

/// Shortest text form that round-trips the double exactly.
std::string format_double(double v);

/// Measurement CSV with header "xu,yu,zu,xd,yd,zd,rss_db" (user then aerial
/// endpoint coordinates in meters, received signal strength in dB).
Dataset read_measurements_csv(const std::string& path);
void write_measurements_csv(const std::string& path, const Dataset& data);

/// Obstacle-height CSV with header "cell,h_1,...,h_K" and one row per grid
/// cell in index order.
std::vector<double> read_obstacles_csv(const std::string& path, int cell_count, int classes);
void write_obstacles_csv(const std::string& path, const ObstacleMap& map);

/// Residual CSV with header "xu,yu,zu,xd,yd,zd,residual_db".
std::vector<ResidualRecord> read_residuals_csv(const std::string& path);
void write_residuals_csv(const std::string& path, const std::vector<ResidualRecord>& records);

}  // namespace radiomap
