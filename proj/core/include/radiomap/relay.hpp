#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "radiomap/geometry.hpp"

namespace radiomap {

/// Channel-gain oracle in dB for an arbitrary link.
using GainFn = std::function<double(const Link&)>;

struct RelayParams {
    double bandwidth_hz = 100e6;
    double kappa = 0.5;      // rate discount factor in (0, 1]
    double power_db = 104.0; // per-link transmit-power-to-noise ratio
    std::vector<Vec3> candidates;

    void validate() const;  // throws std::invalid_argument
};

/// Half-duplex decode-and-forward rate (bits/s) through a relay at relay_pos
/// serving the two ground users: (W/2) log2(1 + kappa * P_lin * g_lin) of the
/// weaker hop.
double df_capacity(const Vec3& relay_pos, const Vec3& user_a, const Vec3& user_b,
                   const GainFn& gain, const RelayParams& params);

struct RelayPlacement {
    Vec3 position;
    double capacity_bps = 0.0;
};

/// Exhaustive search over the candidate positions; ties broken by lowest
/// altitude, then lexicographic (x, y).
RelayPlacement optimize_placement(const Vec3& user_a, const Vec3& user_b, const GainFn& gain,
                                  const RelayParams& params);

/// nx-by-ny horizontal lattice of candidate positions spread over the grid's
/// footprint, replicated at each altitude.
std::vector<Vec3> candidate_lattice(const GridSpec& grid, int nx, int ny,
                                    const std::vector<double>& altitudes);

struct RelayBenchmarkRow {
    std::string method;
    double mean_capacity_bps = 0.0;
    int n_pairs = 0;
};

/// For each method: place the relay for every user pair with that method's
/// gain oracle, then score the chosen position against the true gains.
std::vector<RelayBenchmarkRow> evaluate_relay_benchmark(
    const std::vector<std::pair<Vec3, Vec3>>& user_pairs, const GainFn& true_gain,
    const std::vector<std::pair<std::string, GainFn>>& methods, const RelayParams& params);

}  // namespace radiomap
