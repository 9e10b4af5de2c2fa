#include "radiomap/relay.hpp"

#include <cmath>
#include <stdexcept>

namespace radiomap {

namespace {

// True when a is the preferred position under the tie rules: lower altitude,
// then lexicographic (x, y).
bool position_preferred(const Vec3& a, const Vec3& b) {
    if (a.z != b.z) return a.z < b.z;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
}

}  // namespace

void RelayParams::validate() const {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    if (!(kappa > 0.0) || !(kappa <= 1.0)) throw std::invalid_argument("kappa must be in (0, 1]");
    if (candidates.empty()) throw std::invalid_argument("candidate set must be nonempty");
}

double df_capacity(const Vec3& relay_pos, const Vec3& user_a, const Vec3& user_b,
                   const GainFn& gain, const RelayParams& params) {
    const double gain_a = gain(Link{user_a, relay_pos});
    const double gain_b = gain(Link{user_b, relay_pos});
    const double snr_a = params.kappa * std::pow(10.0, (params.power_db + gain_a) / 10.0);
    const double snr_b = params.kappa * std::pow(10.0, (params.power_db + gain_b) / 10.0);
    return 0.5 * params.bandwidth_hz * std::log2(1.0 + std::min(snr_a, snr_b));
}

RelayPlacement optimize_placement(const Vec3& user_a, const Vec3& user_b, const GainFn& gain,
                                  const RelayParams& params) {
    params.validate();
    RelayPlacement best{params.candidates.front(), -1.0};
    for (const Vec3& candidate : params.candidates) {
        const double capacity = df_capacity(candidate, user_a, user_b, gain, params);
        if (capacity > best.capacity_bps ||
            (capacity == best.capacity_bps && position_preferred(candidate, best.position))) {
            best.position = candidate;
            best.capacity_bps = capacity;
        }
    }
    return best;
}

std::vector<Vec3> candidate_lattice(const GridSpec& grid, int nx, int ny,
                                    const std::vector<double>& altitudes) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("lattice dimensions must be positive");
    if (altitudes.empty()) throw std::invalid_argument("need at least one altitude");
    const double width = grid.nx * grid.spacing;
    const double depth = grid.ny * grid.spacing;
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * altitudes.size());
    for (double alt : altitudes)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                out.push_back({grid.origin_x + (ix + 0.5) * width / nx,
                               grid.origin_y + (iy + 0.5) * depth / ny, alt});
    return out;
}

std::vector<RelayBenchmarkRow> evaluate_relay_benchmark(
    const std::vector<std::pair<Vec3, Vec3>>& user_pairs, const GainFn& true_gain,
    const std::vector<std::pair<std::string, GainFn>>& methods, const RelayParams& params) {
    params.validate();
    if (user_pairs.empty()) throw std::invalid_argument("need at least one user pair");
    std::vector<RelayBenchmarkRow> rows;
    rows.reserve(methods.size());
    for (const auto& [method, gain] : methods) {
        double total = 0.0;
        for (const auto& [user_a, user_b] : user_pairs) {
            const RelayPlacement placement = optimize_placement(user_a, user_b, gain, params);
            total += df_capacity(placement.position, user_a, user_b, true_gain, params);
        }
        rows.push_back({method, total / static_cast<double>(user_pairs.size()),
                        static_cast<int>(user_pairs.size())});
    }
    return rows;
}

}  // namespace radiomap
