#pragma once

#include <vector>

#include "radiomap/geometry.hpp"
#include "radiomap/obstacle.hpp"

namespace radiomap {

/// Per-class log-distance path-loss parameters, stored as
/// [slope_0, intercept_0, slope_1, intercept_1, ..., slope_K, intercept_K].
/// The class-k gain at log10-distance d is intercept_k + slope_k * d.
struct PathLossParams {
    std::vector<double> values;

    int classes() const { return static_cast<int>(values.size()) / 2 - 1; }
    double slope(int k) const { return values[2 * static_cast<std::size_t>(k)]; }
    double intercept(int k) const { return values[2 * static_cast<std::size_t>(k) + 1]; }
    double path_loss(int k, double log_dist) const {
        return intercept(k) + slope(k) * log_dist;
    }
    void validate(int expected_classes) const;
    static PathLossParams zeros(int classes);
};

/// Expected gain in dB: the region-likelihood mixture of per-class path-loss
/// lines evaluated at the link's log10 distance.
double deterministic_gain(const Link& link, const PathLossParams& theta,
                          const ObstacleMap& map, const SoftFilter& filter);

}  // namespace radiomap
