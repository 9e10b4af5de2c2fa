#pragma once

#include <cstdint>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/kriging.hpp"

namespace radiomap {

/// Gaussian-weighted mean of the k nearest measurements in 6D link space,
/// with weights exp(-d^2 / (2 scale^2)).
double knn_predict(const Link& query, const Dataset& data, int k = 5, double scale = 55.0);

/// Ordinary kriging applied to raw RSS values, de-meaned by one global line
/// in log10 distance that is re-added at the query.
class KrigingBaseline {
public:
    explicit KrigingBaseline(const Dataset& data, int n_neighbors = 64,
                             std::size_t max_pairs = 100000, std::uint64_t seed = 0);

    double predict(const Link& query) const;
    const Variogram& variogram() const { return variogram_; }

private:
    double slope_ = 0.0;
    double intercept_ = 0.0;
    ResidualStore store_;
    Variogram variogram_;
    int n_neighbors_ = 64;
};

/// One-shot convenience wrapper around KrigingBaseline.
double kriging_baseline_predict(const Link& query, const Dataset& data);

/// Elevation-angle statistical model: per-bin LOS probability mixing two
/// global path-loss lines gain_k = a_k + b_k * log10(distance).
struct StatModel {
    std::vector<double> phi_edges;  // radians; 19 edges covering [0, pi/2]
    std::vector<double> p_los;      // 18 per-bin LOS probabilities
    double a0 = 0.0;                // LOS intercept
    double b0 = 0.0;                // LOS slope
    double a1 = 0.0;                // obstructed intercept
    double b1 = 0.0;                // obstructed slope
};

/// Fit the model from measurements. `labels` (0 = LOS, nonzero = obstructed)
/// may supply ground truth; otherwise records are pseudo-labeled by a
/// two-line mixture fit. Needs at least 50 records.
StatModel stat_fit(const Dataset& data, const std::vector<int>* labels = nullptr,
                   int em_iters = 10);

double stat_predict(const StatModel& model, const Link& query);

/// Elevation of the aerial endpoint seen from the user, clamped to [0, pi/2].
double elevation_angle(const Link& link);

}  // namespace radiomap
