#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/estimator.hpp"
#include "radiomap/kriging.hpp"
#include "radiomap/obstacle.hpp"
#include "radiomap/propagation.hpp"

namespace radiomap {

/// Fitted radio map: path-loss mixture (theta, obstacles, filter) plus an
/// optional residual-shadowing model (variogram + training residuals). One
/// serializable artifact, so a map fitted once can be queried anywhere.
struct RadioMap {
    PathLossParams theta;
    ObstacleMap obstacles;
    SoftFilter filter;
    Variogram variogram;      // meaningful only when residuals are present
    ResidualStore residuals;  // empty store = no residual model
    int krige_neighbors = 64; // <= 0 uses every stored residual

    bool has_residual_model() const { return residuals.size() > 0; }

    /// Path-loss mixture gain in dB.
    double deterministic(const Link& link) const;
    /// Kriged residual in dB; 0 without a residual model.
    double shadowing(const Link& link) const;
    /// deterministic + shadowing.
    double full_gain(const Link& link) const;
};

/// Residual-model fitting knobs for the full pipeline.
struct KrigeConfig {
    int neighbors = 64;
    std::size_t max_pairs = 100000;
    std::uint64_t seed = 0;
    std::optional<double> sigma_n2_override;  // supply a known noise variance
};

struct FittedBundle {
    RadioMap map;
    std::vector<double> objective_trace;
    int iterations = 0;
};

/// Full fitting pipeline: joint path-loss/obstacle estimation, then residual
/// extraction and variogram fitting (skipped, with an info log, when fewer
/// than 10 records are available).
FittedBundle fit_radio_map(const Dataset& data, const GridSpec& grid, const SoftFilter& filter,
                           const FitConfig& fit_cfg, const KrigeConfig& krige_cfg);

/// Bundle serialization: one JSON file plus CSV sidecars named
/// "<stem>.obstacles.csv" and "<stem>.residuals.csv" next to it.
void save_radio_map(const RadioMap& map, const std::string& json_path);
RadioMap load_radio_map(const std::string& json_path);

}  // namespace radiomap
