#pragma once

#include <optional>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/obstacle.hpp"
#include "radiomap/propagation.hpp"

namespace radiomap {

/// Knobs for the alternating path-loss / obstacle-height estimator. Negative
/// length parameters select the defaults derived from the grid's h_max.
struct FitConfig {
    int classes = 1;
    double eps_height = -1.0;   // bisection stop width; default h_max / 256
    double eps_outer = 0.01;    // mean per-entry height change that stops the outer loop
    int max_outer_iters = 20;
    double bandwidth = -1.0;    // slope-smoothing kernel bandwidth; default h_max / 8
    int z_grid_size = 33;       // samples per height profile
    double ridge = 1e-8;        // regularizer for the path-loss normal equations
    int em_iters = 10;          // refinement rounds for the initial line mixture
    bool freeze_theta = false;  // keep initial path-loss parameters fixed
    double theta_min_mass = 4.0;  // per-class mass below which its line is held
    std::optional<PathLossParams> initial_theta;
};

/// Objective samples along one obstacle-height sweep.
struct HeightProfile {
    std::vector<double> zs;  // strictly increasing heights in [0, h_max]
    std::vector<double> fs;  // objective value at each height
};

struct FitResult {
    PathLossParams theta;
    ObstacleMap obstacles;
    std::vector<double> objective_trace;  // one entry per outer iteration
    int iterations = 0;
};

/// Mean squared fitting error of the mixture model over the dataset.
double objective_f(const Dataset& data, const PathLossParams& theta, const ObstacleMap& map,
                   const SoftFilter& filter);

/// Weighted least-squares path-loss parameters given per-record region
/// likelihoods (rows of K+1 values). Classes with negligible likelihood mass
/// are pruned and inherit the nearest surviving class's parameters.
///
/// A line needs two coefficients, so a class whose total likelihood mass falls
/// below min_class_mass cannot be identified from the data; when an anchor is
/// supplied such classes keep the anchor's line and only their fixed
/// contribution is removed from the response before solving the rest. This is
/// the exact minimizer over the remaining coefficients, so iterating from the
/// anchor never increases the fitting error.
PathLossParams solve_theta(const Dataset& data, const std::vector<std::vector<double>>& likelihoods,
                           double ridge, const PathLossParams* anchor = nullptr,
                           double min_class_mass = 0.0);

/// Initial path-loss parameters from a line-mixture refinement on (log10
/// distance, rss): global line fit, residual-quantile bands, then alternating
/// per-band refits and reassignment. Class 0 gets the strongest fitted gain.
PathLossParams init_theta(const Dataset& data, int classes, int em_iters);

/// Objective evaluated while sweeping obstacle (cell, k) over z_grid_size
/// uniform heights in [0, h_max]; all other heights and theta stay fixed.
HeightProfile height_profile(const Dataset& data, const PathLossParams& theta,
                             const ObstacleMap& map, const SoftFilter& filter, int cell, int k,
                             int z_grid_size);

/// Slope of a local linear fit to the profile at height h, weighted by an
/// Epanechnikov kernel of bandwidth b (doubled until two points fall inside).
double local_poly_slope(const HeightProfile& profile, double h, double b);

/// Height for obstacle (cell, k) minimizing the fitting error with everything
/// else fixed. The error is piecewise constant in this height, jumping only
/// where a displaced link crosses the cell, so the search walks those critical
/// altitudes and returns the top of the last interval attaining the minimum:
/// just below the altitude where the error next rises, or h_max when the
/// minimum extends to the ceiling (e.g. an untouched cell).
double bisect_height(const Dataset& data, const PathLossParams& theta, const ObstacleMap& map,
                     const SoftFilter& filter, int cell, int k, const FitConfig& cfg);

/// Joint estimate of path-loss parameters and obstacle heights by coordinate
/// descent: sweeps bisect_height over all (cell, class) entries from class K
/// down to 1, re-enforces the class-height ordering, then refreshes theta.
FitResult fit(const Dataset& data, const GridSpec& grid, const SoftFilter& filter,
              const FitConfig& cfg);

}  // namespace radiomap
