#pragma once

#include <cstdint>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/obstacle.hpp"
#include "radiomap/propagation.hpp"
#include "radiomap/rng.hpp"

namespace radiomap {

/// Axis-aligned building with an obstruction class in [1, K]. Obstruction
/// strength is nested: a class-k building also obstructs at every weaker
/// strength, so rasterization raises h_{m,l} for all l <= k.
struct Building {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double height = 0.0;
    int cls = 1;
};

enum class ShadowingKind { none, iid, gp };

struct ShadowingSpec {
    ShadowingKind kind = ShadowingKind::none;
    double alpha_s = 0.0;  // shadowing scale, dB
    double alpha_r = 1.0;  // correlation range, meters (gp only)
};

struct SamplingSpec {
    int n_users = 20;
    int n_links = 1000;
    double altitude_min = 20.0;
    double altitude_max = 120.0;
    double user_altitude = 1.5;
    double train_fraction = 0.8;
};

/// Ground-truth environment description: geometry, propagation parameters,
/// noise, and sampling plan. All generator outputs are pure functions of the
/// spec (including its seed).
struct EnvironmentSpec {
    GridSpec grid;
    int classes = 1;
    std::vector<Building> buildings;
    PathLossParams theta_true;
    double sigma_n = 0.0;  // measurement-noise standard deviation, dB
    ShadowingSpec shadowing;
    SoftFilter truth_filter = SoftFilter::point();
    SamplingSpec sampling;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

/// Ground-truth obstacle heights: h_{m,k} is the tallest building of class
/// >= k whose footprint overlaps cell m with positive area.
ObstacleMap rasterize_truth(const EnvironmentSpec& spec);

/// Uniform ground positions at the spec's user altitude, rejected while they
/// fall inside any building footprint (error after 10^4 straight rejections).
std::vector<Vec3> sample_users(const EnvironmentSpec& spec, int n_users, Rng& rng);

/// n_aerial links: aerial endpoints uniform over the area at a uniform
/// altitude in [alt_min, alt_max], each paired with a uniformly chosen user.
std::vector<Link> sample_links(const EnvironmentSpec& spec, int n_users, int n_aerial,
                               double alt_min, double alt_max, Rng& rng);

/// Correlated shadowing draw with covariance alpha_s^2 exp(-d/alpha_r) over
/// the links' 6D distances (joint Cholesky sample).
std::vector<double> sample_gp(const std::vector<Link>& links, double alpha_s, double alpha_r,
                              Rng& rng);

/// Measured RSS for the given links: truth gain + configured shadowing +
/// Gaussian measurement noise, all drawn from Rng(spec.seed).
Dataset simulate_rss(const std::vector<Link>& links, const EnvironmentSpec& spec,
                     const ObstacleMap& truth);

struct SyntheticData {
    Dataset train;  // rss = gain + shadowing + measurement noise
    Dataset test;   // rss = gain + shadowing (noise-free reference)
    std::vector<double> train_reference;  // noise-free gain + shadowing at train links
    ObstacleMap truth;
};

/// Full generation pipeline from one seeded stream: rasterize, sample users
/// and links, draw shadowing jointly over all links, split train/test by
/// sampling.train_fraction, and add measurement noise to the training split.
SyntheticData generate_synthetic(const EnvironmentSpec& spec);

}  // namespace radiomap
