#pragma once

#include <cstdint>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/obstacle.hpp"
#include "radiomap/propagation.hpp"

namespace radiomap {

/// Exponential semivariogram v(u) = alpha_s^2 * (1 - exp(-u / alpha_r)) with a
/// separate nugget attributed to measurement noise. Distances are 6D link
/// distances in meters.
struct Variogram {
    double alpha_s = 0.0;   // sill scale, dB
    double alpha_r = 1.0;   // range, meters
    double sigma_n2 = 0.0;  // measurement-noise variance, dB^2

    double value(double u) const;
    void validate() const;  // throws std::invalid_argument
};

/// One interpolation support point: a measured link and its residual value.
struct ResidualRecord {
    Link link;
    double value = 0.0;
};

/// Residual collection with a 6D kd-tree for nearest-link queries.
class ResidualStore {
public:
    ResidualStore() = default;
    explicit ResidualStore(std::vector<ResidualRecord> records);

    std::size_t size() const { return records_.size(); }
    const std::vector<ResidualRecord>& records() const { return records_; }

    /// Indices of the n closest links to the query, ordered by increasing
    /// distance (ties by index). n <= 0 or n >= size returns all of them.
    std::vector<int> nearest(const Link& query, int n) const;

private:
    void build(int lo, int hi, int depth);

    std::vector<ResidualRecord> records_;
    std::vector<int> tree_;  // binary-partitioned permutation of record indices
};

/// Ordinary-kriging weights for a query link over its nearest neighbors. The
/// weights sum to one; `fallback` marks an ill-conditioned system replaced by
/// normalized inverse-distance weights.
struct KrigeWeights {
    std::vector<int> indices;
    std::vector<double> weights;
    double mu = 0.0;  // Lagrange multiplier of the unit-sum constraint
    bool fallback = false;
};

KrigeWeights krige_weights(const ResidualStore& store, const Variogram& variogram,
                           const Link& query, int n_neighbors);

/// Interpolated residual at the query link.
double krige(const ResidualStore& store, const Variogram& variogram, const Link& query,
             int n_neighbors);

/// Per-record residuals rss - deterministic_gain for the whole dataset.
ResidualStore extract_residuals(const Dataset& data, const PathLossParams& theta,
                                const ObstacleMap& map, const SoftFilter& filter);

/// Fit the exponential semivariogram and noise nugget to binned empirical
/// semivariances over (a seeded subsample of) record pairs. Needs at least 10
/// records.
Variogram fit_variogram(const ResidualStore& store, std::size_t max_pairs = 100000,
                        std::uint64_t seed = 0);

}  // namespace radiomap
