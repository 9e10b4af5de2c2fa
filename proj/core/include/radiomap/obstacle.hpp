#pragma once

#include <array>
#include <vector>

#include "radiomap/geometry.hpp"

namespace radiomap {

/// Per-cell virtual-obstacle heights for K obstacle classes. Class indices run
/// 1..K; larger k means stronger obstruction (class 0 is free space and has no
/// height). Maintained row convention: h(m,1) >= h(m,2) >= ... >= h(m,K).
class ObstacleMap {
public:
    ObstacleMap(GridSpec grid, int classes, double initial_height = 0.0);

    const GridSpec& grid() const { return grid_; }
    int classes() const { return classes_; }
    double height(int cell, int k) const { return heights_[index(cell, k)]; }
    void set_height(int cell, int k, double h);
    /// Clip each row so heights are non-increasing in the class index.
    void enforce_class_ordering();

    const std::vector<double>& raw() const { return heights_; }
    std::vector<double>& raw() { return heights_; }

private:
    std::size_t index(int cell, int k) const {
        return static_cast<std::size_t>(cell) * classes_ + static_cast<std::size_t>(k - 1);
    }
    GridSpec grid_;
    int classes_;
    std::vector<double> heights_;  // cell-major, K entries per cell
};

/// Spatial low-pass filter over link displacements: J offsets (6D, the first
/// one zero) with positive weights that sum to exactly one.
struct SoftFilter {
    std::vector<std::array<double, 6>> offsets;
    std::vector<double> weights;
    double sigma_w = 0.0;

    std::size_t size() const { return offsets.size(); }
    bool is_point() const { return offsets.size() == 1; }
    void validate() const;
    static SoftFilter point();
};

enum class FilterMode { point, cross };

/// Build a point filter (J=1) or the nine-point cross filter that displaces
/// both link endpoints jointly in the horizontal plane by distance delta.
/// Weights are Gaussian in the 6D offset norm with scale sigma_w, floored so
/// the center weight is at least 2/3, and snapped to multiples of 2^-50 so any
/// partial sum is exact.
SoftFilter make_filter(double sigma_w, double delta, FilterMode mode);

/// Link displaced by a 6D offset; endpoint altitudes are clamped at ground level.
Link apply_offset(const Link& link, const std::array<double, 6>& offset);

/// Largest class whose obstacle reaches the path over some traced cell, or 0
/// when nothing intersects. A height equal to the critical altitude blocks.
int hard_region(const LinkTrace& trace, const ObstacleMap& map);

/// Filter-weighted fractions (S_0..S_K) of the offset links falling in each
/// propagation region. The entries sum to exactly one.
std::vector<double> soft_likelihood(const Link& link, const ObstacleMap& map,
                                    const SoftFilter& filter, const GridSpec& grid);

}  // namespace radiomap
