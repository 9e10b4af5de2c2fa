#include "radiomap/obstacle.hpp"

#include <cmath>
#include <stdexcept>

namespace radiomap {

ObstacleMap::ObstacleMap(GridSpec grid, int classes, double initial_height)
    : grid_(grid), classes_(classes) {
    grid_.validate();
    if (classes_ < 1) throw std::invalid_argument("obstacle map needs at least one class");
    if (initial_height < 0.0 || initial_height > grid_.h_max)
        throw std::invalid_argument("initial obstacle height outside [0, h_max]");
    heights_.assign(static_cast<std::size_t>(grid_.cell_count()) * classes_, initial_height);
}

void ObstacleMap::set_height(int cell, int k, double h) {
    if (cell < 0 || cell >= grid_.cell_count()) throw std::invalid_argument("cell out of range");
    if (k < 1 || k > classes_) throw std::invalid_argument("obstacle class out of range");
    if (!(h >= 0.0) || h > grid_.h_max)
        throw std::invalid_argument("obstacle height outside [0, h_max]");
    heights_[index(cell, k)] = h;
}

void ObstacleMap::enforce_class_ordering() {
    for (int m = 0; m < grid_.cell_count(); ++m)
        for (int k = 2; k <= classes_; ++k) {
            const std::size_t i = index(m, k);
            if (heights_[i] > heights_[i - 1]) heights_[i] = heights_[i - 1];
        }
}

void SoftFilter::validate() const {
    if (offsets.empty() || offsets.size() != weights.size())
        throw std::invalid_argument("filter offsets and weights must be non-empty and aligned");
    for (double c : offsets[0])
        if (c != 0.0) throw std::invalid_argument("filter center offset must be zero");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("filter weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("filter weights must sum to one");
    if (weights[0] < 2.0 / 3.0 - 1e-12)
        throw std::invalid_argument("filter center weight must be at least 2/3");
}

SoftFilter SoftFilter::point() {
    SoftFilter f;
    f.offsets.push_back({0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    f.weights.push_back(1.0);
    return f;
}

SoftFilter make_filter(double sigma_w, double delta, FilterMode mode) {
    if (!(sigma_w > 0.0)) throw std::invalid_argument("filter sigma_w must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("filter delta must be positive");
    if (mode == FilterMode::point) {
        SoftFilter f = SoftFilter::point();
        f.sigma_w = sigma_w;
        return f;
    }

    SoftFilter f;
    f.sigma_w = sigma_w;
    const double r = delta / std::sqrt(2.0);
    const double dirs[8][2] = {{delta, 0.0}, {-delta, 0.0}, {0.0, delta}, {0.0, -delta},
                               {r, r},       {r, -r},       {-r, r},      {-r, -r}};
    f.offsets.push_back({0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    for (const auto& d : dirs) f.offsets.push_back({d[0], d[1], 0.0, d[0], d[1], 0.0});

    std::vector<double> w(9, 0.0);
    w[0] = 1.0;
    for (int j = 1; j < 9; ++j) {
        double n2 = 0.0;
        for (double c : f.offsets[j]) n2 += c * c;
        w[j] = std::exp(-n2 / (sigma_w * sigma_w));
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    if (w[0] < 2.0 / 3.0) {
        const double scale = (1.0 / 3.0) / (1.0 - w[0]);
        for (int j = 1; j < 9; ++j) w[j] *= scale;
        w[0] = 2.0 / 3.0;
    }
    // Snap the outer weights to multiples of 2^-50 and give the center the
    // exact remainder: every subset sum is then exact in double precision, so
    // the region fractions always add up to exactly one.
    const double q = 0x1p50;
    double tail = 0.0;
    for (int j = 1; j < 9; ++j) {
        w[j] = std::max(1.0, std::floor(w[j] * q)) / q;
        tail += w[j];
    }
    w[0] = 1.0 - tail;
    f.weights = w;
    f.validate();
    return f;
}

Link apply_offset(const Link& link, const std::array<double, 6>& off) {
    Link out = link;
    out.user.x += off[0];
    out.user.y += off[1];
    out.user.z = std::max(0.0, out.user.z + off[2]);
    out.aerial.x += off[3];
    out.aerial.y += off[4];
    out.aerial.z = std::max(0.0, out.aerial.z + off[5]);
    return out;
}

int hard_region(const LinkTrace& trace, const ObstacleMap& map) {
    for (int k = map.classes(); k >= 1; --k)
        for (const TracedCell& tc : trace.cells)
            if (map.height(tc.cell, k) >= tc.z) return k;
    return 0;
}

std::vector<double> soft_likelihood(const Link& link, const ObstacleMap& map,
                                    const SoftFilter& filter, const GridSpec& grid) {
    filter.validate();
    if (grid.cell_count() != map.grid().cell_count())
        throw std::invalid_argument("soft_likelihood: grid does not match obstacle map");
    std::vector<double> s(static_cast<std::size_t>(map.classes()) + 1, 0.0);
    for (std::size_t j = 0; j < filter.size(); ++j) {
        const Link lj = apply_offset(link, filter.offsets[j]);
        if (!(norm(lj.aerial - lj.user) > 0.0))
            throw std::invalid_argument("soft_likelihood: offset link is degenerate");
        s[static_cast<std::size_t>(hard_region(trace_link(lj, grid), map))] += filter.weights[j];
    }
    return s;
}

}  // namespace radiomap
