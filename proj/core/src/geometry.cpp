#include "radiomap/geometry.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace radiomap {

void GridSpec::validate() const {
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid needs at least one cell");
    if (!(h_max > 0.0)) throw std::invalid_argument("grid h_max must be positive");
}

double link_distance(const Link& a, const Link& b) {
    const Vec3 du = a.user - b.user;
    const Vec3 dd = a.aerial - b.aerial;
    return std::sqrt(dot(du, du) + dot(dd, dd));
}

double log_distance(const Link& link) {
    const double d = norm(link.aerial - link.user);
    if (!(d > 0.0)) throw std::invalid_argument("degenerate link: endpoints coincide");
    return std::log10(d);
}

namespace {

constexpr double kBoundaryEps = 1e-9;  // grid units

// Cells containing or touching a point (grid units). A coordinate sitting on a
// cell boundary contributes both neighbors, a lattice corner all four.
void cells_at(double gx, double gy, const GridSpec& grid, std::vector<int>& out) {
    int xi[2];
    int xn = 0;
    const double rx = std::round(gx);
    if (std::abs(gx - rx) <= kBoundaryEps) {
        xi[xn++] = static_cast<int>(rx) - 1;
        xi[xn++] = static_cast<int>(rx);
    } else {
        xi[xn++] = static_cast<int>(std::floor(gx));
    }
    int yi[2];
    int yn = 0;
    const double ry = std::round(gy);
    if (std::abs(gy - ry) <= kBoundaryEps) {
        yi[yn++] = static_cast<int>(ry) - 1;
        yi[yn++] = static_cast<int>(ry);
    } else {
        yi[yn++] = static_cast<int>(std::floor(gy));
    }
    for (int a = 0; a < xn; ++a)
        for (int b = 0; b < yn; ++b)
            if (grid.in_bounds(xi[a], yi[b])) out.push_back(grid.cell_index(xi[a], yi[b]));
}

}  // namespace

LinkTrace trace_link(const Link& link, const GridSpec& grid) {
    grid.validate();
    const double inv = 1.0 / grid.spacing;
    const double ax = (link.user.x - grid.origin_x) * inv;
    const double ay = (link.user.y - grid.origin_y) * inv;
    const double bx = (link.aerial.x - grid.origin_x) * inv;
    const double by = (link.aerial.y - grid.origin_y) * inv;
    const double za = link.user.z;
    const double zb = link.aerial.z;
    const double dx = bx - ax;
    const double dy = by - ay;

    if (std::abs(dx) <= kBoundaryEps && std::abs(dy) <= kBoundaryEps) {
        const int ix = static_cast<int>(std::floor(ax));
        const int iy = static_cast<int>(std::floor(ay));
        LinkTrace trace;
        if (grid.in_bounds(ix, iy))
            trace.cells.push_back({grid.cell_index(ix, iy), std::min(za, zb)});
        return trace;
    }

    // Segment parameters where the ground projection crosses a grid line.
    std::vector<double> ts{0.0, 1.0};
    auto add_crossings = [&ts](double a, double d) {
        if (std::abs(d) <= kBoundaryEps) return;
        const double lo = std::min(a, a + d);
        const double hi = std::max(a, a + d);
        for (int i = static_cast<int>(std::ceil(lo)); i <= static_cast<int>(std::floor(hi)); ++i) {
            const double t = (static_cast<double>(i) - a) / d;
            if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
    };
    add_crossings(ax, dx);
    add_crossings(ay, dy);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return b - a < 1e-12; }),
             ts.end());

    struct Hit {
        double z;
        double first_t;
    };
    std::map<int, Hit> hits;
    auto add = [&hits](int cell, double z, double t) {
        auto [it, inserted] = hits.try_emplace(cell, Hit{z, t});
        if (!inserted) {
            it->second.z = std::min(it->second.z, z);
            it->second.first_t = std::min(it->second.first_t, t);
        }
    };
    auto alt = [za, zb](double t) { return za + t * (zb - za); };

    std::vector<int> cells;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        cells.clear();
        cells_at(ax + t * dx, ay + t * dy, grid, cells);
        for (int c : cells) add(c, alt(t), t);
        if (i + 1 < ts.size()) {
            const double t2 = ts[i + 1];
            const double tm = 0.5 * (t + t2);
            const double zmin = std::min(alt(t), alt(t2));
            cells.clear();
            cells_at(ax + tm * dx, ay + tm * dy, grid, cells);
            for (int c : cells) add(c, zmin, t);
        }
    }

    std::vector<std::pair<double, TracedCell>> ordered;
    ordered.reserve(hits.size());
    for (const auto& [cell, hit] : hits) ordered.push_back({hit.first_t, {cell, hit.z}});
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.cell < b.second.cell;
    });

    LinkTrace trace;
    trace.cells.reserve(ordered.size());
    for (const auto& [t, tc] : ordered) trace.cells.push_back(tc);
    return trace;
}

}  // namespace radiomap
