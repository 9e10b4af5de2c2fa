#pragma once

#include <cmath>
#include <vector>

namespace radiomap {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Uniform square ground grid. Cell m = iy*nx + ix covers
/// [origin_x + ix*spacing, origin_x + (ix+1)*spacing) x [origin_y + iy*spacing, ...).
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double spacing = 1.0;  // meters per cell edge
    int nx = 1;
    int ny = 1;
    double h_max = 1.0;  // tallest representable obstacle, meters

    int cell_count() const { return nx * ny; }
    bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }
    int cell_index(int ix, int iy) const { return iy * nx + ix; }
    double cell_center_x(int ix) const { return origin_x + (ix + 0.5) * spacing; }
    double cell_center_y(int iy) const { return origin_y + (iy + 0.5) * spacing; }
    void validate() const;  // throws std::invalid_argument
};

/// One ground-user / aerial-node position pair: the 6D coordinate of a channel.
struct Link {
    Vec3 user;
    Vec3 aerial;
};

/// Euclidean distance between two links with user and aerial coordinates stacked.
double link_distance(const Link& a, const Link& b);

struct TracedCell {
    int cell = 0;    // grid cell index
    double z = 0.0;  // lowest altitude of the direct path over the cell, meters
};

/// Cells covered by a link's ground projection, ordered along the path.
struct LinkTrace {
    std::vector<TracedCell> cells;
    bool empty() const { return cells.empty(); }
};

/// Supercover traversal of the link's ground projection: every cell the segment
/// passes through or touches (corner touches included). Cells outside the grid
/// are dropped. For each cell, z is the minimum altitude of the segment over
/// the cell footprint. A purely vertical link yields exactly one cell.
LinkTrace trace_link(const Link& link, const GridSpec& grid);

/// log10 of the 3D endpoint distance in meters. Throws on coincident endpoints.
double log_distance(const Link& link);

}  // namespace radiomap
