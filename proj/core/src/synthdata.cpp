#include "radiomap/synthdata.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radiomap {

namespace {

constexpr int kMaxRejections = 10000;

bool inside_footprint(const Building& b, double x, double y) {
    return x >= b.x_min && x <= b.x_max && y >= b.y_min && y <= b.y_max;
}

std::vector<double> draw_shadowing(const std::vector<Link>& links, const ShadowingSpec& spec,
                                   Rng& rng) {
    std::vector<double> xi(links.size(), 0.0);
    switch (spec.kind) {
        case ShadowingKind::none:
            break;
        case ShadowingKind::iid:
            for (double& v : xi) v = spec.alpha_s * rng.normal();
            break;
        case ShadowingKind::gp:
            xi = sample_gp(links, spec.alpha_s, spec.alpha_r, rng);
            break;
    }
    return xi;
}

}  // namespace

void EnvironmentSpec::validate() const {
    grid.validate();
    if (classes < 1) throw std::invalid_argument("environment needs at least one class");
    theta_true.validate(classes);
    truth_filter.validate();
    const double x_lo = grid.origin_x;
    const double x_hi = grid.origin_x + grid.nx * grid.spacing;
    const double y_lo = grid.origin_y;
    const double y_hi = grid.origin_y + grid.ny * grid.spacing;
    for (const Building& b : buildings) {
        if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max))
            throw std::invalid_argument("building footprint must have positive area");
        if (b.x_min < x_lo || b.x_max > x_hi || b.y_min < y_lo || b.y_max > y_hi)
            throw std::invalid_argument("building footprint must lie inside the area");
        if (!(b.height >= 0.0) || !(b.height <= grid.h_max))
            throw std::invalid_argument("building height must lie in [0, h_max]");
        if (b.cls < 1 || b.cls > classes)
            throw std::invalid_argument("building class must lie in [1, K]");
    }
    if (!(sigma_n >= 0.0)) throw std::invalid_argument("sigma_n must be non-negative");
    if (!(shadowing.alpha_s >= 0.0))
        throw std::invalid_argument("shadowing alpha_s must be non-negative");
    if (shadowing.kind == ShadowingKind::gp && !(shadowing.alpha_r > 0.0))
        throw std::invalid_argument("shadowing alpha_r must be positive");
    if (sampling.n_users < 1) throw std::invalid_argument("need at least one user");
    if (sampling.n_links < 1) throw std::invalid_argument("need at least one link");
    if (!(sampling.altitude_min <= sampling.altitude_max))
        throw std::invalid_argument("altitude range is inverted");
    if (!(sampling.user_altitude >= 0.0))
        throw std::invalid_argument("user altitude must be non-negative");
    if (!(sampling.train_fraction >= 0.0) || !(sampling.train_fraction <= 1.0))
        throw std::invalid_argument("train_fraction must lie in [0, 1]");
}

ObstacleMap rasterize_truth(const EnvironmentSpec& spec) {
    spec.validate();
    ObstacleMap map(spec.grid, spec.classes, 0.0);
    for (int iy = 0; iy < spec.grid.ny; ++iy) {
        for (int ix = 0; ix < spec.grid.nx; ++ix) {
            const double cx_lo = spec.grid.origin_x + ix * spec.grid.spacing;
            const double cx_hi = cx_lo + spec.grid.spacing;
            const double cy_lo = spec.grid.origin_y + iy * spec.grid.spacing;
            const double cy_hi = cy_lo + spec.grid.spacing;
            const int cell = spec.grid.cell_index(ix, iy);
            for (const Building& b : spec.buildings) {
                const double overlap_x = std::min(b.x_max, cx_hi) - std::max(b.x_min, cx_lo);
                const double overlap_y = std::min(b.y_max, cy_hi) - std::max(b.y_min, cy_lo);
                if (overlap_x <= 0.0 || overlap_y <= 0.0) continue;
                for (int l = 1; l <= b.cls; ++l)
                    if (b.height > map.height(cell, l)) map.set_height(cell, l, b.height);
            }
        }
    }
    map.enforce_class_ordering();  // already ordered by nesting; kept as a safety net
    return map;
}

std::vector<Vec3> sample_users(const EnvironmentSpec& spec, int n_users, Rng& rng) {
    if (n_users < 1) throw std::invalid_argument("need at least one user");
    const double x_lo = spec.grid.origin_x;
    const double x_hi = spec.grid.origin_x + spec.grid.nx * spec.grid.spacing;
    const double y_lo = spec.grid.origin_y;
    const double y_hi = spec.grid.origin_y + spec.grid.ny * spec.grid.spacing;
    std::vector<Vec3> users;
    users.reserve(static_cast<std::size_t>(n_users));
    for (int u = 0; u < n_users; ++u) {
        int attempts = 0;
        while (true) {
            if (++attempts > kMaxRejections)
                throw std::runtime_error("could not place a user outside the buildings");
            const double x = rng.uniform(x_lo, x_hi);
            const double y = rng.uniform(y_lo, y_hi);
            bool blocked = false;
            for (const Building& b : spec.buildings)
                if (inside_footprint(b, x, y)) {
                    blocked = true;
                    break;
                }
            if (!blocked) {
                users.push_back({x, y, spec.sampling.user_altitude});
                break;
            }
        }
    }
    return users;
}

std::vector<Link> sample_links(const EnvironmentSpec& spec, int n_users, int n_aerial,
                               double alt_min, double alt_max, Rng& rng) {
    if (n_aerial < 1) throw std::invalid_argument("need at least one link");
    if (!(alt_min <= alt_max)) throw std::invalid_argument("altitude range is inverted");
    const std::vector<Vec3> users = sample_users(spec, n_users, rng);
    const double x_lo = spec.grid.origin_x;
    const double x_hi = spec.grid.origin_x + spec.grid.nx * spec.grid.spacing;
    const double y_lo = spec.grid.origin_y;
    const double y_hi = spec.grid.origin_y + spec.grid.ny * spec.grid.spacing;
    std::vector<Link> links;
    links.reserve(static_cast<std::size_t>(n_aerial));
    while (static_cast<int>(links.size()) < n_aerial) {
        const Vec3& user = users[rng.uniform_index(users.size())];
        const Vec3 aerial{rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi),
                          rng.uniform(alt_min, alt_max)};
        if (norm(aerial - user) <= 1e-9) continue;  // degenerate pair, redraw
        links.push_back({user, aerial});
    }
    return links;
}

std::vector<double> sample_gp(const std::vector<Link>& links, double alpha_s, double alpha_r,
                              Rng& rng) {
    if (!(alpha_s >= 0.0)) throw std::invalid_argument("alpha_s must be non-negative");
    if (!(alpha_r > 0.0)) throw std::invalid_argument("alpha_r must be positive");
    const Eigen::Index n = static_cast<Eigen::Index>(links.size());
    std::vector<double> xi(links.size(), 0.0);
    if (n == 0 || alpha_s == 0.0) {
        // Keep the stream layout identical whether or not the draw is degenerate.
        for (Eigen::Index i = 0; i < n; ++i) rng.normal();
        return xi;
    }
    const double variance = alpha_s * alpha_s;
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cov(i, i) = variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = link_distance(links[static_cast<std::size_t>(i)],
                                           links[static_cast<std::size_t>(j)]);
            const double c = variance * std::exp(-d / alpha_r);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();

    double jitter = 1e-10 * variance;
    for (int attempt = 0; attempt < 6; ++attempt) {
        Eigen::MatrixXd jittered = cov;
        jittered.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(jittered);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd sample = llt.matrixL() * z;
            for (Eigen::Index i = 0; i < n; ++i) xi[static_cast<std::size_t>(i)] = sample[i];
            return xi;
        }
        jitter *= 100.0;
    }
    throw std::runtime_error("shadowing covariance is not positive definite");
}

Dataset simulate_rss(const std::vector<Link>& links, const EnvironmentSpec& spec,
                     const ObstacleMap& truth) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<double> xi = draw_shadowing(links, spec.shadowing, rng);
    Dataset data;
    data.records.reserve(links.size());
    for (std::size_t i = 0; i < links.size(); ++i) {
        const double gain =
            deterministic_gain(links[i], spec.theta_true, truth, spec.truth_filter);
        data.records.push_back({links[i], gain + xi[i] + spec.sigma_n * rng.normal()});
    }
    return data;
}

SyntheticData generate_synthetic(const EnvironmentSpec& spec) {
    spec.validate();
    ObstacleMap truth = rasterize_truth(spec);
    Rng rng(spec.seed);
    std::vector<Link> links =
        sample_links(spec, spec.sampling.n_users, spec.sampling.n_links,
                     spec.sampling.altitude_min, spec.sampling.altitude_max, rng);
    std::vector<double> xi = draw_shadowing(links, spec.shadowing, rng);

    std::vector<double> reference(links.size());
    for (std::size_t i = 0; i < links.size(); ++i)
        reference[i] =
            deterministic_gain(links[i], spec.theta_true, truth, spec.truth_filter) + xi[i];

    const auto n_train = static_cast<std::size_t>(std::lround(
        spec.sampling.train_fraction * static_cast<double>(links.size())));

    SyntheticData out{Dataset{}, Dataset{}, {}, std::move(truth)};
    out.train.records.reserve(n_train);
    out.train_reference.reserve(n_train);
    for (std::size_t i = 0; i < n_train && i < links.size(); ++i) {
        out.train.records.push_back({links[i], reference[i] + spec.sigma_n * rng.normal()});
        out.train_reference.push_back(reference[i]);
    }
    out.test.records.reserve(links.size() - out.train.records.size());
    for (std::size_t i = out.train.records.size(); i < links.size(); ++i)
        out.test.records.push_back({links[i], reference[i]});
    return out;
}

}  // namespace radiomap
