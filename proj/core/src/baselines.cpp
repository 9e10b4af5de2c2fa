#include "radiomap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "radiomap/estimator.hpp"

namespace radiomap {

namespace {

double sq(double v) { return v * v; }

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    double at(double d) const { return intercept + slope * d; }
};

Line fit_global_line(const std::vector<double>& d, const std::vector<double>& y,
                     const std::vector<int>& idx) {
    if (idx.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(idx.size());
    double sd = 0.0, sy = 0.0, sdd = 0.0, sdy = 0.0;
    for (int i : idx) {
        sd += d[static_cast<std::size_t>(i)];
        sy += y[static_cast<std::size_t>(i)];
        sdd += sq(d[static_cast<std::size_t>(i)]);
        sdy += d[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    }
    const double var = sdd - sd * sd / n;
    if (var <= 1e-12) return {0.0, sy / n};
    const double slope = (sdy - sd * sy / n) / var;
    return {slope, (sy - slope * sd) / n};
}

constexpr int kPhiBins = 18;

int phi_bin(double phi) {
    const double width = std::numbers::pi / 2.0 / kPhiBins;
    const int bin = static_cast<int>(std::floor(phi / width));
    return std::clamp(bin, 0, kPhiBins - 1);
}

}  // namespace

double knn_predict(const Link& query, const Dataset& data, int k, double scale) {
    const int n = static_cast<int>(data.size());
    if (k < 1) throw std::invalid_argument("k must be positive");
    if (n < k) throw std::invalid_argument("need at least k measurements");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");

    std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double d2 = sq(link_distance(data.records[static_cast<std::size_t>(i)].link, query));
        order[static_cast<std::size_t>(i)] = {d2, i};
    }
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end());
    std::sort(order.begin(), order.begin() + k);

    double sw = 0.0, sy = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = std::exp(-order[static_cast<std::size_t>(i)].first / (2.0 * scale * scale));
        sw += w;
        sy += w * data.records[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)].rss;
    }
    if (sw <= 0.0) {
        // All weights underflowed; fall back to the plain k-neighbor mean.
        double mean = 0.0;
        for (int i = 0; i < k; ++i)
            mean +=
                data.records[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)].rss;
        return mean / k;
    }
    return sy / sw;
}

KrigingBaseline::KrigingBaseline(const Dataset& data, int n_neighbors, std::size_t max_pairs,
                                 std::uint64_t seed)
    : n_neighbors_(n_neighbors) {
    if (data.size() < 10) throw std::invalid_argument("kriging baseline needs at least 10 records");
    const int n = static_cast<int>(data.size());
    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<double> y(static_cast<std::size_t>(n));
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d[static_cast<std::size_t>(i)] = log_distance(data.records[static_cast<std::size_t>(i)].link);
        y[static_cast<std::size_t>(i)] = data.records[static_cast<std::size_t>(i)].rss;
        all[static_cast<std::size_t>(i)] = i;
    }
    const Line line = fit_global_line(d, y, all);
    slope_ = line.slope;
    intercept_ = line.intercept;

    std::vector<ResidualRecord> records;
    records.reserve(data.size());
    for (int i = 0; i < n; ++i)
        records.push_back({data.records[static_cast<std::size_t>(i)].link,
                           y[static_cast<std::size_t>(i)] - line.at(d[static_cast<std::size_t>(i)])});
    store_ = ResidualStore(std::move(records));
    variogram_ = fit_variogram(store_, max_pairs, seed);
}

double KrigingBaseline::predict(const Link& query) const {
    const double trend = intercept_ + slope_ * log_distance(query);
    return trend + krige(store_, variogram_, query, n_neighbors_);
}

double kriging_baseline_predict(const Link& query, const Dataset& data) {
    return KrigingBaseline(data).predict(query);
}

double elevation_angle(const Link& link) {
    const double dist = norm(link.aerial - link.user);
    if (!(dist > 0.0)) throw std::invalid_argument("link endpoints coincide");
    const double ratio = std::clamp((link.aerial.z - link.user.z) / dist, -1.0, 1.0);
    return std::clamp(std::asin(ratio), 0.0, std::numbers::pi / 2.0);
}

StatModel stat_fit(const Dataset& data, const std::vector<int>* labels, int em_iters) {
    const int n = static_cast<int>(data.size());
    if (n < 50) throw std::invalid_argument("statistical model needs at least 50 records");
    if (labels && labels->size() != data.size())
        throw std::invalid_argument("label count must match the records");

    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d[static_cast<std::size_t>(i)] = log_distance(data.records[static_cast<std::size_t>(i)].link);
        y[static_cast<std::size_t>(i)] = data.records[static_cast<std::size_t>(i)].rss;
    }

    std::vector<int> assignment(static_cast<std::size_t>(n), 0);
    if (labels) {
        for (int i = 0; i < n; ++i)
            assignment[static_cast<std::size_t>(i)] = (*labels)[static_cast<std::size_t>(i)] ? 1 : 0;
    } else {
        const PathLossParams mix = init_theta(data, 1, em_iters);
        for (int i = 0; i < n; ++i) {
            const double e0 = sq(y[static_cast<std::size_t>(i)] -
                                 mix.path_loss(0, d[static_cast<std::size_t>(i)]));
            const double e1 = sq(y[static_cast<std::size_t>(i)] -
                                 mix.path_loss(1, d[static_cast<std::size_t>(i)]));
            assignment[static_cast<std::size_t>(i)] = e1 < e0 ? 1 : 0;
        }
    }

    std::vector<int> los_idx, nlos_idx;
    for (int i = 0; i < n; ++i)
        (assignment[static_cast<std::size_t>(i)] == 0 ? los_idx : nlos_idx).push_back(i);

    const Line los_line = fit_global_line(d, y, los_idx.empty() ? nlos_idx : los_idx);
    const Line nlos_line = fit_global_line(d, y, nlos_idx.empty() ? los_idx : nlos_idx);

    StatModel model;
    model.a0 = los_line.intercept;
    model.b0 = los_line.slope;
    model.a1 = nlos_line.intercept;
    model.b1 = nlos_line.slope;
    model.phi_edges.resize(kPhiBins + 1);
    for (int b = 0; b <= kPhiBins; ++b)
        model.phi_edges[static_cast<std::size_t>(b)] = std::numbers::pi / 2.0 * b / kPhiBins;

    std::vector<int> total(kPhiBins, 0), los(kPhiBins, 0);
    for (int i = 0; i < n; ++i) {
        const int b = phi_bin(elevation_angle(data.records[static_cast<std::size_t>(i)].link));
        ++total[static_cast<std::size_t>(b)];
        if (assignment[static_cast<std::size_t>(i)] == 0) ++los[static_cast<std::size_t>(b)];
    }
    model.p_los.assign(kPhiBins, 0.0);
    for (int b = 0; b < kPhiBins; ++b)
        if (total[static_cast<std::size_t>(b)] > 0)
            model.p_los[static_cast<std::size_t>(b)] =
                static_cast<double>(los[static_cast<std::size_t>(b)]) /
                total[static_cast<std::size_t>(b)];
    // Empty bins inherit the nearest populated bin's probability (lower index
    // on ties).
    for (int b = 0; b < kPhiBins; ++b) {
        if (total[static_cast<std::size_t>(b)] > 0) continue;
        int best = -1;
        for (int other = 0; other < kPhiBins; ++other) {
            if (total[static_cast<std::size_t>(other)] == 0) continue;
            if (best < 0 || std::abs(other - b) < std::abs(best - b)) best = other;
        }
        if (best >= 0)
            model.p_los[static_cast<std::size_t>(b)] = model.p_los[static_cast<std::size_t>(best)];
    }
    return model;
}

double stat_predict(const StatModel& model, const Link& query) {
    if (model.p_los.size() != kPhiBins) throw std::invalid_argument("model is not fitted");
    const double d = log_distance(query);
    const double p = model.p_los[static_cast<std::size_t>(phi_bin(elevation_angle(query)))];
    return p * (model.a0 + model.b0 * d) + (1.0 - p) * (model.a1 + model.b1 * d);
}

}  // namespace radiomap
