#include "radiomap/kriging.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "radiomap/log.hpp"
#include "radiomap/rng.hpp"

namespace radiomap {

namespace {

double sq(double v) { return v * v; }

double coord(const Link& link, int axis) {
    switch (axis) {
        case 0: return link.user.x;
        case 1: return link.user.y;
        case 2: return link.user.z;
        case 3: return link.aerial.x;
        case 4: return link.aerial.y;
        default: return link.aerial.z;
    }
}

double dist2(const Link& a, const Link& b) {
    double s = 0.0;
    for (int axis = 0; axis < 6; ++axis) s += sq(coord(a, axis) - coord(b, axis));
    return s;
}

}  // namespace

double Variogram::value(double u) const {
    return alpha_s * alpha_s * (1.0 - std::exp(-u / alpha_r));
}

void Variogram::validate() const {
    if (!(alpha_s >= 0.0) || !std::isfinite(alpha_s))
        throw std::invalid_argument("variogram sill must be non-negative");
    if (!(alpha_r > 0.0) || !std::isfinite(alpha_r))
        throw std::invalid_argument("variogram range must be positive");
    if (!(sigma_n2 >= 0.0) || !std::isfinite(sigma_n2))
        throw std::invalid_argument("variogram nugget must be non-negative");
}

ResidualStore::ResidualStore(std::vector<ResidualRecord> records)
    : records_(std::move(records)) {
    for (const ResidualRecord& rec : records_)
        if (!std::isfinite(rec.value)) throw std::invalid_argument("residual must be finite");
    tree_.resize(records_.size());
    for (std::size_t i = 0; i < tree_.size(); ++i) tree_[i] = static_cast<int>(i);
    if (!tree_.empty()) build(0, static_cast<int>(tree_.size()), 0);
}

void ResidualStore::build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % 6;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(tree_.begin() + lo, tree_.begin() + mid, tree_.begin() + hi,
                     [this, axis](int a, int b) {
                         const double ca = coord(records_[static_cast<std::size_t>(a)].link, axis);
                         const double cb = coord(records_[static_cast<std::size_t>(b)].link, axis);
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
}

std::vector<int> ResidualStore::nearest(const Link& query, int n) const {
    const int count = static_cast<int>(records_.size());
    if (count == 0) return {};
    if (n <= 0 || n >= count) {
        std::vector<int> all(records_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        std::sort(all.begin(), all.end(), [this, &query](int a, int b) {
            const double da = dist2(records_[static_cast<std::size_t>(a)].link, query);
            const double db = dist2(records_[static_cast<std::size_t>(b)].link, query);
            if (da != db) return da < db;
            return a < b;
        });
        return all;
    }

    using Entry = std::pair<double, int>;  // (distance^2, index), max-heap
    std::priority_queue<Entry> heap;

    // Recursive descent over the implicit median-split layout.
    auto visit = [&](auto&& self, int lo, int hi, int depth) -> void {
        if (lo >= hi) return;
        const int mid = lo + (hi - lo) / 2;
        const int idx = tree_[static_cast<std::size_t>(mid)];
        const double d2 = dist2(records_[static_cast<std::size_t>(idx)].link, query);
        const Entry entry{d2, idx};
        if (static_cast<int>(heap.size()) < n) {
            heap.push(entry);
        } else if (entry < heap.top()) {
            heap.pop();
            heap.push(entry);
        }
        const int axis = depth % 6;
        const double split = coord(records_[static_cast<std::size_t>(idx)].link, axis);
        const double diff = coord(query, axis) - split;
        const int near_lo = diff < 0.0 ? lo : mid + 1;
        const int near_hi = diff < 0.0 ? mid : hi;
        const int far_lo = diff < 0.0 ? mid + 1 : lo;
        const int far_hi = diff < 0.0 ? hi : mid;
        self(self, near_lo, near_hi, depth + 1);
        if (static_cast<int>(heap.size()) < n || sq(diff) <= heap.top().first)
            self(self, far_lo, far_hi, depth + 1);
    };
    visit(visit, 0, count, 0);

    std::vector<Entry> picked;
    picked.reserve(heap.size());
    while (!heap.empty()) {
        picked.push_back(heap.top());
        heap.pop();
    }
    std::sort(picked.begin(), picked.end());
    std::vector<int> out;
    out.reserve(picked.size());
    for (const Entry& e : picked) out.push_back(e.second);
    return out;
}

KrigeWeights krige_weights(const ResidualStore& store, const Variogram& variogram,
                           const Link& query, int n_neighbors) {
    variogram.validate();
    if (store.size() == 0) throw std::invalid_argument("kriging needs at least one residual");

    KrigeWeights out;
    out.indices = store.nearest(query, n_neighbors);
    const int m = static_cast<int>(out.indices.size());
    const auto& recs = store.records();

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (int i = 0; i < m; ++i) {
        const Link& li = recs[static_cast<std::size_t>(out.indices[static_cast<std::size_t>(i)])].link;
        for (int j = i + 1; j < m; ++j) {
            const Link& lj =
                recs[static_cast<std::size_t>(out.indices[static_cast<std::size_t>(j)])].link;
            const double v = variogram.value(std::sqrt(dist2(li, lj)));
            a(i, j) = v;
            a(j, i) = v;
        }
        a(i, i) = -variogram.sigma_n2;
        a(i, m) = 1.0;
        a(m, i) = 1.0;
        rhs[i] = variogram.value(std::sqrt(dist2(li, query)));
    }
    a(m, m) = 0.0;
    rhs[m] = 1.0;

    const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
    const double scale = std::max(rhs.norm(), 1.0);
    const bool finite = sol.allFinite();
    const bool solves = finite && (a * sol - rhs).norm() <= 1e-6 * scale;
    if (solves) {
        out.weights.assign(sol.data(), sol.data() + m);
        out.mu = sol[m];
        return out;
    }

    // Ill-conditioned system: fall back to normalized inverse-distance weights.
    out.fallback = true;
    out.mu = 0.0;
    out.weights.assign(static_cast<std::size_t>(m), 0.0);
    double total = 0.0;
    int exact = -1;
    std::vector<double> dist(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const Link& li = recs[static_cast<std::size_t>(out.indices[static_cast<std::size_t>(i)])].link;
        dist[static_cast<std::size_t>(i)] = std::sqrt(dist2(li, query));
        if (dist[static_cast<std::size_t>(i)] == 0.0 && exact < 0) exact = i;
    }
    if (exact >= 0) {
        out.weights[static_cast<std::size_t>(exact)] = 1.0;
    } else {
        for (int i = 0; i < m; ++i) {
            out.weights[static_cast<std::size_t>(i)] = 1.0 / dist[static_cast<std::size_t>(i)];
            total += out.weights[static_cast<std::size_t>(i)];
        }
        for (double& w : out.weights) w /= total;
    }
    if (log_enabled(LogLevel::info))
        log_line(LogLevel::info, "warning: kriging system was singular; "
                                 "using inverse-distance weights");
    return out;
}

double krige(const ResidualStore& store, const Variogram& variogram, const Link& query,
             int n_neighbors) {
    const KrigeWeights w = krige_weights(store, variogram, query, n_neighbors);
    double out = 0.0;
    for (std::size_t i = 0; i < w.indices.size(); ++i)
        out += w.weights[i] * store.records()[static_cast<std::size_t>(w.indices[i])].value;
    return out;
}

ResidualStore extract_residuals(const Dataset& data, const PathLossParams& theta,
                                const ObstacleMap& map, const SoftFilter& filter) {
    std::vector<ResidualRecord> records;
    records.reserve(data.size());
    for (const Measurement& rec : data.records)
        records.push_back({rec.link, rec.rss - deterministic_gain(rec.link, theta, map, filter)});
    return ResidualStore(std::move(records));
}

namespace {

struct SemivarBin {
    double u = 0.0;
    double gamma = 0.0;
};

// Least-squares error of v(u) = s2 (1 - exp(-u/r)) against the bins.
double bin_sse(const std::vector<SemivarBin>& bins, double s2, double r) {
    double sse = 0.0;
    for (const SemivarBin& b : bins) sse += sq(s2 * (1.0 - std::exp(-b.u / r)) - b.gamma);
    return sse;
}

// Gauss-Newton with Levenberg damping on x = (log s2, log r).
void refine_exponential(const std::vector<SemivarBin>& bins, double& s2, double& r) {
    double ls = std::log(std::max(s2, 1e-12));
    double lr = std::log(std::max(r, 1e-12));
    double sse = bin_sse(bins, std::exp(ls), std::exp(lr));
    double lambda = 1e-3;
    for (int it = 0; it < 60; ++it) {
        const double cs = std::exp(ls);
        const double cr = std::exp(lr);
        double j00 = 0.0, j01 = 0.0, j11 = 0.0, g0 = 0.0, g1 = 0.0;
        for (const SemivarBin& b : bins) {
            const double e = std::exp(-b.u / cr);
            const double resid = cs * (1.0 - e) - b.gamma;
            const double d_ls = cs * (1.0 - e);
            const double d_lr = -cs * e * (b.u / cr);
            j00 += d_ls * d_ls;
            j01 += d_ls * d_lr;
            j11 += d_lr * d_lr;
            g0 += d_ls * resid;
            g1 += d_lr * resid;
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            const double a00 = j00 + lambda;
            const double a11 = j11 + lambda;
            const double det = a00 * a11 - j01 * j01;
            if (std::abs(det) < 1e-30) {
                lambda *= 10.0;
                continue;
            }
            const double step0 = -(a11 * g0 - j01 * g1) / det;
            const double step1 = -(-j01 * g0 + a00 * g1) / det;
            const double nls = std::clamp(ls + step0, std::log(1e-12), std::log(1e12));
            const double nlr = std::clamp(lr + step1, std::log(1e-9), std::log(1e9));
            const double nsse = bin_sse(bins, std::exp(nls), std::exp(nlr));
            if (nsse <= sse) {
                const double gain = sse - nsse;
                ls = nls;
                lr = nlr;
                sse = nsse;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (gain <= 1e-14 * (sse + 1e-14)) it = 60;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;
    }
    s2 = std::exp(ls);
    r = std::exp(lr);
}

}  // namespace

Variogram fit_variogram(const ResidualStore& store, std::size_t max_pairs, std::uint64_t seed) {
    const std::size_t n = store.size();
    if (n < 10) throw std::invalid_argument("variogram fit needs at least 10 residuals");
    const auto& recs = store.records();

    // Collect (distance, semivariance) pairs, subsampling when the full pair
    // set is too large.
    const std::size_t total = n * (n - 1) / 2;
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(std::min(total, max_pairs));
    auto add_pair = [&recs, &pairs](std::size_t i, std::size_t j) {
        const double u = link_distance(recs[i].link, recs[j].link);
        pairs.emplace_back(u, 0.5 * sq(recs[i].value - recs[j].value));
    };
    if (total <= max_pairs) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) add_pair(i, j);
    } else {
        Rng rng(seed);
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(max_pairs * 2);
        while (pairs.size() < max_pairs) {
            std::size_t i = rng.uniform_index(n);
            std::size_t j = rng.uniform_index(n);
            if (i == j) continue;
            if (i > j) std::swap(i, j);
            const std::uint64_t key = static_cast<std::uint64_t>(i) * n + j;
            if (!seen.insert(key).second) continue;
            add_pair(i, j);
        }
    }

    std::sort(pairs.begin(), pairs.end());
    const int bin_count = static_cast<int>(std::min<std::size_t>(20, pairs.size()));
    std::vector<SemivarBin> bins(static_cast<std::size_t>(bin_count));
    for (int b = 0; b < bin_count; ++b) {
        const std::size_t lo = pairs.size() * static_cast<std::size_t>(b) /
                               static_cast<std::size_t>(bin_count);
        const std::size_t hi = pairs.size() * (static_cast<std::size_t>(b) + 1) /
                               static_cast<std::size_t>(bin_count);
        double su = 0.0, sg = 0.0;
        for (std::size_t p = lo; p < hi; ++p) {
            su += pairs[p].first;
            sg += pairs[p].second;
        }
        const double cnt = static_cast<double>(hi - lo);
        bins[static_cast<std::size_t>(b)] = {su / cnt, sg / cnt};
    }

    double gamma_max = 0.0;
    for (const SemivarBin& b : bins) gamma_max = std::max(gamma_max, b.gamma);
    if (gamma_max < 1e-30) return {0.0, 1.0, 0.0};

    // Sill seed: mean semivariance of the farthest quarter of the bins.
    double sill_seed = 0.0;
    {
        const int tail = std::max(1, bin_count / 4);
        for (int b = bin_count - tail; b < bin_count; ++b)
            sill_seed += bins[static_cast<std::size_t>(b)].gamma;
        sill_seed = std::max(sill_seed / tail, 1e-12);
    }
    const double u_max = std::max(bins.back().u, 1e-9);

    double best_s2 = sill_seed, best_r = u_max / 3.0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (double sf : {0.5, 1.0, 2.0}) {
        for (double rf : {0.05, 0.15, 0.4, 1.0, 3.0}) {
            double s2 = sill_seed * sf;
            double r = u_max * rf;
            refine_exponential(bins, s2, r);
            const double sse = bin_sse(bins, s2, r);
            if (sse < best_sse) {
                best_sse = sse;
                best_s2 = s2;
                best_r = r;
            }
        }
    }

    Variogram out;
    out.alpha_s = std::sqrt(best_s2);
    out.alpha_r = best_r;
    out.sigma_n2 = std::max(0.0, bins.front().gamma - out.value(bins.front().u));
    out.validate();
    return out;
}

}  // namespace radiomap
