#include "radiomap/estimator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "radiomap/log.hpp"

namespace radiomap {

namespace {

double sq(double v) { return v * v; }

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    out.back() = hi;
    return out;
}

FitConfig resolve_defaults(FitConfig cfg, const GridSpec& grid) {
    if (cfg.classes < 1) throw std::invalid_argument("fit needs at least one obstacle class");
    if (cfg.eps_height <= 0.0) cfg.eps_height = grid.h_max / 256.0;
    if (cfg.bandwidth <= 0.0) cfg.bandwidth = grid.h_max / 8.0;
    if (cfg.z_grid_size < 5) throw std::invalid_argument("z_grid_size must be at least 5");
    if (cfg.max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be positive");
    if (cfg.eps_outer < 0.0) throw std::invalid_argument("eps_outer must be non-negative");
    if (cfg.ridge < 0.0) throw std::invalid_argument("ridge must be non-negative");
    if (cfg.em_iters < 0) throw std::invalid_argument("em_iters must be non-negative");
    if (cfg.theta_min_mass < 0.0)
        throw std::invalid_argument("theta_min_mass must be non-negative");
    return cfg;
}

// One record/offset pair: the displaced link's trace and its current region.
struct OffsetObs {
    int record;
    int offset;
    int cls;
    std::vector<TracedCell> cells;
};

struct CellRef {
    int obs;
    double z;
};

// Entry of the active height sweep with the region below / at-or-above the
// critical altitude, everything else held fixed.
struct SweepEntry {
    int obs;
    double z;
    int cls_lo;
    int cls_hi;
};

// One jump of the piecewise-constant sweep error: at height z the covered
// record in `slot` gains `delta` on its mixture value.
struct SwitchPoint {
    double z;
    int slot;
    double delta;
};

class FitEngine {
public:
    FitEngine(const Dataset& data, const GridSpec& grid, const SoftFilter& filter, int classes)
        : grid_(grid), filter_(filter), classes_(classes), map_(grid, classes, 0.0) {
        grid_.validate();
        filter_.validate();
        if (data.size() == 0) throw std::invalid_argument("fit needs at least one record");
        n_ = static_cast<int>(data.size());
        y_.resize(static_cast<std::size_t>(n_));
        d_.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) {
            y_[static_cast<std::size_t>(i)] = data.records[static_cast<std::size_t>(i)].rss;
            d_[static_cast<std::size_t>(i)] =
                log_distance(data.records[static_cast<std::size_t>(i)].link);
        }
        const int j_count = static_cast<int>(filter_.size());
        obs_.reserve(static_cast<std::size_t>(n_) * filter_.size());
        for (int i = 0; i < n_; ++i) {
            const Link& link = data.records[static_cast<std::size_t>(i)].link;
            for (int j = 0; j < j_count; ++j) {
                Link lj = apply_offset(link, filter_.offsets[static_cast<std::size_t>(j)]);
                if (!(norm(lj.aerial - lj.user) > 0.0))
                    throw std::invalid_argument("offset link is degenerate");
                obs_.push_back({i, j, 0, trace_link(lj, grid_).cells});
            }
        }
        cell_refs_.resize(static_cast<std::size_t>(grid_.cell_count()));
        for (std::size_t o = 0; o < obs_.size(); ++o)
            for (const TracedCell& tc : obs_[o].cells)
                cell_refs_[static_cast<std::size_t>(tc.cell)].push_back(
                    {static_cast<int>(o), tc.z});
        gamma_.assign(static_cast<std::size_t>(n_) * (classes_ + 1), 0.0);
        gbar_.assign(static_cast<std::size_t>(n_), 0.0);
    }

    void set_theta(const PathLossParams& theta) {
        theta.validate(classes_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k <= classes_; ++k)
                gamma_[gamma_index(i, k)] = theta.path_loss(k, d_[static_cast<std::size_t>(i)]);
        rebuild_gbar();
    }

    void set_obstacles(const ObstacleMap& map) {
        if (map.classes() != classes_ || map.grid().cell_count() != grid_.cell_count())
            throw std::invalid_argument("obstacle map does not match engine layout");
        map_ = map;
        rebuild_classes();
        rebuild_gbar();
    }

    const ObstacleMap& obstacles() const { return map_; }

    double objective() const {
        double sse = 0.0;
        for (int i = 0; i < n_; ++i)
            sse += sq(y_[static_cast<std::size_t>(i)] - gbar_[static_cast<std::size_t>(i)]);
        return sse / n_;
    }

    // Builds the sweep state for obstacle (cell, k): one entry per displaced
    // link crossing the cell with its critical altitude and the regions taken
    // below / at-or-above it, plus the squared-error mass of the records that
    // never touch the cell. Required before profile/best_height/apply_height.
    void prepare_sweep(int cell, int k) {
        if (cell < 0 || cell >= grid_.cell_count())
            throw std::invalid_argument("sweep cell out of range");
        if (k < 1 || k > classes_) throw std::invalid_argument("sweep class out of range");
        scratch_.clear();

        double sse = 0.0;
        for (int i = 0; i < n_; ++i)
            sse += sq(y_[static_cast<std::size_t>(i)] - gbar_[static_cast<std::size_t>(i)]);
        sse_other_ = sse;

        const auto& refs = cell_refs_[static_cast<std::size_t>(cell)];
        if (refs.empty()) return;

        // Region of each covering pair with the swept entry ignored, plus the
        // region it jumps to once the swept height reaches the critical altitude.
        for (const CellRef& ref : refs) {
            const OffsetObs& o = obs_[static_cast<std::size_t>(ref.obs)];
            int base = 0;
            for (int l = classes_; l >= 1; --l) {
                bool blocked = false;
                for (const TracedCell& tc : o.cells) {
                    if (l == k && tc.cell == cell) continue;
                    if (map_.height(tc.cell, l) >= tc.z) {
                        blocked = true;
                        break;
                    }
                }
                if (blocked) {
                    base = l;
                    break;
                }
            }
            scratch_.push_back({ref.obs, ref.z, base, std::max(base, k)});
        }

        // Records covering the cell contribute height-dependent residuals; all
        // other records contribute a constant.
        for (std::size_t s = 0; s < scratch_.size();) {
            const int rec = obs_[static_cast<std::size_t>(scratch_[s].obs)].record;
            sse_other_ -=
                sq(y_[static_cast<std::size_t>(rec)] - gbar_[static_cast<std::size_t>(rec)]);
            while (s < scratch_.size() && obs_[static_cast<std::size_t>(scratch_[s].obs)].record == rec)
                ++s;
        }
    }

    HeightProfile profile(int cell, int k, int z_grid_size) {
        prepare_sweep(cell, k);
        HeightProfile prof;
        prof.zs = linspace(0.0, grid_.h_max, z_grid_size);
        prof.fs.assign(prof.zs.size(), 0.0);
        if (scratch_.empty()) {
            std::fill(prof.fs.begin(), prof.fs.end(), sse_other_ / n_);
            return prof;
        }

        for (std::size_t zi = 0; zi < prof.zs.size(); ++zi) {
            const double z = prof.zs[zi];
            double acc = sse_other_;
            for (std::size_t s = 0; s < scratch_.size();) {
                const int rec = obs_[static_cast<std::size_t>(scratch_[s].obs)].record;
                double g = gbar_[static_cast<std::size_t>(rec)];
                while (s < scratch_.size() &&
                       obs_[static_cast<std::size_t>(scratch_[s].obs)].record == rec) {
                    const SweepEntry& e = scratch_[s];
                    const OffsetObs& o = obs_[static_cast<std::size_t>(e.obs)];
                    const int c = (z >= e.z) ? e.cls_hi : e.cls_lo;
                    if (c != o.cls)
                        g += filter_.weights[static_cast<std::size_t>(o.offset)] *
                             (gamma_[gamma_index(rec, c)] - gamma_[gamma_index(rec, o.cls)]);
                    ++s;
                }
                acc += sq(y_[static_cast<std::size_t>(rec)] - g);
            }
            prof.fs[zi] = acc / n_;
        }
        return prof;
    }

    // Largest height in [0, h_max] minimizing the exact fitting error along
    // the prepared sweep coordinate. The error is piecewise constant in the
    // swept height, changing only at the critical altitudes, so walking those
    // altitudes in order visits every attainable value; the result is the top
    // of the last interval attaining the minimum — just below the next
    // critical altitude, or h_max when the minimum extends to the ceiling.
    // Requires a preceding prepare_sweep for the same (cell, k).
    double best_height() {
        const double h_max = grid_.h_max;
        if (scratch_.empty()) return h_max;

        // Current gains of the covered records with the swept height at zero,
        // and the altitudes where raising it changes some displaced region.
        slot_g_.clear();
        slot_y_.clear();
        switches_.clear();
        int prev_record = -1;
        for (const SweepEntry& e : scratch_) {
            const OffsetObs& o = obs_[static_cast<std::size_t>(e.obs)];
            if (o.record != prev_record) {
                prev_record = o.record;
                slot_g_.push_back(gbar_[static_cast<std::size_t>(o.record)]);
                slot_y_.push_back(y_[static_cast<std::size_t>(o.record)]);
            }
            const int slot = static_cast<int>(slot_g_.size()) - 1;
            const int c0 = (0.0 >= e.z) ? e.cls_hi : e.cls_lo;
            if (c0 != o.cls)
                slot_g_.back() += filter_.weights[static_cast<std::size_t>(o.offset)] *
                                  (gamma_[gamma_index(o.record, c0)] -
                                   gamma_[gamma_index(o.record, o.cls)]);
            if (e.cls_lo != e.cls_hi && e.z > 0.0 && e.z <= h_max)
                switches_.push_back({e.z, slot,
                                     filter_.weights[static_cast<std::size_t>(o.offset)] *
                                         (gamma_[gamma_index(o.record, e.cls_hi)] -
                                          gamma_[gamma_index(o.record, e.cls_lo)])});
        }
        std::sort(switches_.begin(), switches_.end(),
                  [](const SwitchPoint& a, const SwitchPoint& b) { return a.z < b.z; });

        double sse = 0.0;
        for (std::size_t s = 0; s < slot_g_.size(); ++s) sse += sq(slot_y_[s] - slot_g_[s]);

        interval_z_.clear();
        interval_f_.clear();
        interval_z_.push_back(0.0);
        interval_f_.push_back((sse_other_ + sse) / n_);
        for (std::size_t i = 0; i < switches_.size();) {
            const double z = switches_[i].z;
            while (i < switches_.size() && switches_[i].z == z) {
                const std::size_t slot = static_cast<std::size_t>(switches_[i].slot);
                sse -= sq(slot_y_[slot] - slot_g_[slot]);
                slot_g_[slot] += switches_[i].delta;
                sse += sq(slot_y_[slot] - slot_g_[slot]);
                ++i;
            }
            interval_z_.push_back(z);
            interval_f_.push_back((sse_other_ + sse) / n_);
        }

        double f_min = interval_f_.front();
        double f_max = interval_f_.front();
        for (double f : interval_f_) {
            f_min = std::min(f_min, f);
            f_max = std::max(f_max, f);
        }
        const double tol = 1e-9 * std::max(1.0, f_max - f_min);
        std::size_t best = interval_f_.size() - 1;
        while (interval_f_[best] > f_min + tol) --best;
        if (best + 1 == interval_f_.size()) return h_max;
        const double lower = interval_z_[best];
        const double h = interval_z_[best + 1] - 1e-9;
        return (h > lower) ? h : lower;
    }

    // Requires a preceding prepare_sweep(cell, k) call for the same entry.
    void apply_height(int cell, int k, double h) {
        map_.set_height(cell, k, h);
        for (const SweepEntry& e : scratch_) {
            OffsetObs& o = obs_[static_cast<std::size_t>(e.obs)];
            const int c = (h >= e.z) ? e.cls_hi : e.cls_lo;
            if (c != o.cls) {
                gbar_[static_cast<std::size_t>(o.record)] +=
                    filter_.weights[static_cast<std::size_t>(o.offset)] *
                    (gamma_[gamma_index(o.record, c)] - gamma_[gamma_index(o.record, o.cls)]);
                o.cls = c;
            }
        }
    }

    void enforce_ordering_and_rebuild() {
        map_.enforce_class_ordering();
        rebuild_classes();
        rebuild_gbar();
    }

    std::vector<std::vector<double>> likelihood_rows() const {
        std::vector<std::vector<double>> rows(
            static_cast<std::size_t>(n_),
            std::vector<double>(static_cast<std::size_t>(classes_) + 1, 0.0));
        for (const OffsetObs& o : obs_)
            rows[static_cast<std::size_t>(o.record)][static_cast<std::size_t>(o.cls)] +=
                filter_.weights[static_cast<std::size_t>(o.offset)];
        return rows;
    }

private:
    std::size_t gamma_index(int record, int cls) const {
        return static_cast<std::size_t>(record) * (classes_ + 1) + static_cast<std::size_t>(cls);
    }

    int classify(const OffsetObs& o) const {
        for (int l = classes_; l >= 1; --l)
            for (const TracedCell& tc : o.cells)
                if (map_.height(tc.cell, l) >= tc.z) return l;
        return 0;
    }

    void rebuild_classes() {
        for (OffsetObs& o : obs_) o.cls = classify(o);
    }

    void rebuild_gbar() {
        std::fill(gbar_.begin(), gbar_.end(), 0.0);
        for (const OffsetObs& o : obs_)
            gbar_[static_cast<std::size_t>(o.record)] +=
                filter_.weights[static_cast<std::size_t>(o.offset)] *
                gamma_[gamma_index(o.record, o.cls)];
    }

    GridSpec grid_;
    SoftFilter filter_;
    int classes_;
    ObstacleMap map_;
    int n_ = 0;
    std::vector<double> y_;
    std::vector<double> d_;
    std::vector<double> gamma_;  // per record x class path-loss value
    std::vector<double> gbar_;   // per record mixture gain
    std::vector<OffsetObs> obs_;
    std::vector<std::vector<CellRef>> cell_refs_;
    std::vector<SweepEntry> scratch_;
    double sse_other_ = 0.0;  // error mass of records missing the swept cell
    std::vector<double> slot_g_;
    std::vector<double> slot_y_;
    std::vector<SwitchPoint> switches_;
    std::vector<double> interval_z_;
    std::vector<double> interval_f_;
};

}  // namespace

double objective_f(const Dataset& data, const PathLossParams& theta, const ObstacleMap& map,
                   const SoftFilter& filter) {
    theta.validate(map.classes());
    if (data.size() == 0) throw std::invalid_argument("objective needs at least one record");
    double sse = 0.0;
    for (const Measurement& rec : data.records) {
        const double d = log_distance(rec.link);
        const std::vector<double> s = soft_likelihood(rec.link, map, filter, map.grid());
        double g = 0.0;
        for (int k = 0; k <= map.classes(); ++k)
            g += s[static_cast<std::size_t>(k)] * theta.path_loss(k, d);
        sse += sq(rec.rss - g);
    }
    return sse / static_cast<double>(data.size());
}

PathLossParams solve_theta(const Dataset& data, const std::vector<std::vector<double>>& likelihoods,
                           double ridge, const PathLossParams* anchor, double min_class_mass) {
    const std::size_t n = data.size();
    if (n == 0 || likelihoods.size() != n)
        throw std::invalid_argument("likelihood rows must match the records");
    const int classes = static_cast<int>(likelihoods[0].size()) - 1;
    if (classes < 0) throw std::invalid_argument("likelihood rows must hold K+1 entries");
    if (n < 2 * static_cast<std::size_t>(classes + 1))
        throw std::invalid_argument("need at least 2K+2 records to solve for path loss");
    if (ridge < 0.0) throw std::invalid_argument("ridge must be non-negative");
    if (min_class_mass < 0.0) throw std::invalid_argument("min_class_mass must be non-negative");
    if (anchor && anchor->values.size() != 2 * (static_cast<std::size_t>(classes) + 1))
        throw std::invalid_argument("anchor class count must match the likelihood rows");

    std::vector<double> mass(static_cast<std::size_t>(classes) + 1, 0.0);
    for (const auto& row : likelihoods) {
        if (row.size() != static_cast<std::size_t>(classes) + 1)
            throw std::invalid_argument("likelihood rows must have equal length");
        for (std::size_t k = 0; k < row.size(); ++k) mass[k] += row[k];
    }
    std::vector<bool> held(static_cast<std::size_t>(classes) + 1, false);
    if (anchor)
        for (int k = 0; k <= classes; ++k)
            if (mass[static_cast<std::size_t>(k)] < min_class_mass)
                held[static_cast<std::size_t>(k)] = true;
    std::vector<int> survivors;
    for (int k = 0; k <= classes; ++k)
        if (!held[static_cast<std::size_t>(k)] && mass[static_cast<std::size_t>(k)] >= 1e-9)
            survivors.push_back(k);
    if (survivors.empty()) {
        if (anchor) return *anchor;
        throw std::runtime_error("no measurement mass in any class");
    }

    const int cols = 2 * static_cast<int>(survivors.size());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(cols, cols);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cols);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(cols);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = log_distance(data.records[i].link);
        double y = data.records[i].rss;
        for (std::size_t a = 0; a < survivors.size(); ++a) {
            const double s = likelihoods[i][static_cast<std::size_t>(survivors[a])];
            row[2 * static_cast<Eigen::Index>(a)] = s * d;
            row[2 * static_cast<Eigen::Index>(a) + 1] = s;
        }
        // Held classes keep the anchor's line; their share of the prediction is
        // fixed, so it moves to the response side.
        for (int k = 0; k <= classes; ++k)
            if (held[static_cast<std::size_t>(k)])
                y -= likelihoods[i][static_cast<std::size_t>(k)] * anchor->path_loss(k, d);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
        rhs += row * y;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd sol = gram.ldlt().solve(rhs);

    PathLossParams theta = PathLossParams::zeros(classes);
    std::vector<bool> solved(static_cast<std::size_t>(classes) + 1, false);
    for (std::size_t a = 0; a < survivors.size(); ++a) {
        const int k = survivors[a];
        theta.values[2 * static_cast<std::size_t>(k)] = sol[2 * static_cast<Eigen::Index>(a)];
        theta.values[2 * static_cast<std::size_t>(k) + 1] =
            sol[2 * static_cast<Eigen::Index>(a) + 1];
        solved[static_cast<std::size_t>(k)] = true;
    }
    for (int k = 0; k <= classes; ++k) {
        if (solved[static_cast<std::size_t>(k)]) continue;
        if (held[static_cast<std::size_t>(k)]) {
            theta.values[2 * static_cast<std::size_t>(k)] =
                anchor->values[2 * static_cast<std::size_t>(k)];
            theta.values[2 * static_cast<std::size_t>(k) + 1] =
                anchor->values[2 * static_cast<std::size_t>(k) + 1];
            continue;
        }
        int best = survivors.front();
        for (int s : survivors)
            if (std::abs(s - k) < std::abs(best - k)) best = s;
        theta.values[2 * static_cast<std::size_t>(k)] = theta.values[2 * static_cast<std::size_t>(best)];
        theta.values[2 * static_cast<std::size_t>(k) + 1] =
            theta.values[2 * static_cast<std::size_t>(best) + 1];
    }
    return theta;
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double at(double d) const { return intercept + slope * d; }
};

LineFit fit_line(const std::vector<double>& d, const std::vector<double>& y,
                 const std::vector<int>& idx) {
    const double n = static_cast<double>(idx.size());
    if (idx.empty()) return {0.0, 0.0};
    double sd = 0.0, sy = 0.0, sdd = 0.0, sdy = 0.0;
    for (int i : idx) {
        const double di = d[static_cast<std::size_t>(i)];
        const double yi = y[static_cast<std::size_t>(i)];
        sd += di;
        sy += yi;
        sdd += di * di;
        sdy += di * yi;
    }
    const double var = sdd - sd * sd / n;
    if (var <= 1e-12) return {0.0, sy / n};
    const double slope = (sdy - sd * sy / n) / var;
    return {slope, (sy - slope * sd) / n};
}

}  // namespace

PathLossParams init_theta(const Dataset& data, int classes, int em_iters) {
    const int n = static_cast<int>(data.size());
    const int bands = classes + 1;
    if (classes < 0) throw std::invalid_argument("class count must be non-negative");
    if (n < 2 * bands) throw std::invalid_argument("need at least 2K+2 records");
    if (em_iters < 0) throw std::invalid_argument("em_iters must be non-negative");

    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d[static_cast<std::size_t>(i)] = log_distance(data.records[static_cast<std::size_t>(i)].link);
        y[static_cast<std::size_t>(i)] = data.records[static_cast<std::size_t>(i)].rss;
    }

    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const LineFit global = fit_line(d, y, all);

    std::vector<double> resid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        resid[static_cast<std::size_t>(i)] =
            y[static_cast<std::size_t>(i)] - global.at(d[static_cast<std::size_t>(i)]);

    // Quantile bands over the residuals; the most positive band seeds class 0.
    std::vector<int> order(all);
    std::stable_sort(order.begin(), order.end(), [&resid](int a, int b) {
        return resid[static_cast<std::size_t>(a)] > resid[static_cast<std::size_t>(b)];
    });
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    for (int pos = 0; pos < n; ++pos)
        label[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] =
            static_cast<int>((static_cast<long long>(pos) * bands) / n);

    std::vector<LineFit> lines(static_cast<std::size_t>(bands));
    std::vector<std::vector<int>> members(static_cast<std::size_t>(bands));
    auto refit = [&]() {
        for (auto& m : members) m.clear();
        for (int i = 0; i < n; ++i)
            members[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
        // Re-seed an empty band with the worst-fitting points of the largest band.
        for (int b = 0; b < bands; ++b) {
            if (!members[static_cast<std::size_t>(b)].empty()) continue;
            int big = 0;
            for (int c = 0; c < bands; ++c)
                if (members[static_cast<std::size_t>(c)].size() >
                    members[static_cast<std::size_t>(big)].size())
                    big = c;
            auto& src = members[static_cast<std::size_t>(big)];
            if (src.size() < 2) continue;
            const LineFit lf = fit_line(d, y, src);
            std::stable_sort(src.begin(), src.end(), [&](int a, int bidx) {
                return std::abs(y[static_cast<std::size_t>(a)] - lf.at(d[static_cast<std::size_t>(a)])) >
                       std::abs(y[static_cast<std::size_t>(bidx)] - lf.at(d[static_cast<std::size_t>(bidx)]));
            });
            const std::size_t take = std::max<std::size_t>(1, src.size() / 4);
            auto& dst = members[static_cast<std::size_t>(b)];
            dst.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(take));
            src.erase(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(take));
            for (int i : dst) label[static_cast<std::size_t>(i)] = b;
        }
        for (int b = 0; b < bands; ++b)
            lines[static_cast<std::size_t>(b)] = fit_line(d, y, members[static_cast<std::size_t>(b)]);
    };

    refit();
    for (int it = 0; it < em_iters; ++it) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_err = sq(y[static_cast<std::size_t>(i)] -
                                 lines[0].at(d[static_cast<std::size_t>(i)]));
            for (int b = 1; b < bands; ++b) {
                const double err = sq(y[static_cast<std::size_t>(i)] -
                                      lines[static_cast<std::size_t>(b)].at(d[static_cast<std::size_t>(i)]));
                if (err < best_err) {
                    best = b;
                    best_err = err;
                }
            }
            if (label[static_cast<std::size_t>(i)] != best) {
                label[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        refit();
        if (!changed) break;
    }

    // Class 0 gets the strongest fitted gain at the median log distance.
    std::vector<double> ds(d);
    std::nth_element(ds.begin(), ds.begin() + n / 2, ds.end());
    const double dmed = ds[static_cast<std::size_t>(n) / 2];
    std::vector<int> by_gain(static_cast<std::size_t>(bands));
    std::iota(by_gain.begin(), by_gain.end(), 0);
    std::stable_sort(by_gain.begin(), by_gain.end(), [&lines, dmed](int a, int b) {
        return lines[static_cast<std::size_t>(a)].at(dmed) > lines[static_cast<std::size_t>(b)].at(dmed);
    });

    PathLossParams theta = PathLossParams::zeros(classes);
    for (int k = 0; k < bands; ++k) {
        const LineFit& lf = lines[static_cast<std::size_t>(by_gain[static_cast<std::size_t>(k)])];
        theta.values[2 * static_cast<std::size_t>(k)] = lf.slope;
        theta.values[2 * static_cast<std::size_t>(k) + 1] = lf.intercept;
    }
    return theta;
}

HeightProfile height_profile(const Dataset& data, const PathLossParams& theta,
                             const ObstacleMap& map, const SoftFilter& filter, int cell, int k,
                             int z_grid_size) {
    if (cell < 0 || cell >= map.grid().cell_count())
        throw std::invalid_argument("profile cell out of range");
    if (k < 1 || k > map.classes()) throw std::invalid_argument("profile class out of range");
    if (z_grid_size < 5) throw std::invalid_argument("z_grid_size must be at least 5");
    FitEngine engine(data, map.grid(), filter, map.classes());
    engine.set_theta(theta);
    engine.set_obstacles(map);
    return engine.profile(cell, k, z_grid_size);
}

double local_poly_slope(const HeightProfile& profile, double h, double b) {
    if (profile.zs.size() != profile.fs.size() || profile.zs.size() < 2)
        throw std::invalid_argument("profile needs at least two points");
    if (!(b > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    const double range = profile.zs.back() - profile.zs.front();
    const double reach = range + std::abs(h - profile.zs.front()) + std::abs(h - profile.zs.back());
    while (true) {
        double sw = 0.0, su = 0.0, sf = 0.0, suu = 0.0, suf = 0.0;
        int inside = 0;
        for (std::size_t i = 0; i < profile.zs.size(); ++i) {
            const double u = profile.zs[i] - h;
            const double t = u / b;
            if (std::abs(t) >= 1.0) continue;
            const double w = 0.75 * (1.0 - t * t) / b;
            ++inside;
            sw += w;
            su += w * u;
            sf += w * profile.fs[i];
            suu += w * u * u;
            suf += w * u * profile.fs[i];
        }
        if (inside >= 2) {
            const double denom = suu - su * su / sw;
            if (denom <= 1e-30) return 0.0;
            return (suf - su * sf / sw) / denom;
        }
        if (b > 4.0 * (reach + 1e-9)) return 0.0;  // unreachable with two or more points
        b *= 2.0;
    }
}

double bisect_height(const Dataset& data, const PathLossParams& theta, const ObstacleMap& map,
                     const SoftFilter& filter, int cell, int k, const FitConfig& cfg0) {
    resolve_defaults(cfg0, map.grid());
    FitEngine engine(data, map.grid(), filter, map.classes());
    engine.set_theta(theta);
    engine.set_obstacles(map);
    engine.prepare_sweep(cell, k);
    return engine.best_height();
}

FitResult fit(const Dataset& data, const GridSpec& grid, const SoftFilter& filter,
              const FitConfig& cfg0) {
    const FitConfig cfg = resolve_defaults(cfg0, grid);
    const int classes = cfg.classes;
    if (data.size() < 2 * static_cast<std::size_t>(classes + 1))
        throw std::invalid_argument("need at least 2K+2 records to fit");

    PathLossParams theta =
        cfg.initial_theta ? *cfg.initial_theta : init_theta(data, classes, cfg.em_iters);
    theta.validate(classes);

    FitEngine engine(data, grid, filter, classes);
    engine.set_theta(theta);
    engine.set_obstacles(ObstacleMap(grid, classes, grid.h_max));

    const int cell_count = grid.cell_count();
    std::vector<double> objective_trace;
    std::vector<double> previous = engine.obstacles().raw();
    int iterations = 0;

    for (int t = 1; t <= cfg.max_outer_iters; ++t) {
        const auto started = std::chrono::steady_clock::now();
        for (int k = classes; k >= 1; --k) {
            for (int m = 0; m < cell_count; ++m) {
                engine.prepare_sweep(m, k);
                engine.apply_height(m, k, engine.best_height());
            }
        }
        engine.enforce_ordering_and_rebuild();
        if (!cfg.freeze_theta) {
            theta = solve_theta(data, engine.likelihood_rows(), cfg.ridge, &theta,
                                cfg.theta_min_mass);
            engine.set_theta(theta);
        }

        const double objective = engine.objective();
        objective_trace.push_back(objective);
        iterations = t;

        const std::vector<double>& current = engine.obstacles().raw();
        double delta2 = 0.0;
        for (std::size_t i = 0; i < current.size(); ++i) delta2 += sq(current[i] - previous[i]);
        const double delta =
            std::sqrt(delta2) / (static_cast<double>(cell_count) * static_cast<double>(classes));
        previous = current;

        if (log_enabled(LogLevel::info)) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            std::ostringstream line;
            line << "fit iter " << t << " objective " << objective << " dh " << delta
                 << " seconds " << elapsed;
            log_line(LogLevel::info, line.str());
        }
        if (delta < cfg.eps_outer) break;
    }

    return FitResult{theta, engine.obstacles(), std::move(objective_trace), iterations};
}

}  // namespace radiomap
