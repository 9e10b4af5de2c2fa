#include <doctest.h>

#include <cmath>

#include "radiomap/kriging.hpp"
#include "support/oracles.hpp"

using namespace radiomap;
using namespace testsupport;

namespace {

/// Random scattered residual records inside a desk-sized 6D box.
std::vector<ResidualRecord> random_records(Rng& rng, int n) {
    std::vector<ResidualRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ResidualRecord rec;
        rec.link.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), rng.uniform(1.0, 2.0)};
        rec.link.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0),
                           rng.uniform(20.0, 120.0)};
        rec.value = rng.uniform(-6.0, 6.0);
        out.push_back(rec);
    }
    return out;
}

Variogram smooth_variogram() {
    Variogram vg;
    vg.alpha_s = 3.0;
    vg.alpha_r = 40.0;
    vg.sigma_n2 = 0.0;
    return vg;
}

}  // namespace

TEST_CASE("variogram model identity and validation") {
    const Variogram vg = smooth_variogram();
    CHECK(vg.value(0.0) == 0.0);
    CHECK(vg.value(40.0) == doctest::Approx(9.0 * (1.0 - std::exp(-1.0))));
    // Monotone non-decreasing.
    double prev = 0.0;
    for (double u = 0.0; u <= 400.0; u += 7.0) {
        CHECK(vg.value(u) >= prev - 1e-15);
        prev = vg.value(u);
    }
    Variogram bad = vg;
    bad.alpha_s = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = vg;
    bad.alpha_r = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = vg;
    bad.sigma_n2 = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("residual store rejects non-finite values") {
    std::vector<ResidualRecord> recs(1);
    recs[0].value = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ResidualStore{recs}, std::invalid_argument);
}

TEST_CASE("nearest-neighbor queries match a full sort") {
    Rng rng(41);
    const ResidualStore store(random_records(rng, 30));
    for (int trial = 0; trial < 25; ++trial) {
        Link query;
        query.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
        query.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0),
                        rng.uniform(20.0, 120.0)};
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < 30; ++i)
            order.emplace_back(link_distance(query, store.records()[static_cast<std::size_t>(i)].link),
                               i);
        std::sort(order.begin(), order.end());
        for (int n : {1, 3, 10, 30, 50, 0, -1}) {
            const std::vector<int> got = store.nearest(query, n);
            const std::size_t expect_n =
                n <= 0 || n >= 30 ? 30u : static_cast<std::size_t>(n);
            REQUIRE(got.size() == expect_n);
            for (std::size_t i = 0; i < expect_n; ++i)
                CHECK(got[i] == order[i].second);
        }
    }
}

TEST_CASE("duplicate links tie-break by index") {
    Rng rng(42);
    std::vector<ResidualRecord> recs = random_records(rng, 6);
    recs[4].link = recs[1].link;  // exact duplicate, later index
    const ResidualStore store(recs);
    const std::vector<int> got = store.nearest(recs[1].link, 2);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == 1);
    CHECK(got[1] == 4);
}

TEST_CASE("zero-nugget kriging is exact at every training point") {
    Rng rng(43);
    const ResidualStore store(random_records(rng, 12));
    const Variogram vg = smooth_variogram();
    for (std::size_t i = 0; i < store.size(); ++i) {
        const ResidualRecord& rec = store.records()[i];
        CHECK(krige(store, vg, rec.link, 8) == doctest::Approx(rec.value).epsilon(1e-9));
        const KrigeWeights w = krige_weights(store, vg, rec.link, 8);
        double sum = 0.0;
        for (double wi : w.weights) sum += wi;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("two symmetric neighbors split the weight evenly") {
    std::vector<ResidualRecord> recs(2);
    recs[0].link = {{-10.0, 0.0, 1.5}, {-10.0, 0.0, 50.0}};
    recs[0].value = 2.0;
    recs[1].link = {{10.0, 0.0, 1.5}, {10.0, 0.0, 50.0}};
    recs[1].value = 4.0;
    const ResidualStore store(recs);
    const Link query{{0.0, 0.0, 1.5}, {0.0, 0.0, 50.0}};
    const KrigeWeights w = krige_weights(store, smooth_variogram(), query, 2);
    REQUIRE(w.weights.size() == 2);
    CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(krige(store, smooth_variogram(), query, 2) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("kriging matches the dense full-system oracle") {
    Rng rng(44);
    SUBCASE("all neighbors on five records") {
        const ResidualStore store(random_records(rng, 5));
        Variogram vg = smooth_variogram();
        vg.sigma_n2 = 0.5;  // noise correction exercised too
        for (int trial = 0; trial < 10; ++trial) {
            Link query;
            query.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
            query.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0),
                            rng.uniform(20.0, 120.0)};
            CHECK(krige(store, vg, query, 0) ==
                  doctest::Approx(oracle_krige(store, vg, query, 0)).epsilon(1e-6));
        }
    }
    SUBCASE("truncated neighbor sets agree with the truncated oracle") {
        const ResidualStore store(random_records(rng, 10));
        const Variogram vg = smooth_variogram();
        for (int trial = 0; trial < 10; ++trial) {
            Link query;
            query.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
            query.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0),
                            rng.uniform(20.0, 120.0)};
            CHECK(krige(store, vg, query, 4) ==
                  doctest::Approx(oracle_krige(store, vg, query, 4)).epsilon(1e-6));
        }
    }
}

TEST_CASE("kriging weights always sum to one") {
    Rng rng(45);
    const ResidualStore store(random_records(rng, 40));
    Variogram vg = smooth_variogram();
    vg.sigma_n2 = 1.0;
    for (int trial = 0; trial < 30; ++trial) {
        Link query;
        query.user = {rng.uniform(-50.0, 200.0), rng.uniform(-50.0, 200.0), 1.5};
        query.aerial = {rng.uniform(-50.0, 200.0), rng.uniform(-50.0, 200.0),
                        rng.uniform(5.0, 200.0)};
        const KrigeWeights w = krige_weights(store, vg, query, 16);
        double sum = 0.0;
        for (double wi : w.weights) sum += wi;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("adding a constant to the residuals shifts predictions by it") {
    Rng rng(46);
    std::vector<ResidualRecord> recs = random_records(rng, 15);
    const ResidualStore store(recs);
    for (ResidualRecord& rec : recs) rec.value += 5.0;
    const ResidualStore shifted(recs);
    const Variogram vg = smooth_variogram();
    for (int trial = 0; trial < 10; ++trial) {
        Link query;
        query.user = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 1.5};
        query.aerial = {rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0),
                        rng.uniform(20.0, 120.0)};
        CHECK(krige(shifted, vg, query, 8) ==
              doctest::Approx(krige(store, vg, query, 8) + 5.0).epsilon(1e-12));
    }
}

TEST_CASE("constant residual field degenerates gracefully") {
    Rng rng(47);
    std::vector<ResidualRecord> recs = random_records(rng, 20);
    for (ResidualRecord& rec : recs) rec.value = 1.25;
    const ResidualStore store(recs);
    const Variogram vg = fit_variogram(store, 100000, 7);
    CHECK(vg.alpha_s == 0.0);
    CHECK(vg.alpha_r == 1.0);
    CHECK(vg.sigma_n2 == 0.0);
    // Flat variogram: every prediction is the constant.
    Link query;
    query.user = {75.0, 75.0, 1.5};
    query.aerial = {10.0, 140.0, 60.0};
    CHECK(krige(store, vg, query, 8) == doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("extract_residuals reproduces the injected offset") {
    Rng rng(48);
    const QuasiInstance inst = make_quasi_instance(rng, true, 1, 25);
    const ResidualStore zero =
        extract_residuals(inst.data, inst.theta, inst.truth, inst.filter);
    for (const ResidualRecord& rec : zero.records())
        CHECK(rec.value == doctest::Approx(0.0).epsilon(1e-12));

    QuasiInstance shifted = inst;
    for (Measurement& rec : shifted.data.records) rec.rss += 5.0;
    const ResidualStore five =
        extract_residuals(shifted.data, inst.theta, inst.truth, inst.filter);
    for (const ResidualRecord& rec : five.records())
        CHECK(rec.value == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("residual variance tracks injected shadowing plus noise") {
    ShadowingSpec shadowing;
    shadowing.kind = ShadowingKind::gp;
    shadowing.alpha_s = 3.0;
    shadowing.alpha_r = 15.0;
    const EnvironmentSpec spec = desk_env(505, 1200, 2.0, shadowing);
    const SyntheticData synth = generate_synthetic(spec);
    PathLossParams theta;
    theta.values = spec.theta_true.values;
    const ResidualStore store =
        extract_residuals(synth.train, theta, synth.truth, spec.truth_filter);
    std::vector<double> values;
    for (const ResidualRecord& rec : store.records()) values.push_back(rec.value);
    const double injected = 3.0 * 3.0 + 2.0 * 2.0;
    CHECK(sample_variance(values) == doctest::Approx(injected).epsilon(0.2));
}

TEST_CASE("white residuals fit a nugget-like variogram") {
    Rng rng(49);
    std::vector<ResidualRecord> recs = random_records(rng, 500);
    for (ResidualRecord& rec : recs) rec.value = 2.0 * rng.normal();
    const ResidualStore store(recs);
    const Variogram vg = fit_variogram(store, 100000, 11);
    CHECK(vg.alpha_s * vg.alpha_s == doctest::Approx(4.0).epsilon(0.25));

    // The range must collapse below the smallest bin's typical distance,
    // bounded here by the 2.5th percentile of all pair distances.
    std::vector<double> dists;
    for (std::size_t i = 0; i < recs.size(); ++i)
        for (std::size_t j = i + 1; j < recs.size(); ++j)
            dists.push_back(link_distance(recs[i].link, recs[j].link));
    std::sort(dists.begin(), dists.end());
    const double smallest_bin_center = dists[dists.size() / 40];
    CHECK(vg.alpha_r <= smallest_bin_center);
}

TEST_CASE("variogram round-trips a correlated Gaussian field") {
    Rng rng(50);
    std::vector<ResidualRecord> recs = random_records(rng, 600);
    std::vector<Link> links;
    for (const ResidualRecord& rec : recs) links.push_back(rec.link);
    Rng noise(51);
    const std::vector<double> field = sample_gp(links, 3.0, 50.0, noise);
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].value = field[i];
    const ResidualStore store(recs);
    const Variogram vg = fit_variogram(store, 100000, 13);
    CHECK(vg.alpha_s == doctest::Approx(3.0).epsilon(0.25));
    CHECK(vg.alpha_r == doctest::Approx(50.0).epsilon(0.25));
}

TEST_CASE("variogram fitting enforces its preconditions") {
    Rng rng(52);
    const ResidualStore store(random_records(rng, 9));
    CHECK_THROWS_AS(fit_variogram(store, 1000, 0), std::invalid_argument);
}
