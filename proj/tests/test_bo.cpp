#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gtbo/bo.hpp"
#include "gtbo/common.hpp"
#include "oracles.hpp"

using namespace gtbo;

namespace {

// hand-assembled GT result: two default replicates, optional probe bin
// points, then test observations stored as centered differences
GtResult make_gt(int dim, const std::vector<int>& active,
                 const std::vector<double>& x_def, double default_estimate,
                 const std::vector<std::pair<std::vector<double>, double>>&
                     bin_points,
                 const std::vector<std::pair<std::vector<double>, double>>&
                     test_points,
                 double noise_var = 1e-4, double signal_var = 0.5) {
    GtResult gt;
    gt.active_dims.assign(static_cast<std::size_t>(dim), 0);
    for (int i : active) gt.active_dims[static_cast<std::size_t>(i)] = 1;
    gt.noise_model = NoiseModel{noise_var, signal_var};
    gt.probe.noise_var = noise_var;
    gt.probe.signal_var = signal_var;
    gt.probe.default_estimate = default_estimate;
    // two replicates at the estimate itself; their mean is the estimate
    gt.probe.probe_observations.push_back({-1, x_def, default_estimate});
    gt.probe.probe_observations.push_back({-1, x_def, default_estimate});
    int bin = 0;
    for (const auto& [p, y] : bin_points)
        gt.probe.probe_observations.push_back({bin++, p, y});
    for (const auto& [p, y] : test_points)
        gt.observations.push_back(GtObservation{Group{}, y - default_estimate, p});
    gt.evaluations_used = static_cast<int>(gt.probe.probe_observations.size() +
                                           gt.observations.size());
    return gt;
}

GpHyperparams fixed_hyper(std::vector<double> l, double sf2, double nv,
                          double m) {
    GpHyperparams h;
    h.lengthscales = std::move(l);
    h.signal_var = sf2;
    h.noise_var = nv;
    h.mean_const = m;
    return h;
}

GpPriors plain_priors(int d) {
    GpPriors p;
    p.lengthscales.assign(static_cast<std::size_t>(d),
                          LengthscalePrior{0.0, 1.0});
    return p;
}

}  // namespace

TEST_SUITE("bo") {

TEST_CASE("dedup collapses points that agree on the active coordinates") {
    const std::vector<double> x_def{0.5, 0.5, 0.5, 0.5};
    const auto gt = make_gt(
        4, {0}, x_def, 10.0, {},
        {{{0.9, 0.5, 0.5, 0.5}, 11.0},
         {{0.9, 0.1, 0.5, 0.5}, 12.0},   // same active coordinate as above
         {{0.5, 0.9, 0.9, 0.9}, 13.0},   // active coordinate matches default
         {{0.3, 0.5, 0.5, 0.5}, 9.0}});

    const auto data = dedup_gt_data(gt, 1e-9);
    REQUIRE(data.points.size() == 3);
    // default replicates collapse to one point carrying their mean
    CHECK(data.points[0] == x_def);
    CHECK(data.values[0] == 10.0);
    // the earliest of each duplicate family survives with its own value
    CHECK(data.points[1][0] == 0.9);
    CHECK(data.points[1][1] == 0.5);
    CHECK(data.values[1] == 11.0);
    CHECK(data.points[2][0] == 0.3);
    CHECK(data.values[2] == 9.0);

    // idempotent: the kept points are pairwise distinct on the active dims
    for (std::size_t a = 0; a < data.points.size(); ++a)
        for (std::size_t b = a + 1; b < data.points.size(); ++b)
            CHECK(std::abs(data.points[a][0] - data.points[b][0]) > 1e-9);

    const auto again = dedup_gt_data(gt, 1e-9);
    CHECK(again.points == data.points);
    CHECK(again.values == data.values);
}

TEST_CASE("dedup keeps distinct points unchanged") {
    const std::vector<double> x_def{0.5, 0.5};
    const auto gt = make_gt(2, {0, 1}, x_def, 1.0,
                            {{{0.1, 0.2}, 2.0}},
                            {{{0.3, 0.4}, 3.0}, {{0.7, 0.8}, 4.0}});
    const auto data = dedup_gt_data(gt, 1e-9);
    CHECK(data.points.size() == 4);  // default + bin + two tests
    CHECK(data.values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("dedup falls back to all coordinates when nothing is flagged") {
    const std::vector<double> x_def{0.5, 0.5, 0.5};
    const auto gt = make_gt(3, {}, x_def, 1.0, {},
                            {{{0.5, 0.5, 0.9}, 2.0},
                             {{0.5, 0.5, 0.9}, 2.5},   // exact repeat
                             {{0.5, 0.9, 0.5}, 3.0}});
    const auto data = dedup_gt_data(gt, 1e-9);
    // without the fallback everything would collapse onto the default
    REQUIRE(data.points.size() == 3);
    CHECK(data.values == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("priors follow the activity pattern") {
    const LengthscalePrior act{0.0, 1.0}, inact{7.0, 1.0};
    const auto mixed = build_priors({1, 0, 0, 1}, act, inact);
    REQUIRE(mixed.size() == 4);
    CHECK(mixed[0].mu == 0.0);
    CHECK(mixed[1].mu == 7.0);
    CHECK(mixed[2].mu == 7.0);
    CHECK(mixed[3].mu == 0.0);

    for (const auto& p : build_priors({1, 1, 1}, act, inact))
        CHECK(p.mu == 0.0);
    for (const auto& p : build_priors({0, 0}, act, inact))
        CHECK(p.mu == 7.0);
}

TEST_CASE("log EI matches the closed form from mild to deep tail") {
    const std::vector<std::vector<double>> x{{0.1}, {0.45}, {0.9}};
    const std::vector<double> y{1.0, 0.2, 0.7};
    const auto gp = build_surrogate(x, y, plain_priors(1),
                                    fixed_hyper({0.3}, 1.0, 0.01, 0.0));
    for (double q : {0.2, 0.5, 0.8}) {
        const auto pred = predict(gp, {q});
        const double sd = std::sqrt(pred.variance);
        REQUIRE(sd > 0.0);
        for (double zk : {5.0, 1.0, 0.5, 0.0, -1.0, -3.0, -6.0, -9.5, -12.0,
                          -20.0, -30.0}) {
            const double incumbent = pred.mean + zk * sd;
            const double got = log_expected_improvement(gp, {q}, incumbent);
            const double want = std::log(
                oracles::expected_improvement(pred.mean, sd, incumbent));
            CHECK(got == doctest::Approx(want).epsilon(1e-5));
        }
        // monotone in the incumbent at fixed x
        double prev = -std::numeric_limits<double>::infinity();
        for (double inc = pred.mean - 3.0 * sd; inc < pred.mean + 3.0 * sd;
             inc += 0.1 * sd) {
            const double v = log_expected_improvement(gp, {q}, inc);
            CHECK(v >= prev);
            prev = v;
        }
        // hopeless incumbent bottoms out at the floor
        CHECK(log_expected_improvement(gp, {q}, pred.mean - 60.0 * sd) ==
              -745.0);
    }
}

TEST_CASE("acquisition finds the EI peak of a toy posterior") {
    const std::vector<std::vector<double>> x{{0.05}, {0.35}, {0.65}, {0.95}};
    const std::vector<double> y{0.8, 0.1, 0.9, 0.4};
    const auto gp = build_surrogate(x, y, plain_priors(1),
                                    fixed_hyper({0.12}, 1.0, 1e-4, 0.0));

    double incumbent = std::numeric_limits<double>::infinity();
    for (const auto& p : x)
        incumbent = std::min(incumbent, predict(gp, p).mean);

    double grid_best = 0.0, grid_val = -std::numeric_limits<double>::infinity();
    const int grid_n = 10000;
    for (int i = 0; i <= grid_n; ++i) {
        const double q = static_cast<double>(i) / grid_n;
        const double v = log_expected_improvement(gp, {q}, incumbent);
        if (v > grid_val) {
            grid_val = v;
            grid_best = q;
        }
    }

    BoConfig cfg;
    cfg.acq_raw_samples = 256;
    Rng rng(2024);
    const auto acq = optimize_acquisition(gp, cfg, rng);
    REQUIRE(acq.point.size() == 1);
    CHECK(acq.incumbent == incumbent);
    CHECK(std::abs(acq.point[0] - grid_best) <= 0.01);
    CHECK(acq.log_ei >= grid_val - 1e-5);
}

TEST_CASE("acquisition is deterministic and stays in the box") {
    Rng data_rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::vector<double>> x(14, std::vector<double>(6));
    std::vector<double> y;
    for (auto& row : x) {
        for (double& v : row) v = u01(data_rng);
        y.push_back(std::cos(3.0 * row[0]) + row[1]);
    }
    const auto gp = build_surrogate(
        x, y, plain_priors(6),
        fixed_hyper({0.4, 0.4, 2.0, 2.0, 2.0, 2.0}, 1.0, 0.01, 0.0));

    BoConfig cfg;
    cfg.acq_raw_samples = 128;
    Rng r1(31337), r2(31337);
    const auto a = optimize_acquisition(gp, cfg, r1);
    const auto b = optimize_acquisition(gp, cfg, r2);
    CHECK(a.point == b.point);
    CHECK(a.log_ei == b.log_ei);
    for (double v : a.point) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("acquisition argmax ignores a constant shift of the targets") {
    // dyadic values keep the internal standardization bitwise identical
    const std::vector<std::vector<double>> x{
        {0.0, 0.5},   {0.125, 0.25}, {0.25, 0.75}, {0.375, 0.0},
        {0.5, 0.875}, {0.625, 0.5},  {0.75, 0.125}, {0.875, 1.0}};
    const std::vector<double> y{0.5, 1.25, -0.75, 2.0, 0.25, -1.5, 1.0, 3.25};
    std::vector<double> shifted = y;
    for (double& v : shifted) v += 128.0;

    const auto h = fixed_hyper({0.3, 0.4}, 1.2, 0.05, 0.1);
    const auto gp1 = build_surrogate(x, y, plain_priors(2), h);
    const auto gp2 = build_surrogate(x, shifted, plain_priors(2), h);
    CHECK(gp1.train_targets == gp2.train_targets);
    CHECK(gp2.target_shift == doctest::Approx(gp1.target_shift + 128.0));

    BoConfig cfg;
    cfg.acq_raw_samples = 128;
    Rng r1(99), r2(99);
    const auto a = optimize_acquisition(gp1, cfg, r1);
    const auto b = optimize_acquisition(gp2, cfg, r2);
    CHECK(a.point == b.point);
}

TEST_CASE("the loop improves a quadratic with known activity") {
    const int dim = 10;
    auto f_true = [](const std::vector<double>& x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + (x[1] - 0.7) * (x[1] - 0.7);
    };
    const Objective f = [&](const std::vector<double>& x) {
        return EvalOutcome{f_true(x), f_true(x)};
    };

    std::vector<double> x_def(dim, 0.5);
    Rng gen(5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::pair<std::vector<double>, double>> bins, tests;
    for (int k = 0; k < 4; ++k) {
        std::vector<double> p(dim);
        for (double& v : p) v = u01(gen);
        bins.emplace_back(p, f_true(p));
    }
    for (int k = 0; k < 8; ++k) {
        std::vector<double> p(dim);
        for (double& v : p) v = u01(gen);
        tests.emplace_back(p, f_true(p));
    }
    const auto gt = make_gt(dim, {0, 1}, x_def, f_true(x_def), bins, tests);

    BoConfig cfg;
    cfg.budget = 12;
    cfg.acq_raw_samples = 128;
    cfg.first_fit_iters = 80;
    cfg.refit_iters = 40;

    int recorded = 0;
    Rng rng(17);
    const auto trace = run_bo(f, gt, cfg, rng, [&](const EvalRecord& r) {
        CHECK(r.phase == Phase::Bo);
        ++recorded;
    });

    REQUIRE(trace.size() == 2 + 4 + 8 + 12);
    CHECK(recorded == 12);
    double gt_best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].iteration == static_cast<int>(i) + 1);
        if (i > 0) CHECK(trace[i].incumbent_y <= trace[i - 1].incumbent_y);
        if (trace[i].phase != Phase::Bo) {
            CHECK(!trace[i].truth.has_value());
            gt_best = std::min(gt_best, trace[i].y);
        } else {
            CHECK(trace[i].truth.has_value());
            CHECK(trace[i].incumbent_truth.has_value());
        }
    }
    CHECK(trace[0].phase == Phase::ProbeDefault);
    CHECK(trace[1].phase == Phase::ProbeDefault);
    CHECK(trace[2].phase == Phase::ProbeBin);
    CHECK(trace[6].phase == Phase::GtTest);
    CHECK(trace[14].phase == Phase::Bo);

    CHECK(trace.back().incumbent_y < gt_best);
    CHECK(trace.back().incumbent_y < 0.05);
}

TEST_CASE("budget zero replays only the seeding evaluations") {
    const std::vector<double> x_def{0.5, 0.5};
    const auto gt = make_gt(2, {0}, x_def, 1.0, {},
                            {{{0.9, 0.5}, 2.0}});
    const Objective f = [](const std::vector<double>&) {
        FAIL("objective must not be called");
        return EvalOutcome{0.0, std::nullopt};
    };
    BoConfig cfg;
    cfg.budget = 0;
    Rng rng(1);
    const auto trace = run_bo(f, gt, cfg, rng);
    REQUIRE(trace.size() == 3);
    for (const auto& row : trace) CHECK(row.phase != Phase::Bo);
    CHECK(trace.back().incumbent_y == 1.0);
}

TEST_CASE("a starved dataset gets space-filling seeds from the budget") {
    GtResult gt;
    gt.active_dims.assign(3, 0);
    gt.probe.default_estimate = 0.0;
    const Objective f = [](const std::vector<double>& x) {
        return EvalOutcome{x[0], x[0]};
    };
    BoConfig cfg;
    cfg.budget = 5;
    cfg.acq_raw_samples = 64;
    cfg.first_fit_iters = 40;
    cfg.refit_iters = 20;
    Rng rng(9);
    const auto trace = run_bo(f, gt, cfg, rng);
    REQUIRE(trace.size() == 5);
    for (const auto& row : trace) {
        CHECK(row.phase == Phase::Bo);
        CHECK(row.point.size() == 3);
    }
}

TEST_CASE("inactive dimensions keep longer fitted lengthscales") {
    Rng gen(23);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::vector<double>> x(24, std::vector<double>(5));
    std::vector<double> y;
    for (auto& row : x) {
        for (double& v : row) v = u01(gen);
        y.push_back((row[0] - 0.3) * (row[0] - 0.3) +
                    (row[1] - 0.7) * (row[1] - 0.7));
    }
    GpPriors priors;
    priors.lengthscales = build_priors({1, 1, 0, 0, 0}, {0.0, 1.0}, {7.0, 1.0});
    Rng rng(4);
    const auto gp = fit_map(x, y, priors, GpFitConfig{}, rng);
    const double active_max =
        std::max(gp.hyper.lengthscales[0], gp.hyper.lengthscales[1]);
    const double inactive_min = std::min(
        {gp.hyper.lengthscales[2], gp.hyper.lengthscales[3],
         gp.hyper.lengthscales[4]});
    CHECK(inactive_min > active_max);
}

TEST_CASE("config validation") {
    BoConfig cfg;
    cfg.budget = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = BoConfig{};
    cfg.acq_restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = BoConfig{};
    cfg.acq_raw_samples = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = BoConfig{};
    cfg.dedup_tolerance = -1e-9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = BoConfig{};
    cfg.inactive_prior.sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(dedup_gt_data(GtResult{}, -1.0), std::invalid_argument);
}

}  // TEST_SUITE
