#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"
#include "loadid/upper_stage.hpp"

#include "test_support.hpp"

using namespace loadid;

namespace {

MeasurementSeries constant_series(std::size_t n, double v, double p) {
    MeasurementSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        s.t.push_back(static_cast<double>(i) * 0.01);
        s.v.push_back(v);
        s.theta.push_back(0.0);
        s.p.push_back(p);
        s.q.push_back(0.0);
    }
    return s;
}

} // namespace

TEST_SUITE_BEGIN("upper_stage");

TEST_CASE("feasible_region_from_data extracts tm_max and v_min") {
    MeasurementSeries s = constant_series(100, 1.0, 5.0);
    s.v[31] = 0.97;
    s.v[32] = 1.01;
    const FeasibleRegion region = feasible_region_from_data(s);
    CHECK(region.tm_max == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(region.v_min == 0.97);
    CHECK(region.lower == std::array<double, 3>{10.0, 3.0, 0.5});
    CHECK(region.upper == std::array<double, 3>{80.0, 30.0, 3.0});
}

TEST_CASE("check_feasible covers box, tm and stability constraints") {
    FeasibleRegion region;
    region.tm_max = 2.0;
    region.v_min = 0.95;

    CHECK(is_feasible(IMParamsTransformed{45.0, 16.0, 1.5, 1.0}, region));

    const auto low_a = check_feasible(IMParamsTransformed{9.9, 16.0, 1.5, 0.5}, region);
    CHECK_FALSE(low_a.feasible);
    CHECK(low_a.violation.find("a") != std::string::npos);

    const auto high_tm =
        check_feasible(IMParamsTransformed{45.0, 16.0, 1.5, 2.0001}, region);
    CHECK_FALSE(high_tm.feasible);
    CHECK(high_tm.violation.find("tm") != std::string::npos);

    // a*v_min^2 = 10*0.9025 = 9.025 < 2*b*tm = 2*30*1 = 60.
    const auto unstable =
        check_feasible(IMParamsTransformed{10.0, 30.0, 1.5, 1.0}, region);
    CHECK_FALSE(unstable.feasible);
    CHECK(unstable.violation.find("stability") != std::string::npos);
}

TEST_CASE("literal stability form ignores tm") {
    FeasibleRegion region;
    region.tm_max = 2.0;
    region.v_min = 1.0;
    region.literal_stability = true;
    // a = 30 > 2*b = 28 holds even though 2*b*tm = 56 would fail.
    CHECK(is_feasible(IMParamsTransformed{30.0, 14.0, 1.5, 2.0}, region));
    region.literal_stability = false;
    CHECK_FALSE(is_feasible(IMParamsTransformed{30.0, 14.0, 1.5, 2.0}, region));
}

TEST_CASE("sample_feasible always returns feasible points") {
    FeasibleRegion region;
    region.tm_max = 1.5;
    region.v_min = 0.97;
    for (int i = 0; i < 1000; ++i) {
        const IMParamsTransformed d = sample_feasible(region, derive_seed(70, i));
        CHECK(is_feasible(d, region));
    }
    const IMParamsTransformed a = sample_feasible(region, 1);
    const IMParamsTransformed b = sample_feasible(region, 2);
    CHECK(a.a != b.a);
}

TEST_CASE("sample_feasible covers the box uniformly when the cut is inactive") {
    FeasibleRegion region;
    region.tm_max = 0.1; // stability cut never binds: 10*0.81 > 2*30*0.1
    region.v_min = 0.9;
    std::array<int, 10> bins{};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const IMParamsTransformed d = sample_feasible(region, derive_seed(71, i));
        const auto bin = static_cast<std::size_t>((d.a - 10.0) / 7.0);
        ++bins[std::min<std::size_t>(bin, 9)];
    }
    for (int count : bins) {
        CHECK(count > 850);
        CHECK(count < 1150);
    }
}

TEST_CASE("sample_feasible reports an effectively empty region") {
    FeasibleRegion region;
    region.tm_max = 1.0;
    region.v_min = 0.1; // a*v_min^2 <= 0.8 < 2*b = 6 for every box point
    region.literal_stability = true;
    CHECK_THROWS_AS(sample_feasible(region, 3), InfeasibleError);
}

TEST_CASE("minimize recovers the generator on clean data") {
    const auto c = testing::default_case();
    const MeasurementSeries data = testing::clean_window(c);
    const FeasibleRegion region = feasible_region_from_data(data);
    SolverOptions opts;
    opts.seed = 9;

    const IdentificationResult result =
        minimize(data, region, opts, WindowPolicy{}, c.cfg);

    CHECK(testing::rel_err(result.d_opt.a, c.d_true.a) < 0.01);
    CHECK(testing::rel_err(result.d_opt.b, c.d_true.b) < 0.01);
    CHECK(testing::rel_err(result.d_opt.h2, c.d_true.h2) < 0.01);
    CHECK(testing::rel_err(result.d_opt.tm, c.d_true.tm) < 1e-3);
    CHECK(is_feasible(result.d_opt, region));
    CHECK(result.starts.size() == 3);

    // of_opt is the best across starts.
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : result.starts) best = std::min(best, s.of_final);
    CHECK(result.of_opt == best);

    // Accepted-iterate objective sequences never increase.
    for (const auto& s : result.starts) {
        for (std::size_t i = 1; i < s.of_trace.size(); ++i) {
            CHECK(s.of_trace[i] <= s.of_trace[i - 1] + 1e-18);
        }
        CHECK(is_feasible(s.d_final, region));
    }
}

TEST_CASE("minimize is deterministic") {
    const auto c = testing::make_case(5);
    const MeasurementSeries data = testing::clean_window(c);
    const FeasibleRegion region = feasible_region_from_data(data);
    SolverOptions opts;
    opts.seed = 11;
    opts.n_starts = 2;
    const IdentificationResult r1 = minimize(data, region, opts, WindowPolicy{}, c.cfg);
    const IdentificationResult r2 = minimize(data, region, opts, WindowPolicy{}, c.cfg);
    CHECK(r1.d_opt.a == r2.d_opt.a);
    CHECK(r1.d_opt.b == r2.d_opt.b);
    CHECK(r1.d_opt.h2 == r2.d_opt.h2);
    CHECK(r1.d_opt.tm == r2.d_opt.tm);
    CHECK(r1.of_opt == r2.of_opt);
    CHECK(r1.starts.size() == r2.starts.size());
}

TEST_CASE("minimize throws when every start fails") {
    // A window at 1e7 p.u. voltage trips the divergence guard on the first
    // step for every feasible candidate.
    MeasurementSeries s = constant_series(1001, 1.0e7, 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.v[i] += 1e3 * std::sin(0.5 * static_cast<double>(i));
    }
    const FeasibleRegion region = feasible_region_from_data(s);
    SolverOptions opts;
    opts.seed = 4;
    SystemConfig cfg;
    CHECK_THROWS_AS(minimize(s, region, opts, WindowPolicy{}, cfg), NumericError);
}

TEST_CASE("single starts from many seeds agree on clean data") {
    const auto c = testing::default_case();
    const MeasurementSeries data = testing::clean_window(c);
    const FeasibleRegion region = feasible_region_from_data(data);
    SolverOptions opts;
    opts.n_starts = 1;

    int close = 0;
    const int runs = 20;
    std::vector<IMParamsTransformed> finals;
    for (int k = 0; k < runs; ++k) {
        opts.seed = derive_seed(900, k);
        const IdentificationResult r = minimize(data, region, opts, WindowPolicy{}, c.cfg);
        finals.push_back(r.d_opt);
    }
    for (const auto& d : finals) {
        const double dist = std::abs(d.a / c.d_true.a - 1.0) +
                            std::abs(d.b / c.d_true.b - 1.0) +
                            std::abs(d.h2 / c.d_true.h2 - 1.0) +
                            std::abs(d.tm / c.d_true.tm - 1.0);
        if (dist < 0.1) ++close;
    }
    CHECK(close >= 19); // at least 95%
}

TEST_CASE("solver options validation") {
    SolverOptions opts;
    opts.n_starts = 0;
    CHECK_THROWS_AS(opts.validate(), ValidationError);
    opts = SolverOptions{};
    opts.tol_step = 0.0;
    CHECK_THROWS_AS(opts.validate(), ValidationError);
}

TEST_SUITE_END();
