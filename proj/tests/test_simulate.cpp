#include <cmath>
#include <numbers>

#include <doctest.h>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"
#include "loadid/simulate.hpp"

#include "test_support.hpp"

using namespace loadid;

namespace {

double steady_rate_norm(const IMParamsTransformed& d, const PhasorDQ& v,
                        const SystemConfig& cfg) {
    const IMState st = steady_state_init(d, v, cfg);
    const IMStateRate r = im_derivatives(st, v, d, cfg);
    return std::max({std::abs(r.fd_dot), std::abs(r.fq_dot), std::abs(r.s_dot)});
}

VoltageTrajectory constant_voltage(double v, double theta, double duration,
                                   double dt) {
    VoltageTrajectory traj;
    const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        traj.t.push_back(static_cast<double>(i) * dt);
        traj.v.push_back(v);
        traj.theta.push_back(theta);
    }
    return traj;
}

} // namespace

TEST_SUITE_BEGIN("simulate");

TEST_CASE("steady_state_init with tm = 0 gives zero slip and F = a*v/b") {
    const SystemConfig cfg;
    const IMParamsTransformed d{45.0, 16.0, 1.5, 0.0};
    const PhasorDQ v = polar_to_dq(1.0, 0.2);
    const IMState st = steady_state_init(d, v, cfg);
    CHECK(st.s == 0.0);
    CHECK(st.fd == doctest::Approx(d.a * v.vd / d.b).epsilon(1e-14));
    CHECK(st.fq == doctest::Approx(d.a * v.vq / d.b).epsilon(1e-14));
    const PowerPQ out = im_output(st, v);
    CHECK(out.p == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("steady_state_init slip is the smaller quadratic root") {
    const SystemConfig cfg; // omega0 = 100*pi
    const IMParamsTransformed d{70.0, 15.0, 1.0, 0.5};
    const PhasorDQ v{1.0, 0.0};
    const IMState st = steady_state_init(d, v, cfg);

    // Independent long-double quadratic solve of
    //   tm*w0^2*s^2 - a*v^2*w0*s + tm*b^2 = 0.
    const long double w0 = cfg.omega0;
    const long double a_coef = 0.5L * w0 * w0;
    const long double b_coef = -70.0L * w0;
    const long double c_coef = 0.5L * 15.0L * 15.0L;
    const long double disc = b_coef * b_coef - 4.0L * a_coef * c_coef;
    const long double root_small =
        (-b_coef - std::sqrt(disc)) / (2.0L * a_coef);
    const long double root_large =
        (-b_coef + std::sqrt(disc)) / (2.0L * a_coef);

    CHECK(st.s == doctest::Approx(static_cast<double>(root_small)).epsilon(1e-12));
    CHECK(st.s < static_cast<double>(root_large));
    CHECK(steady_rate_norm(d, v, cfg) < 1e-9);
}

TEST_CASE("steady_state_init residuals vanish across random feasible draws") {
    const SystemConfig cfg;
    Rng rng(41);
    for (int i = 0; i < 500; ++i) {
        IMParamsTransformed d{rng.uniform(10, 80), rng.uniform(3, 30),
                              rng.uniform(0.5, 3.0), 0.0};
        const double vmag = rng.uniform(0.9, 1.1);
        d.tm = rng.uniform(0.0, 0.95) * d.a * vmag * vmag / (2.0 * d.b);
        const PhasorDQ v = polar_to_dq(vmag, rng.uniform(-0.5, 0.5));
        CHECK(steady_rate_norm(d, v, cfg) < 1e-9);
    }
}

TEST_CASE("steady_state_init at the feasibility boundary has slip b/omega0") {
    const SystemConfig cfg;
    // a*v^2 = 2*b*tm exactly: a = 30, b = 3, tm = 5, v = 1.
    const IMParamsTransformed d{30.0, 3.0, 1.0, 5.0};
    const PhasorDQ v{1.0, 0.0};
    const IMState st = steady_state_init(d, v, cfg);
    CHECK(st.s * cfg.omega0 == doctest::Approx(d.b).epsilon(1e-9));
    CHECK(steady_rate_norm(d, v, cfg) < 1e-9);
}

TEST_CASE("steady_state_init rejects infeasible torque demands") {
    const SystemConfig cfg;
    const PhasorDQ v{1.0, 0.0};
    // Peak torque is a*v^2/(2b) = 1.40625; ask for more.
    CHECK_THROWS_AS(
        steady_state_init(IMParamsTransformed{45.0, 16.0, 1.5, 1.41}, v, cfg),
        InfeasibleError);
    CHECK_THROWS_AS(
        steady_state_init(IMParamsTransformed{45.0, 16.0, 1.5, 0.5},
                          PhasorDQ{0.0, 0.0}, cfg),
        InfeasibleError);
}

TEST_CASE("simulate_composite holds the steady state under constant voltage") {
    const auto c = testing::default_case();
    const VoltageTrajectory traj = constant_voltage(1.0, 0.1, 10.0, 0.01);
    const MeasurementSeries out = simulate_composite(c.load, traj, c.cfg);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out.p[i] == doctest::Approx(out.p[0]).epsilon(1e-8).scale(1.0));
        CHECK(out.q[i] == doctest::Approx(out.q[0]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("fixed point invariance over 1e4 steps") {
    const SystemConfig cfg;
    const IMParamsTransformed d{45.0, 16.0, 1.5, 0.6};
    const PhasorDQ v = polar_to_dq(1.0, 0.0);
    const IMState init = steady_state_init(d, v, cfg);
    IMState st = init;
    for (int i = 0; i < 10000; ++i) {
        st = IMState{st.fd + cfg.dt * im_derivatives(st, v, d, cfg).fd_dot,
                     st.fq + cfg.dt * im_derivatives(st, v, d, cfg).fq_dot,
                     st.s + cfg.dt * im_derivatives(st, v, d, cfg).s_dot};
    }
    CHECK(std::abs(st.fd - init.fd) < 1e-6);
    CHECK(std::abs(st.fq - init.fq) < 1e-6);
    CHECK(std::abs(st.s - init.s) < 1e-6);
}

TEST_CASE("electromagnetic torque equals tm at steady state") {
    const SystemConfig cfg;
    Rng rng(43);
    for (int i = 0; i < 100; ++i) {
        IMParamsTransformed d{rng.uniform(15, 75), rng.uniform(4, 28),
                              rng.uniform(0.6, 2.8), 0.0};
        d.tm = rng.uniform(0.05, 0.9) * d.a / (2.0 * d.b);
        const PhasorDQ v = polar_to_dq(1.0, rng.uniform(-0.4, 0.4));
        const IMState st = steady_state_init(d, v, cfg);
        const double te = v.vq * st.fd - v.vd * st.fq;
        CHECK(te == doctest::Approx(d.tm).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("unloaded motor with zero static load draws no active power") {
    SystemConfig cfg;
    const CompositeLoad load{IMParamsTransformed{45.0, 16.0, 1.5, 0.0},
                             ZIPParams{}};
    const VoltageTrajectory traj = constant_voltage(1.0, 0.0, 5.0, 0.01);
    const MeasurementSeries out = simulate_composite(load, traj, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(std::abs(out.p[i]) < 1e-12);
    }
}

TEST_CASE("transformed and original simulations agree through a window") {
    // The transformed model with qz absorbing 1/xp must reproduce the
    // original third-order model to integration roundoff.
    AmbientSpec ambient;
    ambient.seed = 311;
    const VoltageTrajectory traj = generate_ambient(ambient);
    SystemConfig cfg;

    double worst_p = 0.0, worst_q = 0.0;
    for (int i = 0; i < 10; ++i) {
        const IMParamsPhysical phys = testing::random_physical(derive_seed(50, i));
        const ZIPParams zip{0.3, 0.4, 0.35, -0.4, 0.3, 0.25};
        const CompositeLoad physical{phys, zip};

        ZIPParams absorbed = zip;
        absorbed.qz += 1.0 / phys.xp;
        const CompositeLoad transformed{transform_params(phys), absorbed};

        const MeasurementSeries mp = simulate_composite(physical, traj, cfg);
        const MeasurementSeries mt = simulate_composite(transformed, traj, cfg);
        for (std::size_t k = 0; k < mp.size(); ++k) {
            worst_p = std::max(worst_p, std::abs(mp.p[k] - mt.p[k]));
            worst_q = std::max(worst_q, std::abs(mp.q[k] - mt.q[k]));
        }
    }
    CHECK(worst_p < 1e-9);
    CHECK(worst_q < 1e-9);
}

TEST_CASE("explicit Euler converges at first order against the 4-stage method") {
    const auto c = testing::default_case();
    AmbientSpec ambient = c.ambient;
    ambient.duration = 4.0;
    const VoltageTrajectory traj = generate_ambient(ambient);

    SimOptions reference;
    reference.method = Integrator::RK4;
    reference.dt = 0.0025;
    const MeasurementSeries ref = simulate_composite(c.load, traj, c.cfg, reference);

    SimOptions coarse; // Euler at the grid step
    const MeasurementSeries e1 = simulate_composite(c.load, traj, c.cfg, coarse);
    SimOptions fine;
    fine.dt = 0.005;
    const MeasurementSeries e2 = simulate_composite(c.load, traj, c.cfg, fine);

    const std::size_t last = ref.size() - 1;
    const double err1 = std::abs(e1.p[last] - ref.p[last]);
    const double err2 = std::abs(e2.p[last] - ref.p[last]);
    CHECK(err1 / err2 == doctest::Approx(2.0).epsilon(0.5));
}

TEST_CASE("divergence guard fails fast") {
    const auto c = testing::default_case();
    const VoltageTrajectory traj = constant_voltage(1.0, 0.0, 2.0, 0.01);
    SimOptions opts;
    opts.divergence_guard = 1.0; // below the steady EMF magnitude
    CHECK_THROWS_AS(simulate_composite(c.load, traj, c.cfg, opts),
                    DivergenceError);
}

TEST_CASE("record_stride subsamples the output grid") {
    const auto c = testing::default_case();
    const VoltageTrajectory traj = constant_voltage(1.0, 0.0, 1.0, 0.01);
    SimOptions opts;
    opts.record_stride = 10;
    const MeasurementSeries out = simulate_composite(c.load, traj, c.cfg, opts);
    CHECK(out.size() == 11);
    CHECK(out.t[1] == doctest::Approx(0.1));
}

TEST_CASE("predict_im_power converges onto the true motor trajectory") {
    const auto c = testing::default_case();
    const VoltageTrajectory traj = generate_ambient(c.ambient);

    // Motor-only reference: same load with the static part removed.
    const CompositeLoad motor_only{c.load.motor, ZIPParams{}};
    const MeasurementSeries ref = simulate_composite(motor_only, traj, c.cfg);

    // Predict from t = 2 s with a steady-state guess.
    const std::size_t start = 200;
    const std::span<const double> v(traj.v.data() + start, traj.v.size() - start);
    const std::span<const double> th(traj.theta.data() + start,
                                     traj.theta.size() - start);
    const PowerSeries pred = predict_im_power(
        std::get<IMParamsTransformed>(c.load.motor), v, th, 0.01, c.cfg);

    // After the warm-up the prediction must track the true motor closely.
    double worst_after_warmup = 0.0;
    for (std::size_t i = 0; i < pred.p.size(); ++i) {
        if (static_cast<double>(i) * 0.01 < 0.5) continue;
        worst_after_warmup = std::max(
            worst_after_warmup, std::abs(pred.p[i] - ref.p[start + i]));
    }
    CHECK(worst_after_warmup < 1e-4);

    // A far-off candidate deviates visibly more over the same range.
    IMParamsTransformed wrong = std::get<IMParamsTransformed>(c.load.motor);
    wrong.a *= 1.31;
    wrong.b *= 1.09;
    wrong.h2 *= 0.60;
    wrong.tm *= 0.76;
    const PowerSeries off = predict_im_power(wrong, v, th, 0.01, c.cfg);
    double worst_wrong = 0.0;
    for (std::size_t i = 0; i < off.p.size(); ++i) {
        if (static_cast<double>(i) * 0.01 < 0.5) continue;
        worst_wrong = std::max(worst_wrong, std::abs(off.p[i] - ref.p[start + i]));
    }
    CHECK(worst_wrong > 10.0 * worst_after_warmup);
}

TEST_CASE("constant-voltage prediction stays at the balanced steady output") {
    const SystemConfig cfg;
    const IMParamsTransformed d{45.0, 16.0, 1.5, 0.6};
    const VoltageTrajectory traj = constant_voltage(1.0, 0.0, 3.0, 0.01);
    const PowerSeries out = predict_im_power(d, traj.v, traj.theta, 0.01, cfg);
    for (std::size_t i = 0; i < out.p.size(); ++i) {
        CHECK(out.p[i] == doctest::Approx(d.tm).epsilon(1e-9));
        CHECK(out.q[i] == doctest::Approx(out.q[0]).epsilon(1e-9).scale(1.0));
    }
}

TEST_SUITE_END();
