#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"
#include "loadid/signals.hpp"

#include "test_support.hpp"

using namespace loadid;

namespace {

double sample_std(const std::vector<double>& x, double mean) {
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (static_cast<double>(x.size()) - 1.0));
}

/// Mean power spectral density over [f_lo, f_hi], via plain DFT bins.
double band_power(const std::vector<double>& x, double dt, double f_lo,
                  double f_hi) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);

    double power = 0.0;
    std::size_t bins = 0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double f = static_cast<double>(k) / (static_cast<double>(n) * dt);
        if (f < f_lo || f > f_hi) continue;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(k) *
                             static_cast<double>(i) / static_cast<double>(n);
            re += (x[i] - mean) * std::cos(w);
            im -= (x[i] - mean) * std::sin(w);
        }
        power += re * re + im * im;
        ++bins;
    }
    REQUIRE(bins > 0);
    return power / static_cast<double>(bins);
}

/// Amplitude and phase of a series at one frequency, by quadrature projection.
std::pair<double, double> tone_response(const std::vector<double>& y, double dt,
                                        double freq) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * freq * static_cast<double>(i) * dt;
        re += y[i] * std::sin(w);
        im += y[i] * std::cos(w);
    }
    const double scale = 2.0 / static_cast<double>(y.size());
    return {std::hypot(re * scale, im * scale), std::atan2(im, re)};
}

MeasurementSeries flat_series(std::size_t n, double dt, double v, double p,
                              double q) {
    MeasurementSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        s.t.push_back(static_cast<double>(i) * dt);
        s.v.push_back(v);
        s.theta.push_back(0.0);
        s.p.push_back(p);
        s.q.push_back(q);
    }
    return s;
}

} // namespace

TEST_SUITE_BEGIN("signals");

TEST_CASE("generate_ambient with zero noise is flat") {
    AmbientSpec spec;
    spec.noise_std = 0.0;
    spec.v_mean = 1.02;
    spec.theta_mean = 0.1;
    const VoltageTrajectory traj = generate_ambient(spec);
    CHECK(traj.size() == 1001);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(traj.v[i] == 1.02);
        CHECK(traj.theta[i] == 0.1);
    }
}

TEST_CASE("generate_ambient is deterministic per seed") {
    AmbientSpec spec;
    spec.seed = 99;
    const VoltageTrajectory a = generate_ambient(spec);
    const VoltageTrajectory b = generate_ambient(spec);
    CHECK(a.v == b.v);
    CHECK(a.theta == b.theta);
    spec.seed = 100;
    const VoltageTrajectory c = generate_ambient(spec);
    CHECK(a.v != c.v);
}

TEST_CASE("generate_ambient fluctuation scales linearly with noise_std") {
    AmbientSpec spec;
    spec.duration = 100.0; // 10001 samples
    spec.seed = 7;
    spec.noise_std = 0.01;
    const VoltageTrajectory base = generate_ambient(spec);
    spec.noise_std = 0.02;
    const VoltageTrajectory doubled = generate_ambient(spec);
    const double s1 = sample_std(base.v, spec.v_mean);
    const double s2 = sample_std(doubled.v, spec.v_mean);
    CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("generate_ambient attenuates above the cutoff by 20 dB or more") {
    AmbientSpec spec;
    spec.duration = 40.0;
    spec.seed = 21;
    const VoltageTrajectory traj = generate_ambient(spec);
    const double pass = band_power(traj.v, spec.dt, 0.2, 1.5);
    const double stop = band_power(traj.v, spec.dt, 20.0, 45.0);
    CHECK(10.0 * std::log10(pass / stop) > 20.0);
}

TEST_CASE("snr_db follows the energy-ratio law") {
    const std::vector<double> sig{3.0, 4.0};
    const std::vector<double> noise{0.3, 0.4};
    CHECK(snr_db(sig, sig) == doctest::Approx(0.0).scale(1.0));
    CHECK(snr_db(sig, noise) == doctest::Approx(20.0).epsilon(1e-12));
    std::vector<double> tenth = noise;
    for (double& v : tenth) v *= 0.1;
    CHECK(snr_db(sig, tenth) == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("snr_db rejects degenerate input") {
    const std::vector<double> sig{1.0, 2.0};
    CHECK_THROWS_AS(snr_db(sig, std::vector<double>{0.0, 0.0}), NumericError);
    CHECK_THROWS_AS(snr_db(sig, std::vector<double>{0.1}), ValidationError);
}

TEST_CASE("lowpass_zero_phase passes constants unchanged") {
    std::vector<double> x(500, 3.7);
    const auto y = lowpass_zero_phase(x, 2.0, 0.01);
    for (double v : y) CHECK(v == doctest::Approx(3.7).epsilon(1e-9));
}

TEST_CASE("lowpass_zero_phase frequency response") {
    const double dt = 0.01, fc = 2.0;
    const std::size_t n = 4001;

    SUBCASE("a tone at 10x cutoff is attenuated by at least 20 dB") {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = std::sin(2.0 * std::numbers::pi * 10.0 * fc * i * dt);
        }
        const auto y = lowpass_zero_phase(x, fc, dt);
        const auto [amp, phase] = tone_response(y, dt, 10.0 * fc);
        CHECK(amp < 0.1);
    }

    SUBCASE("a tone at cutoff/10 passes with unit gain and zero phase") {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = std::sin(2.0 * std::numbers::pi * 0.1 * fc * i * dt);
        }
        const auto y = lowpass_zero_phase(x, fc, dt);
        const auto [amp, phase] = tone_response(y, dt, 0.1 * fc);
        CHECK(amp == doctest::Approx(1.0).epsilon(0.02));
        CHECK(std::abs(phase) < 0.01);
    }
}

TEST_CASE("lowpass_zero_phase is linear") {
    Rng rng(31);
    std::vector<double> x(800), y(800);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const double alpha = 1.7, beta = -0.6;
    std::vector<double> combo(800);
    for (std::size_t i = 0; i < combo.size(); ++i) {
        combo[i] = alpha * x[i] + beta * y[i];
    }
    const auto fx = lowpass_zero_phase(x, 2.0, 0.01);
    const auto fy = lowpass_zero_phase(y, 2.0, 0.01);
    const auto fc = lowpass_zero_phase(combo, 2.0, 0.01);
    for (std::size_t i = 0; i < combo.size(); ++i) {
        CHECK(fc[i] == doctest::Approx(alpha * fx[i] + beta * fy[i])
                           .epsilon(1e-12)
                           .scale(1.0));
    }
}

TEST_CASE("lowpass_filter applies to every channel and keeps the grid") {
    const auto window = testing::clean_window(testing::default_case());
    const auto filtered = lowpass_filter(window, 2.0);
    CHECK(filtered.t == window.t);
    CHECK(filtered.size() == window.size());
    filtered.validate();
}

TEST_CASE("inject_noise realizes the target SNR on the random component") {
    const auto clean = testing::clean_window(testing::default_case());
    NoiseSpec spec;
    spec.target_snr_db = 14.0;
    spec.offset_fraction = 0.0;
    int within = 0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        spec.seed = static_cast<std::uint64_t>(i);
        const NoiseInjection inj = inject_noise(clean, spec);
        if (std::abs(inj.snr_p_db - 14.0) <= 0.5 &&
            std::abs(inj.snr_q_db - 14.0) <= 0.5) {
            ++within;
        }
        // Phasor channels carry the configured extra margin.
        CHECK(inj.snr_v_db ==
              doctest::Approx(14.0 + spec.v_theta_extra_snr_db).epsilon(0.05));
        CHECK(inj.snr_theta_db ==
              doctest::Approx(14.0 + spec.v_theta_extra_snr_db).epsilon(0.05));
        CHECK(inj.snr_pq_avg_db ==
              doctest::Approx(0.5 * (inj.snr_p_db + inj.snr_q_db)));
    }
    CHECK(within == trials);
}

TEST_CASE("inject_noise at 300 dB returns the input to 7 significant digits") {
    const auto clean = testing::clean_window(testing::default_case());
    NoiseSpec spec;
    spec.target_snr_db = 300.0;
    spec.offset_fraction = 0.0;
    spec.seed = 5;
    const NoiseInjection inj = inject_noise(clean, spec);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(testing::rel_err(inj.noisy.p[i], clean.p[i]) < 1e-7);
        CHECK(testing::rel_err(inj.noisy.q[i], clean.q[i]) < 1e-7);
        CHECK(testing::rel_err(inj.noisy.v[i], clean.v[i]) < 1e-7);
    }
}

TEST_CASE("inject_noise errors are zero-mean without an offset") {
    const auto clean = testing::clean_window(testing::default_case());
    NoiseSpec spec;
    spec.target_snr_db = 14.0;
    spec.offset_fraction = 0.0;
    spec.seed = 1234;
    const NoiseInjection inj = inject_noise(clean, spec);
    const std::size_t n = clean.size();
    std::vector<double> err(n);
    double sum = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err[i] = inj.noisy.p[i] - clean.p[i];
        sum += err[i];
    }
    const double mean = sum / static_cast<double>(n);
    for (double e : err) ss += (e - mean) * (e - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("inject_noise offset shifts each channel by the requested fraction") {
    const auto clean = testing::clean_window(testing::default_case());
    NoiseSpec spec;
    spec.target_snr_db = 80.0; // make the random part negligible
    spec.offset_fraction = 0.001;
    spec.seed = 77;
    const NoiseInjection inj = inject_noise(clean, spec);
    double clean_mean = 0.0, noisy_mean = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        clean_mean += clean.p[i];
        noisy_mean += inj.noisy.p[i];
    }
    clean_mean /= static_cast<double>(clean.size());
    noisy_mean /= static_cast<double>(clean.size());
    CHECK(std::abs(noisy_mean - clean_mean) ==
          doctest::Approx(0.001 * std::abs(clean_mean)).epsilon(0.05));
}

TEST_CASE("increasing the error magnitude strictly decreases the realized SNR") {
    const auto clean = testing::clean_window(testing::default_case());
    const auto base = noise_std_for_target(clean, 20.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 2.0, 4.0, 8.0}) {
        std::array<double, 4> stds = base;
        for (double& s : stds) s *= scale;
        const NoiseInjection inj = inject_noise_with_std(clean, stds, 0.0, 3);
        CHECK(inj.snr_pq_avg_db < prev);
        prev = inj.snr_pq_avg_db;
    }
}

TEST_CASE("noise_std_for_target rejects flat channels") {
    const auto flat = flat_series(600, 0.01, 1.0, 2.0, -1.0);
    CHECK_THROWS_AS(noise_std_for_target(flat, 14.0), NumericError);
}

TEST_CASE("generate_fault_voltage shapes the sag window") {
    AmbientSpec base;
    base.duration = 5.0;
    base.seed = 17;
    FaultSpec fault;
    fault.t_fault = 1.0;
    fault.t_clear = 1.15;
    fault.v_sag = 0.85;
    fault.recovery_tau = 0.2;

    const VoltageTrajectory traj = generate_fault_voltage(fault, base);

    SUBCASE("voltage equals v_sag exactly during the fault") {
        double fault_min = 1e9, fault_max = -1e9;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.t[i] >= fault.t_fault && traj.t[i] <= fault.t_clear) {
                fault_min = std::min(fault_min, traj.v[i]);
                fault_max = std::max(fault_max, traj.v[i]);
            }
        }
        CHECK(fault_min == 0.85);
        CHECK(fault_max == 0.85);
    }

    SUBCASE("voltage recovers to the mean within 1% after 5 time constants") {
        const double t_check = fault.t_clear + 5.0 * fault.recovery_tau;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.t[i] >= t_check) {
                CHECK(traj.v[i] == doctest::Approx(base.v_mean).epsilon(0.01));
            }
        }
    }

    SUBCASE("a sag equal to the mean reproduces the ambient trajectory") {
        FaultSpec none = fault;
        none.v_sag = base.v_mean;
        AmbientSpec low = base;
        low.v_mean = 0.95; // keep v_sag < 1 valid
        none.v_sag = 0.95;
        const VoltageTrajectory plain = generate_ambient(low);
        const VoltageTrajectory shaped = generate_fault_voltage(none, low);
        CHECK(shaped.v == plain.v);
        CHECK(shaped.theta == plain.theta);
    }
}

TEST_CASE("fault spec validation") {
    AmbientSpec base;
    FaultSpec bad;
    bad.t_fault = 2.0;
    bad.t_clear = 1.0;
    CHECK_THROWS_AS(generate_fault_voltage(bad, base), ValidationError);
    FaultSpec deep;
    deep.v_sag = 0.0;
    CHECK_THROWS_AS(generate_fault_voltage(deep, base), ValidationError);
}

TEST_SUITE_END();
