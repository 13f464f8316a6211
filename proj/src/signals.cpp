#include "loadid/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"

namespace loadid {

namespace {

constexpr double kPi = std::numbers::pi;

struct Biquad {
    double b0, b1, b2; // numerator
    double a1, a2;     // denominator (a0 normalized to 1)
};

/// Second-order critically flat (Butterworth) low pass via the bilinear
/// transform with frequency prewarp. Coefficient sums satisfy
/// b0+b1+b2 == 1+a1+a2, so the DC gain is exactly 1.
Biquad butterworth2_lowpass(double cutoff_hz, double dt) {
    const double k = std::tan(kPi * cutoff_hz * dt);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    return Biquad{
        .b0 = k2 * norm,
        .b1 = 2.0 * k2 * norm,
        .b2 = k2 * norm,
        .a1 = 2.0 * (k2 - 1.0) * norm,
        .a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm,
    };
}

/// Direct-form-II-transposed pass, state initialized to the steady response
/// of the first sample so constants pass through bit-clean.
void filter_forward(const Biquad& f, std::vector<double>& x) {
    if (x.empty()) return;
    const double x0 = x.front();
    double w2 = (f.b2 - f.a2) * x0;
    double w1 = (f.b1 - f.a1) * x0 + w2;
    for (double& xi : x) {
        const double y = f.b0 * xi + w1;
        w1 = f.b1 * xi - f.a1 * y + w2;
        w2 = f.b2 * xi - f.a2 * y;
        xi = y;
    }
}

void check_filter_args(std::size_t n, double cutoff_hz, double dt) {
    if (cutoff_hz <= 0.0) throw ValidationError("cutoff frequency must be positive");
    if (dt <= 0.0) throw ValidationError("dt must be positive");
    if (dt >= 1.0 / (2.0 * cutoff_hz)) {
        throw ValidationError("dt must satisfy dt < 1/(2*cutoff_hz)");
    }
    if (n == 0) throw ValidationError("cannot filter an empty series");
}

/// |H(e^{j w})|^2 of the biquad at normalized angular frequency w.
double biquad_gain_sq(const Biquad& f, double w) {
    const double c1 = std::cos(w), s1 = std::sin(w);
    const double c2 = std::cos(2.0 * w), s2 = std::sin(2.0 * w);
    const double num_re = f.b0 + f.b1 * c1 + f.b2 * c2;
    const double num_im = -(f.b1 * s1 + f.b2 * s2);
    const double den_re = 1.0 + f.a1 * c1 + f.a2 * c2;
    const double den_im = -(f.a1 * s1 + f.a2 * s2);
    return (num_re * num_re + num_im * num_im) /
           (den_re * den_re + den_im * den_im);
}

double mean_of(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    return x.empty() ? 0.0 : sum / static_cast<double>(x.size());
}

double fluctuation_energy(std::span<const double> x) {
    const double m = mean_of(x);
    double e = 0.0;
    for (double v : x) e += (v - m) * (v - m);
    return e;
}

} // namespace

void AmbientSpec::validate() const {
    if (!(duration > 0.0)) throw ValidationError("duration must be positive");
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(cutoff_hz > 0.0)) throw ValidationError("cutoff_hz must be positive");
    if (!(dt < 1.0 / (2.0 * cutoff_hz))) {
        throw ValidationError("dt must satisfy dt < 1/(2*cutoff_hz)");
    }
    if (noise_std < 0.0) throw ValidationError("noise_std must be non-negative");
    if (theta_noise_ratio < 0.0) {
        throw ValidationError("theta_noise_ratio must be non-negative");
    }
    if (!(v_mean > 0.0)) throw ValidationError("v_mean must be positive");
}

std::size_t AmbientSpec::sample_count() const {
    return static_cast<std::size_t>(std::llround(duration / dt)) + 1;
}

void NoiseSpec::validate() const {
    if (!std::isfinite(target_snr_db)) {
        throw ValidationError("target_snr_db must be finite");
    }
    if (!std::isfinite(v_theta_extra_snr_db) || v_theta_extra_snr_db < 0.0) {
        throw ValidationError("v_theta_extra_snr_db must be finite and non-negative");
    }
    if (offset_fraction < 0.0) {
        throw ValidationError("offset_fraction must be non-negative");
    }
}

void FaultSpec::validate(double duration) const {
    if (!(t_fault >= 0.0 && t_fault < t_clear && t_clear < duration)) {
        throw ValidationError("fault window must satisfy 0 <= t_fault < t_clear < duration");
    }
    if (!(v_sag > 0.0 && v_sag < 1.0)) {
        throw ValidationError("v_sag must lie in (0, 1)");
    }
    if (!(recovery_tau > 0.0)) {
        throw ValidationError("recovery_tau must be positive");
    }
}

VoltageTrajectory generate_ambient(const AmbientSpec& spec) {
    spec.validate();
    const std::size_t n = spec.sample_count();

    VoltageTrajectory out;
    out.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.t[i] = static_cast<double>(i) * spec.dt;
    }
    if (spec.noise_std == 0.0) {
        out.v.assign(n, spec.v_mean);
        out.theta.assign(n, spec.theta_mean);
        return out;
    }

    Rng rng_v(derive_seed(spec.seed, 1));
    Rng rng_th(derive_seed(spec.seed, 2));
    std::vector<double> wv(n), wth(n);
    const double th_std = spec.theta_noise_ratio * spec.noise_std;
    for (std::size_t i = 0; i < n; ++i) wv[i] = spec.noise_std * rng_v.normal();
    for (std::size_t i = 0; i < n; ++i) wth[i] = th_std * rng_th.normal();

    out.v = lowpass_zero_phase(wv, spec.cutoff_hz, spec.dt);
    out.theta = lowpass_zero_phase(wth, spec.cutoff_hz, spec.dt);
    for (std::size_t i = 0; i < n; ++i) {
        out.v[i] += spec.v_mean;
        out.theta[i] += spec.theta_mean;
    }
    return out;
}

double snr_db(std::span<const double> signal, std::span<const double> noise) {
    if (signal.size() != noise.size()) {
        throw ValidationError("signal and noise series must have equal lengths");
    }
    if (signal.empty()) throw ValidationError("empty series");
    double ey = 0.0, ee = 0.0;
    for (double v : signal) ey += v * v;
    for (double v : noise) ee += v * v;
    if (!(ee > 0.0)) throw NumericError("noise energy is zero");
    return 10.0 * std::log10(ey / ee);
}

double fluctuation_snr_db(std::span<const double> signal,
                          std::span<const double> noise) {
    if (signal.size() != noise.size()) {
        throw ValidationError("signal and noise series must have equal lengths");
    }
    if (signal.empty()) throw ValidationError("empty series");
    const double m = mean_of(signal);
    std::vector<double> detrended(signal.begin(), signal.end());
    for (double& v : detrended) v -= m;
    return snr_db(detrended, noise);
}

std::array<double, 4> noise_std_for_target(const MeasurementSeries& clean,
                                           double target_snr_db) {
    clean.validate();
    const double n = static_cast<double>(clean.size());
    const double factor = std::pow(10.0, -target_snr_db / 20.0);
    const std::array<std::span<const double>, 4> chans{
        std::span<const double>(clean.v), std::span<const double>(clean.theta),
        std::span<const double>(clean.p), std::span<const double>(clean.q)};
    std::array<double, 4> out{};
    static const char* names[] = {"v", "theta", "p", "q"};
    for (std::size_t c = 0; c < 4; ++c) {
        const double energy = fluctuation_energy(chans[c]);
        if (!(energy > 0.0)) {
            throw NumericError(std::string("channel ") + names[c] +
                               " has zero fluctuation energy; target SNR is unachievable");
        }
        out[c] = std::sqrt(energy / n) * factor;
    }
    return out;
}

namespace {

/// Adds offset + the given error realizations; reports the realized SNR of
/// the random component per channel (the offset is a deterministic bias, not
/// noise energy).
NoiseInjection apply_errors(const MeasurementSeries& clean,
                            const std::array<std::vector<double>, 4>& errors,
                            double offset_fraction, std::uint64_t seed) {
    NoiseInjection out;
    out.noisy = clean;
    std::array<std::vector<double>*, 4> chans{&out.noisy.v, &out.noisy.theta,
                                              &out.noisy.p, &out.noisy.q};
    const std::array<std::span<const double>, 4> ref{
        std::span<const double>(clean.v), std::span<const double>(clean.theta),
        std::span<const double>(clean.p), std::span<const double>(clean.q)};
    std::array<double, 4> snr{};
    for (std::size_t c = 0; c < 4; ++c) {
        // Offset sign is deterministic per channel and seed.
        const double sign = (derive_seed(seed, 16 + c) & 1u) ? 1.0 : -1.0;
        const double offset = offset_fraction * mean_of(ref[c]) * sign;
        double energy = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            (*chans[c])[i] += offset + errors[c][i];
            energy += errors[c][i] * errors[c][i];
        }
        snr[c] = energy > 0.0 ? fluctuation_snr_db(ref[c], errors[c])
                              : std::numeric_limits<double>::infinity();
    }
    out.noisy.validate();
    out.snr_v_db = snr[0];
    out.snr_theta_db = snr[1];
    out.snr_p_db = snr[2];
    out.snr_q_db = snr[3];
    out.snr_pq_avg_db = 0.5 * (snr[2] + snr[3]);
    return out;
}

std::array<std::vector<double>, 4> draw_errors(std::size_t n,
                                               const std::array<double, 4>& std,
                                               std::uint64_t seed) {
    std::array<std::vector<double>, 4> errors;
    for (std::size_t c = 0; c < 4; ++c) {
        Rng rng(derive_seed(seed, c));
        errors[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) errors[c][i] = std[c] * rng.normal();
    }
    return errors;
}

} // namespace

NoiseInjection inject_noise_with_std(const MeasurementSeries& clean,
                                     const std::array<double, 4>& error_std,
                                     double offset_fraction,
                                     std::uint64_t seed) {
    clean.validate();
    const auto errors = draw_errors(clean.size(), error_std, seed);
    return apply_errors(clean, errors, offset_fraction, seed);
}

NoiseInjection inject_noise(const MeasurementSeries& clean,
                            const NoiseSpec& spec) {
    spec.validate();
    const auto stds = noise_std_for_target(clean, spec.target_snr_db);
    auto errors = draw_errors(clean.size(), stds, spec.seed);
    // Pin each channel's error energy to its exact target so the realized
    // SNR is the requested one, not a chi-square draw around it.
    const std::array<std::span<const double>, 4> ref{
        std::span<const double>(clean.v), std::span<const double>(clean.theta),
        std::span<const double>(clean.p), std::span<const double>(clean.q)};
    for (std::size_t c = 0; c < 4; ++c) {
        double energy = 0.0;
        for (double e : errors[c]) energy += e * e;
        if (energy <= 0.0) continue;
        const double channel_snr =
            spec.target_snr_db + (c < 2 ? spec.v_theta_extra_snr_db : 0.0);
        const double target_energy =
            fluctuation_energy(ref[c]) * std::pow(10.0, -channel_snr / 10.0);
        const double scale = std::sqrt(target_energy / energy);
        for (double& e : errors[c]) e *= scale;
    }
    return apply_errors(clean, errors, spec.offset_fraction, spec.seed);
}

std::vector<double> lowpass_zero_phase(std::span<const double> x,
                                       double cutoff_hz, double dt) {
    check_filter_args(x.size(), cutoff_hz, dt);
    const std::size_t n = x.size();
    const Biquad f = butterworth2_lowpass(cutoff_hz, dt);

    // Odd-reflected padding keeps edge transients out of the window.
    const std::size_t want = static_cast<std::size_t>(std::ceil(2.0 / (cutoff_hz * dt)));
    const std::size_t pad = std::min(n - 1, want);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) {
        ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);
    }

    filter_forward(f, ext);
    std::reverse(ext.begin(), ext.end());
    filter_forward(f, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                               ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

MeasurementSeries lowpass_filter(const MeasurementSeries& series,
                                 double cutoff_hz) {
    series.validate();
    MeasurementSeries out;
    out.t = series.t;
    const double dt = series.grid_dt();
    out.v = lowpass_zero_phase(series.v, cutoff_hz, dt);
    out.theta = lowpass_zero_phase(series.theta, cutoff_hz, dt);
    out.p = lowpass_zero_phase(series.p, cutoff_hz, dt);
    out.q = lowpass_zero_phase(series.q, cutoff_hz, dt);
    return out;
}

VoltageTrajectory generate_fault_voltage(const FaultSpec& fault,
                                         const AmbientSpec& base) {
    base.validate();
    fault.validate(base.duration);
    VoltageTrajectory traj = generate_ambient(base);
    const double depth = base.v_mean - fault.v_sag;
    if (depth == 0.0) return traj; // no sag requested
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.t[i];
        if (t >= fault.t_fault && t <= fault.t_clear) {
            traj.v[i] = fault.v_sag;
        } else if (t > fault.t_clear) {
            traj.v[i] -= depth * std::exp(-(t - fault.t_clear) / fault.recovery_tau);
        }
    }
    return traj;
}

double zero_phase_filter_enbw_hz(double cutoff_hz, double dt) {
    check_filter_args(1, cutoff_hz, dt);
    const Biquad f = butterworth2_lowpass(cutoff_hz, dt);
    const double f_nyq = 0.5 / dt;
    // Two passes square the magnitude response: integrate |H|^4.
    const std::size_t steps = 2048;
    double sum = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double freq = f_nyq * static_cast<double>(i) / static_cast<double>(steps);
        const double g2 = biquad_gain_sq(f, 2.0 * kPi * freq * dt);
        const double weight = (i == 0 || i == steps) ? 0.5 : 1.0;
        sum += weight * g2 * g2;
    }
    return sum * f_nyq / static_cast<double>(steps);
}

double estimate_window_snr_db(const MeasurementSeries& series,
                              double cutoff_hz) {
    series.validate();
    const double dt = series.grid_dt();
    const double f_nyq = 0.5 / dt;
    const double rho = zero_phase_filter_enbw_hz(cutoff_hz, dt) / f_nyq;
    const double n = static_cast<double>(series.size());

    auto channel_snr = [&](std::span<const double> x) {
        const auto lp = lowpass_zero_phase(x, cutoff_hz, dt);
        double hp_energy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double hp = x[i] - lp[i];
            hp_energy += hp * hp;
        }
        // White-noise variance estimated from the out-of-band residual.
        const double noise_var = hp_energy / (n * (1.0 - rho));
        double fluct = fluctuation_energy(x);
        const double signal_energy = std::max(fluct - n * noise_var, 0.0);
        const double noise_energy = std::max(n * noise_var, 1e-300);
        const double snr =
            10.0 * std::log10(std::max(signal_energy, 1e-300) / noise_energy);
        return std::clamp(snr, -200.0, 200.0);
    };

    return 0.5 * (channel_snr(series.p) + channel_snr(series.q));
}

} // namespace loadid
