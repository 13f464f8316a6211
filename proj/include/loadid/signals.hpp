#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loadid/types.hpp"

namespace loadid {

/// Synthetic ambient excitation: low-pass filtered white noise around a flat
/// operating point. Disturbance-level experiments scale noise_std.
struct AmbientSpec {
    double duration = 10.0;  ///< s
    double dt = 0.01;        ///< s, must satisfy dt < 1/(2*cutoff_hz)
    double v_mean = 1.0;     ///< p.u.
    double theta_mean = 0.0; ///< rad
    double noise_std = 0.02; ///< pre-filter white-noise std on V, p.u.
    double cutoff_hz = 2.0;  ///< Hz
    /// Angle white-noise std as a fraction of noise_std (rad per p.u.).
    double theta_noise_ratio = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t sample_count() const;
};

/// Measurement-error model: a constant per-channel offset plus white random
/// error sized to a target signal-to-noise ratio. The SNR convention is
/// fluctuation-based: signal energy is taken about the channel mean, since
/// the operating-point DC level is not part of the ambient signal. The
/// per-case SNR is defined over the P and Q channels; phasor magnitude and
/// angle are measured directly and carry an extra margin.
struct NoiseSpec {
    double target_snr_db = 14.0;
    /// The V and theta channels realize target_snr_db plus this margin.
    double v_theta_extra_snr_db = 20.0;
    /// Systematic offset per channel, as a fraction of the channel mean.
    double offset_fraction = 0.001;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Desk-scale large-disturbance event: a flat voltage sag followed by an
/// exponential recovery toward the pre-fault mean.
struct FaultSpec {
    double t_fault = 1.0;      ///< s
    double t_clear = 1.15;     ///< s
    double v_sag = 0.85;       ///< p.u., 0 < v_sag < 1
    double recovery_tau = 0.2; ///< s

    void validate(double duration) const;
};

/// Low-pass filtered white noise around (v_mean, theta_mean); the V and theta
/// channels use independent streams derived from spec.seed. Deterministic.
VoltageTrajectory generate_ambient(const AmbientSpec& spec);

/// 10*log10(sum y_i^2 / sum e_i^2), applied verbatim to the two series.
/// Throws NumericError when the noise energy is zero.
double snr_db(std::span<const double> signal, std::span<const double> noise);

/// snr_db with the signal detrended by its mean: the convention used to size
/// injected noise and to report window SNRs.
double fluctuation_snr_db(std::span<const double> signal,
                          std::span<const double> noise);

/// Per-channel white-noise standard deviations that realize spec.target_snr_db
/// against this series' fluctuation energy. Order: v, theta, p, q.
/// Throws NumericError when a channel has zero fluctuation energy.
std::array<double, 4> noise_std_for_target(const MeasurementSeries& clean,
                                           double target_snr_db);

struct NoiseInjection {
    MeasurementSeries noisy;
    /// Realized fluctuation-convention SNR per channel, dB.
    double snr_v_db;
    double snr_theta_db;
    double snr_p_db;
    double snr_q_db;
    /// The per-case SNR: average of the P-channel and Q-channel values.
    double snr_pq_avg_db;
};

/// Adds offset + white error per channel with stds from noise_std_for_target.
NoiseInjection inject_noise(const MeasurementSeries& clean,
                            const NoiseSpec& spec);

/// Same, but with explicitly fixed absolute error stds (order: v, theta, p,
/// q). Used by disturbance-level sweeps where the error magnitude must stay
/// constant while the ambient excitation scales.
NoiseInjection inject_noise_with_std(const MeasurementSeries& clean,
                                     const std::array<double, 4>& error_std,
                                     double offset_fraction,
                                     std::uint64_t seed);

/// Zero-phase low pass: a second-order critically flat recursive section run
/// forward then backward, with reflected end padding. DC gain is exactly 1.
std::vector<double> lowpass_zero_phase(std::span<const double> x,
                                       double cutoff_hz, double dt);

/// Applies lowpass_zero_phase to all four channels.
MeasurementSeries lowpass_filter(const MeasurementSeries& series,
                                 double cutoff_hz);

/// Ambient trajectory with V held at v_sag over [t_fault, t_clear] and an
/// exponential return to the ambient level afterwards. When v_sag equals
/// v_mean the ambient trajectory is returned unchanged.
VoltageTrajectory generate_fault_voltage(const FaultSpec& fault,
                                         const AmbientSpec& base);

/// Equivalent noise bandwidth of the zero-phase filter, Hz. Used to form
/// blind SNR estimates for measurement windows.
double zero_phase_filter_enbw_hz(double cutoff_hz, double dt);

/// Blind estimate of a window's SNR from the out-of-band content of its P and
/// Q channels (average of the two). Returns a large value for clean data;
/// capped at +/-200 dB.
double estimate_window_snr_db(const MeasurementSeries& series,
                              double cutoff_hz);

} // namespace loadid
