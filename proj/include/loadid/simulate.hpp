#pragma once

#include <span>

#include "loadid/motor_model.hpp"
#include "loadid/types.hpp"

namespace loadid {

enum class Integrator {
    ExplicitEuler, ///< one step per sample, matching the prediction recipe
    RK4            ///< four-stage one-step method, for oracle cross-checks
};

struct SimOptions {
    Integrator method = Integrator::ExplicitEuler;
    /// Integration substep, s. 0 means "use the input grid spacing". When
    /// smaller than the grid, the voltage input is interpolated linearly.
    double dt = 0.0;
    /// Record every stride-th input sample.
    int record_stride = 1;
    /// Fail-fast bound on |state| during integration, p.u.
    double divergence_guard = 1e6;

    void validate() const;
};

/// Steady state of the transformed motor at a fixed terminal voltage: all
/// three state rates vanish. The slip is the smaller (stable) root of
///   tm*omega0^2*s^2 - a*|v0|^2*omega0*s + tm*b^2 = 0
/// and F = a*(vd + i*vq)/(b + i*s*omega0).
/// Throws InfeasibleError when a*|v0|^2 < 2*b*tm (peak torque below tm).
IMState steady_state_init(const IMParamsTransformed& d, const PhasorDQ& v0,
                          const SystemConfig& cfg);

/// Motor power trajectory for a candidate parameter vector: initializes at
/// the first sample's voltage via steady_state_init, advances the transformed
/// model along the measured voltage, and emits the motor P/Q at every sample.
struct PowerSeries {
    std::vector<double> p;
    std::vector<double> q;
};
PowerSeries predict_im_power(const IMParamsTransformed& d,
                             std::span<const double> v,
                             std::span<const double> theta, double grid_dt,
                             const SystemConfig& cfg,
                             const SimOptions& opts = {});

/// Integrates the composite load (motor + ZIP) against a voltage trajectory
/// and returns the full measurement window, P/Q being the motor and static
/// contributions summed per sample. Physical-mode loads integrate the
/// original third-order equations and include the V^2/X' reactive term.
MeasurementSeries simulate_composite(const CompositeLoad& load,
                                     const VoltageTrajectory& excitation,
                                     const SystemConfig& cfg,
                                     const SimOptions& opts = {});

} // namespace loadid
