#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

namespace loadid {

/// Grid-level constants shared by every model evaluation.
struct SystemConfig {
    /// Synchronous angular speed, rad/s. Defaults to a 50 Hz grid.
    double omega0 = 2.0 * std::numbers::pi * 50.0;
    /// Sample period, s.
    double dt = 0.01;
    /// System MVA base. Informational only; all quantities are per-unit.
    double s_base_mva = 100.0;

    void validate() const;
};

/// Third-order induction motor in its physical parameterization.
struct IMParamsPhysical {
    double x;   ///< rotor open-circuit reactance, p.u.
    double xp;  ///< rotor transient reactance, p.u.
    double td0; ///< rotor open-circuit time constant, s
    double h2;  ///< inertia time constant, s
    double tm;  ///< mechanical torque, p.u.

    void validate() const;
};

/// Transformed motor parameters: the four-entry decision vector of the
/// upper-stage optimization.
struct IMParamsTransformed {
    double a;  ///< transformed gain, 1/s
    double b;  ///< transformed decay rate, 1/s
    double h2; ///< inertia time constant, s
    double tm; ///< mechanical torque, p.u.

    void validate() const;
};

/// Motor state in transformed coordinates (scaled EMF plus slip).
struct IMState {
    double fd; ///< d-axis scaled EMF, p.u.
    double fq; ///< q-axis scaled EMF, p.u.
    double s;  ///< slip
};

/// Time derivative of IMState.
struct IMStateRate {
    double fd_dot;
    double fq_dot;
    double s_dot;
};

/// Motor state in the original parameterization (unscaled EMF plus slip).
struct OriginalIMState {
    double ed;
    double eq;
    double s;
};

struct OriginalIMStateRate {
    double ed_dot;
    double eq_dot;
    double s_dot;
};

/// Voltage phasor in the synchronous d/q frame.
struct PhasorDQ {
    double vd;
    double vq;
};

/// Active/reactive power pair, p.u.
struct PowerPQ {
    double p;
    double q;
};

/// Static load model coefficients. No sign constraints: identified values
/// routinely include negatives, and qz absorbs the motor's 1/X' term.
struct ZIPParams {
    double pz = 0.0;
    double pi = 0.0;
    double pp = 0.0;
    double qz = 0.0;
    double qi = 0.0;
    double qp = 0.0;

    void validate() const;
};

/// Uniformly sampled measurement window: the four signals used in
/// identification plus their common time grid.
struct MeasurementSeries {
    std::vector<double> t;     ///< s, strictly increasing, constant spacing
    std::vector<double> v;     ///< voltage magnitude, p.u., > 0
    std::vector<double> theta; ///< voltage angle, rad
    std::vector<double> p;     ///< active power, p.u.
    std::vector<double> q;     ///< reactive power, p.u.

    std::size_t size() const { return t.size(); }

    /// Grid spacing. Requires size() >= 2.
    double grid_dt() const { return t[1] - t[0]; }

    /// Checks equal lengths >= 2, uniform strictly increasing t, and v > 0.
    void validate() const;
};

/// Voltage excitation alone, for simulation inputs.
struct VoltageTrajectory {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<double> theta;

    std::size_t size() const { return t.size(); }
    double grid_dt() const { return t[1] - t[0]; }
    void validate() const;
};

/// ZIP static part plus induction motor. The motor is either transformed
/// (identification mode) or physical (oracle / data-generation mode).
struct CompositeLoad {
    std::variant<IMParamsTransformed, IMParamsPhysical> motor;
    ZIPParams zip;

    bool physical_mode() const {
        return std::holds_alternative<IMParamsPhysical>(motor);
    }
    void validate() const;
};

} // namespace loadid
