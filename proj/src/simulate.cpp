#include "loadid/simulate.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "loadid/errors.hpp"

namespace loadid {

namespace {

IMState axpy(const IMState& x, const IMStateRate& r, double h) {
    return IMState{x.fd + h * r.fd_dot, x.fq + h * r.fq_dot, x.s + h * r.s_dot};
}

OriginalIMState axpy(const OriginalIMState& x, const OriginalIMStateRate& r,
                     double h) {
    return OriginalIMState{x.ed + h * r.ed_dot, x.eq + h * r.eq_dot,
                           x.s + h * r.s_dot};
}

double max_abs(const IMState& st) {
    return std::max({std::abs(st.fd), std::abs(st.fq), std::abs(st.s)});
}

double max_abs(const OriginalIMState& st) {
    return std::max({std::abs(st.ed), std::abs(st.eq), std::abs(st.s)});
}

bool is_finite(const IMState& st) {
    return std::isfinite(st.fd) && std::isfinite(st.fq) && std::isfinite(st.s);
}

bool is_finite(const OriginalIMState& st) {
    return std::isfinite(st.ed) && std::isfinite(st.eq) && std::isfinite(st.s);
}

[[noreturn]] void throw_divergence(double t, double guard) {
    std::ostringstream os;
    os << "motor state exceeded " << guard << " p.u. at t = " << t << " s";
    throw DivergenceError(os.str());
}

/// Advances state over [t_i, t_i + h] given the voltage at the interval ends
/// (and midpoint for the four-stage method).
template <class State, class Deriv>
State advance(const State& st, const PhasorDQ& v_left, const PhasorDQ& v_mid,
              const PhasorDQ& v_right, double h, Integrator method,
              const Deriv& deriv) {
    if (method == Integrator::ExplicitEuler) {
        return axpy(st, deriv(st, v_left), h);
    }
    const auto k1 = deriv(st, v_left);
    const auto k2 = deriv(axpy(st, k1, 0.5 * h), v_mid);
    const auto k3 = deriv(axpy(st, k2, 0.5 * h), v_mid);
    const auto k4 = deriv(axpy(st, k3, h), v_right);
    State out = axpy(st, k1, h / 6.0);
    out = axpy(out, k2, h / 3.0);
    out = axpy(out, k3, h / 3.0);
    return axpy(out, k4, h / 6.0);
}

PhasorDQ interp_dq(double v0, double th0, double v1, double th1, double tau) {
    return polar_to_dq(v0 + tau * (v1 - v0), th0 + tau * (th1 - th0));
}

int substep_count(double grid_dt, const SimOptions& opts) {
    if (opts.dt == 0.0) return 1;
    const double ratio = grid_dt / opts.dt;
    const int n_sub = static_cast<int>(std::lround(ratio));
    if (n_sub < 1 || std::abs(ratio - n_sub) > 1e-6) {
        throw ValidationError("SimOptions::dt must evenly divide the sample grid spacing");
    }
    return n_sub;
}

/// Shared integration driver. emit(i, state, dq_i) fires for every input
/// sample, including the initial one.
template <class State, class Deriv, class Emit>
void run_integration(State st, std::span<const double> v,
                     std::span<const double> theta, double grid_dt,
                     const SimOptions& opts, const Deriv& deriv,
                     const Emit& emit) {
    const std::size_t n = v.size();
    const int n_sub = substep_count(grid_dt, opts);
    const double h = grid_dt / n_sub;

    PhasorDQ dq = polar_to_dq(v[0], theta[0]);
    if (!is_finite(st) || max_abs(st) > opts.divergence_guard) {
        throw_divergence(0.0, opts.divergence_guard);
    }
    emit(std::size_t{0}, st, dq);

    for (std::size_t i = 1; i < n; ++i) {
        const PhasorDQ dq_next = polar_to_dq(v[i], theta[i]);
        if (n_sub == 1 && opts.method == Integrator::ExplicitEuler) {
            st = axpy(st, deriv(st, dq), h);
        } else {
            for (int j = 0; j < n_sub; ++j) {
                const double tau0 = static_cast<double>(j) / n_sub;
                const double tau1 = static_cast<double>(j + 1) / n_sub;
                const PhasorDQ left =
                    (j == 0) ? dq
                             : interp_dq(v[i - 1], theta[i - 1], v[i], theta[i], tau0);
                const PhasorDQ mid = interp_dq(v[i - 1], theta[i - 1], v[i],
                                               theta[i], 0.5 * (tau0 + tau1));
                const PhasorDQ right =
                    (j + 1 == n_sub)
                        ? dq_next
                        : interp_dq(v[i - 1], theta[i - 1], v[i], theta[i], tau1);
                st = advance(st, left, mid, right, h, opts.method, deriv);
            }
        }
        if (!is_finite(st) || max_abs(st) > opts.divergence_guard) {
            throw_divergence(static_cast<double>(i) * grid_dt, opts.divergence_guard);
        }
        dq = dq_next;
        emit(i, st, dq);
    }
}

} // namespace

void SimOptions::validate() const {
    if (dt < 0.0) throw ValidationError("SimOptions::dt must be non-negative");
    if (record_stride < 1) throw ValidationError("record_stride must be >= 1");
    if (!(divergence_guard > 0.0)) {
        throw ValidationError("divergence_guard must be positive");
    }
}

IMState steady_state_init(const IMParamsTransformed& d, const PhasorDQ& v0,
                          const SystemConfig& cfg) {
    d.validate();
    cfg.validate();
    const double v2 = v0.vd * v0.vd + v0.vq * v0.vq;
    if (!(v2 > 0.0)) {
        throw InfeasibleError("steady state requires a nonzero terminal voltage");
    }
    // Torque balance: tm*w0^2*s^2 - a*v2*w0*s + tm*b^2 = 0. The discriminant
    // condition is a*v2 >= 2*b*tm (peak torque a*v2/(2b) at slip b/w0).
    const double disc = d.a * d.a * v2 * v2 - 4.0 * d.tm * d.tm * d.b * d.b;
    if (disc < 0.0) {
        std::ostringstream os;
        os << "infeasible steady state: a*V^2 = " << d.a * v2 << " < 2*b*tm = "
           << 2.0 * d.b * d.tm << " (motor cannot carry tm at this voltage)";
        throw InfeasibleError(os.str());
    }
    // Smaller (stable) root, in the cancellation-free form.
    const double s = 2.0 * d.tm * d.b * d.b /
                     (cfg.omega0 * (d.a * v2 + std::sqrt(disc)));
    const double sw = s * cfg.omega0;
    const double den = d.b * d.b + sw * sw;
    return IMState{
        .fd = d.a * (v0.vd * d.b + v0.vq * sw) / den,
        .fq = d.a * (v0.vq * d.b - v0.vd * sw) / den,
        .s = s,
    };
}

PowerSeries predict_im_power(const IMParamsTransformed& d,
                             std::span<const double> v,
                             std::span<const double> theta, double grid_dt,
                             const SystemConfig& cfg, const SimOptions& opts) {
    if (v.size() != theta.size() || v.empty()) {
        throw ValidationError("voltage and angle series must be nonempty and equal length");
    }
    if (!(grid_dt > 0.0)) throw ValidationError("grid_dt must be positive");
    opts.validate();

    PowerSeries out;
    out.p.resize(v.size());
    out.q.resize(v.size());

    const IMState init = steady_state_init(d, polar_to_dq(v[0], theta[0]), cfg);
    auto deriv = [&](const IMState& st, const PhasorDQ& dq) {
        return im_derivatives(st, dq, d, cfg);
    };
    run_integration(init, v, theta, grid_dt, opts, deriv,
                    [&](std::size_t i, const IMState& st, const PhasorDQ& dq) {
                        const PowerPQ pq = im_output(st, dq);
                        out.p[i] = pq.p;
                        out.q[i] = pq.q;
                    });
    return out;
}

MeasurementSeries simulate_composite(const CompositeLoad& load,
                                     const VoltageTrajectory& excitation,
                                     const SystemConfig& cfg,
                                     const SimOptions& opts) {
    load.validate();
    excitation.validate();
    cfg.validate();
    opts.validate();
    const double grid_dt = excitation.grid_dt();
    const std::size_t n = excitation.size();

    std::vector<double> p_total(n), q_total(n);
    auto add_zip = [&](std::size_t i, const PowerPQ& motor) {
        const PowerPQ st = zip_power(load.zip, excitation.v[i]);
        p_total[i] = motor.p + st.p;
        q_total[i] = motor.q + st.q;
    };

    if (load.physical_mode()) {
        const auto& phys = std::get<IMParamsPhysical>(load.motor);
        const IMParamsTransformed d = transform_params(phys);
        const IMState f0 = steady_state_init(
            d, polar_to_dq(excitation.v[0], excitation.theta[0]), cfg);
        // Consistent original-model state: E = F * X'.
        const OriginalIMState init{f0.fd * phys.xp, f0.fq * phys.xp, f0.s};
        auto deriv = [&](const OriginalIMState& st, const PhasorDQ& dq) {
            return im_original_derivatives(st, dq, phys, cfg);
        };
        run_integration(init, excitation.v, excitation.theta, grid_dt, opts,
                        deriv,
                        [&](std::size_t i, const OriginalIMState& st,
                            const PhasorDQ& dq) {
                            add_zip(i, im_original_output(st, dq, phys));
                        });
    } else {
        const auto& d = std::get<IMParamsTransformed>(load.motor);
        const IMState init = steady_state_init(
            d, polar_to_dq(excitation.v[0], excitation.theta[0]), cfg);
        auto deriv = [&](const IMState& st, const PhasorDQ& dq) {
            return im_derivatives(st, dq, d, cfg);
        };
        run_integration(init, excitation.v, excitation.theta, grid_dt, opts,
                        deriv,
                        [&](std::size_t i, const IMState& st, const PhasorDQ& dq) {
                            add_zip(i, im_output(st, dq));
                        });
    }

    MeasurementSeries out;
    const std::size_t stride = static_cast<std::size_t>(opts.record_stride);
    for (std::size_t i = 0; i < n; i += stride) {
        out.t.push_back(excitation.t[i]);
        out.v.push_back(excitation.v[i]);
        out.theta.push_back(excitation.theta[i]);
        out.p.push_back(p_total[i]);
        out.q.push_back(q_total[i]);
    }
    return out;
}

} // namespace loadid
