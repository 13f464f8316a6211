#include "loadid/upper_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"
#include "loadid/signals.hpp"

namespace loadid {

namespace {

using Eigen::Matrix4d;
using Eigen::Vector4d;

constexpr std::size_t kMaxRejections = 100000;

/// Box-width scaling between the decision vector and solver coordinates
/// z in [0, 1]^4. Coordinate order: a, b, h2, tm.
struct ScaledSpace {
    Vector4d lo;
    Vector4d width;

    explicit ScaledSpace(const FeasibleRegion& region) {
        lo << region.lower[0], region.lower[1], region.lower[2], 0.0;
        width << region.upper[0] - region.lower[0],
            region.upper[1] - region.lower[1],
            region.upper[2] - region.lower[2], region.tm_max;
    }

    Vector4d to_z(const IMParamsTransformed& d) const {
        Vector4d raw(d.a, d.b, d.h2, d.tm);
        return (raw - lo).cwiseQuotient(width);
    }

    IMParamsTransformed to_d(const Vector4d& z) const {
        const Vector4d raw = lo + z.cwiseProduct(width);
        return IMParamsTransformed{raw(0), raw(1), raw(2), raw(3)};
    }
};

Vector4d clamp01(Vector4d z) {
    for (int i = 0; i < 4; ++i) z(i) = std::clamp(z(i), 0.0, 1.0);
    return z;
}

struct StartOutcome {
    StartRecord record;
    ZIPParams os;
};

class LocalSolver {
public:
    LocalSolver(const CandidateEvaluator& evaluator, const FeasibleRegion& region,
                const SolverOptions& opts)
        : eval_(evaluator), region_(region), opts_(opts), space_(region) {}

    StartOutcome run(const IMParamsTransformed& d0) {
        evals_ = 0;
        Vector4d z = clamp01(space_.to_z(d0));
        double fz = value(z);

        StartRecord rec;
        rec.d_init = d0;
        rec.of_trace.push_back(fz);

        Matrix4d h_inv = Matrix4d::Identity();
        Vector4d grad = gradient(z, fz);
        // The metric can collapse after early steps against a steep wall;
        // convergence is only declared from a small step taken with a fresh
        // metric, so a stalled quasi-Newton state cannot fake stationarity.
        bool have_curvature = false;
        bool stalled_once = false;
        bool converged = false;
        int iter = 0;

        if (fz < opts_.penalty_value) {
            for (iter = 1; iter <= opts_.max_iters; ++iter) {
                Vector4d dir = -(h_inv * grad);
                if (dir.dot(grad) >= 0.0) {
                    h_inv = Matrix4d::Identity();
                    have_curvature = false;
                    dir = -grad;
                }
                if (dir.norm() == 0.0) {
                    converged = true;
                    break;
                }

                const auto [z_new, f_new, accepted] = line_search(z, fz, grad, dir);
                if (!accepted) {
                    if (!have_curvature) {
                        // Even steepest descent cannot improve: stationary.
                        converged = true;
                        break;
                    }
                    h_inv = Matrix4d::Identity();
                    have_curvature = false;
                    continue;
                }
                const Vector4d step = z_new - z;
                const Vector4d grad_new = gradient(z_new, f_new);
                const Vector4d yk = grad_new - grad;
                const double sy = step.dot(yk);
                if (sy > 1e-12 * step.norm() * yk.norm()) {
                    if (!have_curvature) {
                        // Size the fresh metric to the observed curvature.
                        h_inv = Matrix4d::Identity() * (sy / yk.squaredNorm());
                    }
                    const Vector4d hy = h_inv * yk;
                    const double yhy = yk.dot(hy);
                    h_inv += ((sy + yhy) / (sy * sy)) * (step * step.transpose()) -
                             (hy * step.transpose() + step * hy.transpose()) / sy;
                    have_curvature = true;
                }
                z = z_new;
                fz = f_new;
                grad = grad_new;
                rec.of_trace.push_back(fz);
                if (step.norm() < opts_.tol_step) {
                    if (stalled_once || !have_curvature) {
                        converged = true;
                        break;
                    }
                    // Verify the stall against a fresh metric before stopping.
                    h_inv = Matrix4d::Identity();
                    have_curvature = false;
                    stalled_once = true;
                    continue;
                }
                stalled_once = false;
            }
        }

        rec.d_final = space_.to_d(z);
        rec.of_final = fz;
        rec.iterations = std::min(iter, opts_.max_iters);
        rec.converged = converged;
        rec.evaluations = evals_;

        StartOutcome out{rec, ZIPParams{}};
        if (fz < opts_.penalty_value) {
            out.os = eval_.evaluate(rec.d_final).os;
        }
        return out;
    }

private:
    double value(const Vector4d& z) {
        ++evals_;
        const IMParamsTransformed d = space_.to_d(z);
        if (!is_feasible(d, region_)) return opts_.penalty_value;
        try {
            return eval_.objective(d);
        } catch (const NumericError&) {
            return opts_.penalty_value;
        }
    }

    /// Central differences per scaled coordinate, stencil clamped into the
    /// box. Penalty values from grazing the stability cut degrade to
    /// one-sided differences instead of polluting the gradient.
    Vector4d gradient(const Vector4d& z, double fz) {
        Vector4d g = Vector4d::Zero();
        const double h = opts_.gradient_step;
        for (int i = 0; i < 4; ++i) {
            Vector4d zp = z, zm = z;
            zp(i) = std::min(z(i) + h, 1.0);
            zm(i) = std::max(z(i) - h, 0.0);
            if (zp(i) == zm(i)) continue;
            const double fp = value(zp);
            const double fm = value(zm);
            const bool ok_p = fp < opts_.penalty_value;
            const bool ok_m = fm < opts_.penalty_value;
            if (ok_p && ok_m) {
                g(i) = (fp - fm) / (zp(i) - zm(i));
            } else if (ok_p && zp(i) > z(i)) {
                g(i) = (fp - fz) / (zp(i) - z(i));
            } else if (ok_m && z(i) > zm(i)) {
                g(i) = (fz - fm) / (z(i) - zm(i));
            }
        }
        return g;
    }

    struct LineSearchResult {
        Vector4d z;
        double f;
        bool accepted;
    };

    LineSearchResult line_search(const Vector4d& z, double fz,
                                 const Vector4d& grad, const Vector4d& dir) {
        constexpr double kArmijo = 1e-4;
        double alpha = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            const Vector4d z_try = clamp01(z + alpha * dir);
            const Vector4d step = z_try - z;
            const double step_norm = step.norm();
            if (step_norm < 1e-16) break;
            const double f_try = value(z_try);
            if (f_try <= fz + kArmijo * grad.dot(step) &&
                f_try < opts_.penalty_value) {
                if (ls == 0) return expand(z, fz, grad, dir, alpha, z_try, f_try);
                return {z_try, f_try, true};
            }
            alpha *= 0.5;
        }
        return {z, fz, false};
    }

    /// The full step was accepted outright; on plateaus that step can be
    /// microscopic, so keep doubling while the objective strictly improves.
    LineSearchResult expand(const Vector4d& z, double fz, const Vector4d& grad,
                            const Vector4d& dir, double alpha, Vector4d z_best,
                            double f_best) {
        constexpr double kArmijo = 1e-4;
        for (int i = 0; i < 30; ++i) {
            alpha *= 2.0;
            const Vector4d z_try = clamp01(z + alpha * dir);
            const Vector4d step = z_try - z;
            if ((z_try - z_best).norm() < 1e-16) break;
            const double f_try = value(z_try);
            if (f_try >= f_best || f_try > fz + kArmijo * grad.dot(step) ||
                f_try >= opts_.penalty_value) {
                break;
            }
            z_best = z_try;
            f_best = f_try;
        }
        return {z_best, f_best, true};
    }

    const CandidateEvaluator& eval_;
    const FeasibleRegion& region_;
    const SolverOptions& opts_;
    ScaledSpace space_;
    int evals_ = 0;
};

} // namespace

void FeasibleRegion::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (!(lower[static_cast<std::size_t>(i)] <
              upper[static_cast<std::size_t>(i)])) {
            throw ValidationError("feasible region bounds must satisfy lower < upper");
        }
    }
    if (!(tm_max > 0.0)) throw ValidationError("tm_max must be positive");
    if (!(v_min > 0.0)) throw ValidationError("v_min must be positive");
}

FeasibleRegion feasible_region_from_data(const MeasurementSeries& data) {
    data.validate();
    FeasibleRegion region;
    double p_sum = 0.0;
    double v_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        p_sum += data.p[i];
        v_min = std::min(v_min, data.v[i]);
    }
    region.tm_max = p_sum / static_cast<double>(data.size());
    region.v_min = v_min;
    region.validate();
    return region;
}

FeasibilityReport check_feasible(const IMParamsTransformed& d,
                                 const FeasibleRegion& region) {
    auto fail = [](std::string msg) {
        return FeasibilityReport{false, std::move(msg)};
    };
    const std::array<double, 3> vals{d.a, d.b, d.h2};
    static const char* names[] = {"a", "b", "h2"};
    for (std::size_t i = 0; i < 3; ++i) {
        std::ostringstream os;
        if (vals[i] < region.lower[i]) {
            os << names[i] << " = " << vals[i] << " below lower bound "
               << region.lower[i];
            return fail(os.str());
        }
        if (vals[i] > region.upper[i]) {
            os << names[i] << " = " << vals[i] << " above upper bound "
               << region.upper[i];
            return fail(os.str());
        }
    }
    if (d.tm < 0.0) return fail("tm is negative");
    if (d.tm > region.tm_max) {
        std::ostringstream os;
        os << "tm = " << d.tm << " above tm_max = " << region.tm_max;
        return fail(os.str());
    }
    const double lhs = d.a * region.v_min * region.v_min;
    const double rhs =
        region.literal_stability ? 2.0 * d.b : 2.0 * d.b * d.tm;
    if (!(lhs > rhs)) {
        std::ostringstream os;
        os << "stability constraint violated: a*v_min^2 = " << lhs
           << " must exceed " << (region.literal_stability ? "2*b = " : "2*b*tm = ")
           << rhs;
        return fail(os.str());
    }
    return FeasibilityReport{};
}

IMParamsTransformed sample_feasible(const FeasibleRegion& region,
                                    std::uint64_t seed) {
    region.validate();
    Rng rng(seed);
    for (std::size_t i = 0; i < kMaxRejections; ++i) {
        const IMParamsTransformed d{
            rng.uniform(region.lower[0], region.upper[0]),
            rng.uniform(region.lower[1], region.upper[1]),
            rng.uniform(region.lower[2], region.upper[2]),
            rng.uniform(0.0, region.tm_max),
        };
        if (is_feasible(d, region)) return d;
    }
    throw InfeasibleError("feasible-region sampling failed: the stability cut leaves no volume");
}

void SolverOptions::validate() const {
    if (n_starts < 1) throw ValidationError("n_starts must be >= 1");
    if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (!(gradient_step > 0.0)) throw ValidationError("gradient_step must be positive");
    if (!(tol_step > 0.0)) throw ValidationError("tol_step must be positive");
    if (!(penalty_value > 0.0)) throw ValidationError("penalty_value must be positive");
}

IdentificationResult minimize(const MeasurementSeries& data,
                              const FeasibleRegion& region,
                              const SolverOptions& opts,
                              const WindowPolicy& policy,
                              const SystemConfig& cfg) {
    opts.validate();
    region.validate();
    const CandidateEvaluator evaluator(data, policy, cfg);

    IdentificationResult result;
    result.policy = policy;
    result.window_snr_estimate_db = estimate_window_snr_db(data, 2.0);
    result.of_opt = std::numeric_limits<double>::infinity();

    LocalSolver solver(evaluator, region, opts);
    bool any_success = false;
    for (int k = 0; k < opts.n_starts; ++k) {
        // Some feasible box corners are not evaluable (the explicit-Euler
        // prediction diverges there); redraw the initial point until the
        // objective is finite, deterministically per start.
        const std::uint64_t start_seed =
            derive_seed(opts.seed, static_cast<std::uint64_t>(k));
        IMParamsTransformed d0 = sample_feasible(region, start_seed);
        for (std::uint64_t attempt = 1; attempt < 50; ++attempt) {
            try {
                evaluator.objective(d0);
                break;
            } catch (const NumericError&) {
                d0 = sample_feasible(region, derive_seed(start_seed, attempt));
            }
        }
        StartOutcome outcome = solver.run(d0);
        const bool success = outcome.record.of_final < opts.penalty_value;
        // Strict comparison keeps the lowest start index on ties.
        if (success && outcome.record.of_final < result.of_opt) {
            result.of_opt = outcome.record.of_final;
            result.d_opt = outcome.record.d_final;
            result.os_opt = outcome.os;
        }
        any_success = any_success || success;
        result.starts.push_back(std::move(outcome.record));
    }
    if (!any_success) {
        throw NumericError("all optimization starts failed: every evaluation hit the penalty value");
    }
    return result;
}

} // namespace loadid
