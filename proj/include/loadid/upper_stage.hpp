#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loadid/lower_stage.hpp"
#include "loadid/types.hpp"

namespace loadid {

/// Feasible set of the upper-stage problem: a box over [a, b, h2], a
/// data-dependent range [0, tm_max] for tm, and the stability cut
/// a*v_min^2 > 2*b*tm (the voltage-sag margin of the torque curve).
struct FeasibleRegion {
    std::array<double, 3> lower{10.0, 3.0, 0.5}; ///< a, b, h2
    std::array<double, 3> upper{80.0, 30.0, 3.0};
    double tm_max = 1.0; ///< mean of the measured P
    double v_min = 1.0;  ///< minimum of the window's V
    /// Use the literal inequality a*v_min^2 > 2*b instead of the
    /// torque-balance form a*v_min^2 > 2*b*tm.
    bool literal_stability = false;

    void validate() const;
};

/// Box bounds plus tm_max = mean(P) and v_min = min(V) from the data.
FeasibleRegion feasible_region_from_data(const MeasurementSeries& data);

struct FeasibilityReport {
    bool feasible = true;
    std::string violation; ///< empty when feasible
};

FeasibilityReport check_feasible(const IMParamsTransformed& d,
                                 const FeasibleRegion& region);

inline bool is_feasible(const IMParamsTransformed& d,
                        const FeasibleRegion& region) {
    return check_feasible(d, region).feasible;
}

/// Uniform rejection sampling over the box intersected with the stability
/// cut. Deterministic per seed. Throws InfeasibleError after 1e5 rejections.
IMParamsTransformed sample_feasible(const FeasibleRegion& region,
                                    std::uint64_t seed);

struct SolverOptions {
    int n_starts = 3;
    int max_iters = 200;
    /// Finite-difference step per scaled coordinate (box widths normalize
    /// the decision vector to [0, 1]^4 before differencing).
    double gradient_step = 1e-4;
    /// Convergence tolerance on the scaled decision change.
    double tol_step = 1e-7;
    /// Objective value standing in for infeasible or failed evaluations.
    double penalty_value = 1e3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StartRecord {
    IMParamsTransformed d_init;
    IMParamsTransformed d_final;
    double of_final = 0.0;
    int iterations = 0;
    bool converged = false; ///< step tolerance met before the iteration cap
    int evaluations = 0;
    /// Accepted-iterate objective sequence (initial value first).
    std::vector<double> of_trace;
};

struct IdentificationResult {
    IMParamsTransformed d_opt;
    ZIPParams os_opt;
    double of_opt = 0.0;
    std::vector<StartRecord> starts;
    WindowPolicy policy;
    double window_snr_estimate_db = 0.0;
    double elapsed_seconds = 0.0;
};

/// Multi-start constrained minimization of OF(d): each start draws an
/// initial feasible point and runs a projected quasi-Newton descent with
/// central-difference gradients in box-scaled coordinates; the best final
/// point across starts wins, ties broken by lowest start index. Throws
/// NumericError when every start ends at the penalty value.
IdentificationResult minimize(const MeasurementSeries& data,
                              const FeasibleRegion& region,
                              const SolverOptions& opts,
                              const WindowPolicy& policy,
                              const SystemConfig& cfg);

} // namespace loadid
