#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "loadid/signals.hpp"
#include "loadid/simulate.hpp"
#include "loadid/upper_stage.hpp"

namespace loadid {

struct QConvexPairFailure {
    IMParamsTransformed left;
    IMParamsTransformed right;
    double of_left;
    double of_right;
    double of_mid;
};

/// Outcome of a Monte-Carlo midpoint test over the feasible region.
struct QConvexReport {
    std::size_t n_pairs = 0;
    std::size_t n_success = 0;
    /// Pairs whose midpoint was infeasible or whose evaluation failed were
    /// resampled rather than counted; recorded for transparency.
    std::size_t n_resampled = 0;
    std::vector<QConvexPairFailure> failures;

    double sp_percent() const {
        return n_pairs == 0 ? 0.0
                            : 100.0 * static_cast<double>(n_success) /
                                  static_cast<double>(n_pairs);
    }
};

/// Samples n_pairs feasible pairs with feasible midpoints and counts how
/// often OF(mid) <= max(OF(left), OF(right)) + 1e-12. Deterministic per seed.
QConvexReport quasiconvexity_test(const MeasurementSeries& data,
                                  const FeasibleRegion& region,
                                  std::size_t n_pairs, std::uint64_t seed,
                                  const WindowPolicy& policy,
                                  const SystemConfig& cfg);

/// Same midpoint test against an arbitrary objective. NumericError from the
/// objective causes the pair to be resampled.
QConvexReport quasiconvexity_test_fn(
    const std::function<double(const IMParamsTransformed&)>& objective,
    const FeasibleRegion& region, std::size_t n_pairs, std::uint64_t seed);

struct ReliabilityReport {
    /// Success percentage under sum_j |d_ij/d_opt_j - 1| < 0.1.
    double sp_percent = 0.0;
    /// Alternative metric with the signed sum (deviations may cancel).
    double sp_signed_percent = 0.0;
    std::size_t n_starts = 0;
    IdentificationResult best;
};

/// Runs n_starts independent single-start minimizations, takes the lowest-OF
/// solution as the reference, and scores every start against it.
ReliabilityReport reliability_test(const MeasurementSeries& data,
                                   const FeasibleRegion& region,
                                   std::size_t n_starts, std::uint64_t seed,
                                   const WindowPolicy& policy,
                                   const SystemConfig& cfg,
                                   const SolverOptions& base_opts);

/// Same, with one explicit seed per start. The success percentage does not
/// depend on the order of the seeds.
ReliabilityReport reliability_test_seeds(const MeasurementSeries& data,
                                         const FeasibleRegion& region,
                                         std::span<const std::uint64_t> seeds,
                                         const WindowPolicy& policy,
                                         const SystemConfig& cfg,
                                         const SolverOptions& base_opts);

/// Inclusive uniform grid for one slice coordinate.
struct GridAxis {
    double k_min = -1.0;
    double k_max = 1.0;
    std::size_t count = 41;

    double at(std::size_t i) const;
    void validate() const;
};

/// log10(OF) sampled on the affine slice
///   d(k1, k2) = d_center + k1*(d1 - d_center) + k2*(d2 - d_center),
/// row-major over (k1, k2). Cells outside the feasible region, or whose
/// evaluation failed, carry the sentinel value 6.
struct LandscapeGrid {
    static constexpr double kInfeasibleSentinel = 6.0;

    IMParamsTransformed d_center;
    IMParamsTransformed d1;
    IMParamsTransformed d2;
    GridAxis k1;
    GridAxis k2;
    std::vector<double> values; ///< k1.count rows x k2.count cols

    double at(std::size_t i, std::size_t j) const {
        return values[i * k2.count + j];
    }
    IMParamsTransformed point(double k1_val, double k2_val) const;
};

LandscapeGrid landscape_slice(const MeasurementSeries& data,
                              const IMParamsTransformed& d_center,
                              const IMParamsTransformed& d1,
                              const IMParamsTransformed& d2,
                              const GridAxis& k1, const GridAxis& k2,
                              const FeasibleRegion& region,
                              const WindowPolicy& policy,
                              const SystemConfig& cfg);

/// FD = 1 - sum (y_test - y_ref)^2 / sum (y_ref - mean(y_ref))^2.
/// Throws NumericError when the reference series has zero variance.
double fitting_degree(std::span<const double> y_ref,
                      std::span<const double> y_test);

struct ValidationReport {
    double fd_p = 0.0;
    double fd_q = 0.0;
    double fd = 0.0; ///< (fd_p + fd_q)/2
    FaultSpec event;
};

/// Simulates the actual and the identified load against the same synthetic
/// fault trajectory and scores the identified response per channel.
/// DivergenceError messages name the scenario that failed.
ValidationReport validate_identified(const CompositeLoad& actual,
                                     const CompositeLoad& identified,
                                     const FaultSpec& fault,
                                     const AmbientSpec& base,
                                     const SystemConfig& cfg,
                                     const SimOptions& opts = {});

/// Per-parameter statistics of identification batches, each result normalized
/// by its generator truth (1.0 is exact). sigma is the sample standard
/// deviation (n - 1 denominator).
struct BatchStats {
    std::array<double, 4> mu{};    ///< a, b, h2, tm
    std::array<double, 4> sigma{}; ///< a, b, h2, tm
    double mean_snr_db = 0.0;      ///< mean of the results' window estimates
    std::size_t n = 0;
};

BatchStats batch_statistics(
    std::span<const std::pair<IdentificationResult, IMParamsTransformed>>
        results);

} // namespace loadid
