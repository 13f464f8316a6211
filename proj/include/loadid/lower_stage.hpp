#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "loadid/types.hpp"

namespace loadid {

/// Result of the static-model regression for one candidate.
struct RegressionOutcome {
    ZIPParams zip;
    std::vector<double> r_p; ///< active residual series
    std::vector<double> r_q; ///< reactive residual series
    std::size_t l = 0;       ///< samples used, == r_p.size() == r_q.size()
    /// True when the quadratic basis was rank deficient and the fit fell back
    /// to the constant-only basis.
    bool low_excitation = false;
};

/// Which part of the data window feeds prediction and which feeds the fit.
/// The fit interval is half-open: samples with fit_start <= t < fit_end.
/// Prediction starts warmup_skip seconds before fit_start so that the
/// steady-state initialization error has decayed by the time fitting begins.
struct WindowPolicy {
    double warmup_skip = 1.0; ///< s of prediction discarded before the fit
    double fit_start = 3.0;   ///< s
    double fit_end = 10.0;    ///< s

    void validate() const;
};

/// Ordinary least squares of each residual channel on [1, V, V^2].
/// Throws RankDeficientError when the basis condition number exceeds 1e12
/// (a window with essentially no voltage excitation).
RegressionOutcome regress_zip(std::span<const double> residual_p,
                              std::span<const double> residual_q,
                              std::span<const double> v);

/// Constant-only fallback fit: pp/qp take the residual means, the V and V^2
/// coefficients stay zero. Marked low_excitation.
RegressionOutcome regress_zip_reduced(std::span<const double> residual_p,
                                      std::span<const double> residual_q);

struct CandidateEval {
    double of = 0.0;         ///< mean squared residual over both channels
    ZIPParams os;            ///< optimal static parameters for this candidate
    RegressionOutcome diag;
};

/// The lower stage: predicts motor power for candidate d over
/// [fit_start - warmup_skip, fit_end), regresses the measured-minus-motor
/// residuals on the ZIP basis over [fit_start, fit_end), and returns
///   OF(d) = (sum r_p^2 + sum r_q^2) / l
/// together with OS(d). Rank-deficient windows fall back to the reduced
/// basis rather than failing mid-search. Infeasible candidates propagate
/// InfeasibleError/DivergenceError; the optimizer maps those to a penalty.
CandidateEval evaluate_candidate(const IMParamsTransformed& d,
                                 const MeasurementSeries& data,
                                 const WindowPolicy& policy,
                                 const SystemConfig& cfg);

/// Reusable workspace for evaluating many candidates against one data
/// window: the window slices, the regression basis, and its factorization
/// are prepared once. Policy times are relative to the window start; the fit
/// interval is half-open, so the default 3 s..10 s policy on a 10 s window
/// at 100 Hz uses exactly 700 samples. Not safe to share across threads;
/// give each thread its own instance.
class CandidateEvaluator {
public:
    CandidateEvaluator(const MeasurementSeries& data,
                       const WindowPolicy& policy, const SystemConfig& cfg);
    ~CandidateEvaluator();
    CandidateEvaluator(CandidateEvaluator&&) noexcept;
    CandidateEvaluator& operator=(CandidateEvaluator&&) noexcept;
    CandidateEvaluator(const CandidateEvaluator&) = delete;
    CandidateEvaluator& operator=(const CandidateEvaluator&) = delete;

    /// Objective value only; reuses internal scratch buffers.
    double objective(const IMParamsTransformed& d) const;

    /// Full evaluation with regression diagnostics.
    CandidateEval evaluate(const IMParamsTransformed& d) const;

    std::size_t fit_length() const;
    bool low_excitation() const;
    double grid_dt() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace loadid
