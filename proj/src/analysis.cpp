#include "loadid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "loadid/errors.hpp"
#include "loadid/rng.hpp"

namespace loadid {

namespace {

constexpr double kMidpointTolerance = 1e-12;

IMParamsTransformed midpoint(const IMParamsTransformed& x,
                             const IMParamsTransformed& y) {
    return IMParamsTransformed{0.5 * (x.a + y.a), 0.5 * (x.b + y.b),
                               0.5 * (x.h2 + y.h2), 0.5 * (x.tm + y.tm)};
}

double normalized_distance(const IMParamsTransformed& d,
                           const IMParamsTransformed& ref, bool absolute) {
    const std::array<double, 4> num{d.a, d.b, d.h2, d.tm};
    const std::array<double, 4> den{ref.a, ref.b, ref.h2, ref.tm};
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        const double dev = num[j] / den[j] - 1.0;
        sum += absolute ? std::abs(dev) : dev;
    }
    return sum;
}

} // namespace

QConvexReport quasiconvexity_test_fn(
    const std::function<double(const IMParamsTransformed&)>& objective,
    const FeasibleRegion& region, std::size_t n_pairs, std::uint64_t seed) {
    if (n_pairs == 0) throw ValidationError("n_pairs must be >= 1");
    region.validate();

    QConvexReport report;
    std::uint64_t draw = 0;
    const std::size_t max_attempts = 1000 * n_pairs + 1000;
    std::size_t attempts = 0;
    while (report.n_pairs < n_pairs) {
        if (++attempts > max_attempts) {
            throw InfeasibleError("quasi-convexity sampling failed to find evaluable pairs");
        }
        const IMParamsTransformed left =
            sample_feasible(region, derive_seed(seed, draw++));
        const IMParamsTransformed right =
            sample_feasible(region, derive_seed(seed, draw++));
        const IMParamsTransformed mid = midpoint(left, right);
        if (!is_feasible(mid, region)) {
            ++report.n_resampled;
            continue;
        }
        double of_left, of_right, of_mid;
        try {
            of_left = objective(left);
            of_right = objective(right);
            of_mid = objective(mid);
        } catch (const NumericError&) {
            ++report.n_resampled;
            continue;
        }
        ++report.n_pairs;
        const double worst = std::max(of_left, of_right);
        if (of_mid <= worst + kMidpointTolerance) {
            ++report.n_success;
        } else {
            report.failures.push_back(
                QConvexPairFailure{left, right, of_left, of_right, of_mid});
        }
    }
    return report;
}

QConvexReport quasiconvexity_test(const MeasurementSeries& data,
                                  const FeasibleRegion& region,
                                  std::size_t n_pairs, std::uint64_t seed,
                                  const WindowPolicy& policy,
                                  const SystemConfig& cfg) {
    const CandidateEvaluator evaluator(data, policy, cfg);
    return quasiconvexity_test_fn(
        [&](const IMParamsTransformed& d) { return evaluator.objective(d); },
        region, n_pairs, seed);
}

ReliabilityReport reliability_test_seeds(const MeasurementSeries& data,
                                         const FeasibleRegion& region,
                                         std::span<const std::uint64_t> seeds,
                                         const WindowPolicy& policy,
                                         const SystemConfig& cfg,
                                         const SolverOptions& base_opts) {
    if (seeds.empty()) throw ValidationError("reliability test needs at least one start");

    std::vector<IdentificationResult> runs;
    runs.reserve(seeds.size());
    SolverOptions opts = base_opts;
    opts.n_starts = 1;
    for (const std::uint64_t s : seeds) {
        opts.seed = s;
        runs.push_back(minimize(data, region, opts, policy, cfg));
    }

    std::size_t ref_idx = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].of_opt < runs[ref_idx].of_opt) ref_idx = i;
    }
    const IMParamsTransformed& ref = runs[ref_idx].d_opt;

    std::size_t ok_abs = 0, ok_signed = 0;
    for (const auto& run : runs) {
        if (normalized_distance(run.d_opt, ref, true) < 0.1) ++ok_abs;
        if (normalized_distance(run.d_opt, ref, false) < 0.1) ++ok_signed;
    }

    ReliabilityReport report;
    report.n_starts = runs.size();
    report.sp_percent =
        100.0 * static_cast<double>(ok_abs) / static_cast<double>(runs.size());
    report.sp_signed_percent =
        100.0 * static_cast<double>(ok_signed) / static_cast<double>(runs.size());
    report.best = std::move(runs[ref_idx]);
    return report;
}

ReliabilityReport reliability_test(const MeasurementSeries& data,
                                   const FeasibleRegion& region,
                                   std::size_t n_starts, std::uint64_t seed,
                                   const WindowPolicy& policy,
                                   const SystemConfig& cfg,
                                   const SolverOptions& base_opts) {
    std::vector<std::uint64_t> seeds(n_starts);
    for (std::size_t k = 0; k < n_starts; ++k) seeds[k] = derive_seed(seed, k);
    return reliability_test_seeds(data, region, seeds, policy, cfg, base_opts);
}

double GridAxis::at(std::size_t i) const {
    if (count == 1) return k_min;
    return k_min + (k_max - k_min) * static_cast<double>(i) /
                       static_cast<double>(count - 1);
}

void GridAxis::validate() const {
    if (count < 1) throw ValidationError("grid axis needs at least one point");
    if (!(k_min <= k_max)) throw ValidationError("grid axis requires k_min <= k_max");
}

IMParamsTransformed LandscapeGrid::point(double k1_val, double k2_val) const {
    return IMParamsTransformed{
        d_center.a + k1_val * (d1.a - d_center.a) + k2_val * (d2.a - d_center.a),
        d_center.b + k1_val * (d1.b - d_center.b) + k2_val * (d2.b - d_center.b),
        d_center.h2 + k1_val * (d1.h2 - d_center.h2) +
            k2_val * (d2.h2 - d_center.h2),
        d_center.tm + k1_val * (d1.tm - d_center.tm) +
            k2_val * (d2.tm - d_center.tm)};
}

LandscapeGrid landscape_slice(const MeasurementSeries& data,
                              const IMParamsTransformed& d_center,
                              const IMParamsTransformed& d1,
                              const IMParamsTransformed& d2,
                              const GridAxis& k1, const GridAxis& k2,
                              const FeasibleRegion& region,
                              const WindowPolicy& policy,
                              const SystemConfig& cfg) {
    k1.validate();
    k2.validate();
    auto same = [](const IMParamsTransformed& x, const IMParamsTransformed& y) {
        return x.a == y.a && x.b == y.b && x.h2 == y.h2 && x.tm == y.tm;
    };
    if (same(d1, d_center) || same(d2, d_center)) {
        throw ValidationError("slice anchors must differ from the center");
    }

    const CandidateEvaluator evaluator(data, policy, cfg);
    LandscapeGrid grid;
    grid.d_center = d_center;
    grid.d1 = d1;
    grid.d2 = d2;
    grid.k1 = k1;
    grid.k2 = k2;
    grid.values.assign(k1.count * k2.count, LandscapeGrid::kInfeasibleSentinel);

    for (std::size_t i = 0; i < k1.count; ++i) {
        for (std::size_t j = 0; j < k2.count; ++j) {
            const IMParamsTransformed d = grid.point(k1.at(i), k2.at(j));
            if (!is_feasible(d, region)) continue;
            try {
                const double of = evaluator.objective(d);
                grid.values[i * k2.count + j] = std::log10(std::max(of, 1e-300));
            } catch (const NumericError&) {
                // evaluation failure keeps the sentinel
            }
        }
    }
    return grid;
}

double fitting_degree(std::span<const double> y_ref,
                      std::span<const double> y_test) {
    if (y_ref.size() != y_test.size() || y_ref.empty()) {
        throw ValidationError("fitting degree needs nonempty series of equal length");
    }
    double mean = 0.0;
    for (double v : y_ref) mean += v;
    mean /= static_cast<double>(y_ref.size());

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y_ref.size(); ++i) {
        num += (y_test[i] - y_ref[i]) * (y_test[i] - y_ref[i]);
        den += (y_ref[i] - mean) * (y_ref[i] - mean);
    }
    if (!(den > 0.0)) {
        throw NumericError("fitting degree undefined: reference series has zero variance");
    }
    return 1.0 - num / den;
}

ValidationReport validate_identified(const CompositeLoad& actual,
                                     const CompositeLoad& identified,
                                     const FaultSpec& fault,
                                     const AmbientSpec& base,
                                     const SystemConfig& cfg,
                                     const SimOptions& opts) {
    const VoltageTrajectory traj = generate_fault_voltage(fault, base);

    auto simulate_scenario = [&](const CompositeLoad& load, const char* name) {
        try {
            return simulate_composite(load, traj, cfg, opts);
        } catch (const NumericError& e) {
            std::ostringstream os;
            os << name << " failed under the fault trajectory: " << e.what();
            throw DivergenceError(os.str());
        }
    };
    const MeasurementSeries ref = simulate_scenario(actual, "scenario 1 (actual model)");
    const MeasurementSeries test =
        simulate_scenario(identified, "scenario 2 (identified model)");

    ValidationReport report;
    report.event = fault;
    report.fd_p = fitting_degree(ref.p, test.p);
    report.fd_q = fitting_degree(ref.q, test.q);
    report.fd = 0.5 * (report.fd_p + report.fd_q);
    return report;
}

BatchStats batch_statistics(
    std::span<const std::pair<IdentificationResult, IMParamsTransformed>>
        results) {
    if (results.empty()) throw ValidationError("batch statistics need at least one result");

    BatchStats stats;
    stats.n = results.size();
    const double n = static_cast<double>(results.size());

    std::array<std::vector<double>, 4> normalized;
    for (auto& v : normalized) v.reserve(results.size());
    double snr_sum = 0.0;
    for (const auto& [result, truth] : results) {
        normalized[0].push_back(result.d_opt.a / truth.a);
        normalized[1].push_back(result.d_opt.b / truth.b);
        normalized[2].push_back(result.d_opt.h2 / truth.h2);
        normalized[3].push_back(result.d_opt.tm / truth.tm);
        snr_sum += result.window_snr_estimate_db;
    }
    stats.mean_snr_db = snr_sum / n;

    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (double v : normalized[j]) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : normalized[j]) ss += (v - mean) * (v - mean);
        stats.mu[j] = mean;
        // Sample standard deviation; zero for a single observation.
        stats.sigma[j] = results.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return stats;
}

} // namespace loadid
