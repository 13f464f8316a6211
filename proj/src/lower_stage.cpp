#include "loadid/lower_stage.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "loadid/errors.hpp"
#include "loadid/simulate.hpp"

namespace loadid {

namespace {

constexpr double kMaxCondition = 1e12;

Eigen::MatrixXd zip_basis(std::span<const double> v) {
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(v.size()), 3);
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
        const double vi = v[static_cast<std::size_t>(i)];
        basis(i, 0) = 1.0;
        basis(i, 1) = vi;
        basis(i, 2) = vi * vi;
    }
    return basis;
}

double basis_condition(const Eigen::MatrixXd& basis) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

ZIPParams coeffs_to_zip(const Eigen::Vector3d& cp, const Eigen::Vector3d& cq) {
    // Column order of the basis is [1, V, V^2].
    return ZIPParams{.pz = cp(2), .pi = cp(1), .pp = cp(0),
                     .qz = cq(2), .qi = cq(1), .qp = cq(0)};
}

double mean_of(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    return sum / static_cast<double>(x.size());
}

std::size_t index_for(double time, double grid_dt, const char* what) {
    const double pos = time / grid_dt;
    const auto idx = std::llround(pos);
    if (std::abs(pos - static_cast<double>(idx)) > 1e-6) {
        std::ostringstream os;
        os << what << " = " << time << " s does not land on the sample grid (dt = "
           << grid_dt << " s)";
        throw ValidationError(os.str());
    }
    if (idx < 0) {
        std::ostringstream os;
        os << what << " maps before the start of the window";
        throw ValidationError(os.str());
    }
    return static_cast<std::size_t>(idx);
}

} // namespace

void WindowPolicy::validate() const {
    if (warmup_skip < 0.0) throw ValidationError("warmup_skip must be non-negative");
    if (!(fit_start < fit_end)) {
        throw ValidationError("fit_start must precede fit_end");
    }
    if (fit_start - warmup_skip < 0.0) {
        throw ValidationError("prediction would start before the data window");
    }
}

RegressionOutcome regress_zip(std::span<const double> residual_p,
                              std::span<const double> residual_q,
                              std::span<const double> v) {
    const std::size_t l = v.size();
    if (residual_p.size() != l || residual_q.size() != l) {
        throw ValidationError("regression series must have equal lengths");
    }
    if (l < 3) throw ValidationError("regression needs at least 3 samples");

    const Eigen::MatrixXd basis = zip_basis(v);
    const double cond = basis_condition(basis);
    if (cond > kMaxCondition) {
        std::ostringstream os;
        os << "ZIP basis is rank deficient (condition number " << cond
           << "); the window lacks voltage excitation";
        throw RankDeficientError(os.str());
    }

    const Eigen::Map<const Eigen::VectorXd> yp(residual_p.data(),
                                               static_cast<Eigen::Index>(l));
    const Eigen::Map<const Eigen::VectorXd> yq(residual_q.data(),
                                               static_cast<Eigen::Index>(l));
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::Vector3d cp = qr.solve(yp);
    const Eigen::Vector3d cq = qr.solve(yq);

    RegressionOutcome out;
    out.zip = coeffs_to_zip(cp, cq);
    out.l = l;
    const Eigen::VectorXd rp = yp - basis * cp;
    const Eigen::VectorXd rq = yq - basis * cq;
    out.r_p.assign(rp.data(), rp.data() + rp.size());
    out.r_q.assign(rq.data(), rq.data() + rq.size());
    return out;
}

RegressionOutcome regress_zip_reduced(std::span<const double> residual_p,
                                      std::span<const double> residual_q) {
    if (residual_p.size() != residual_q.size() || residual_p.empty()) {
        throw ValidationError("regression series must be nonempty and equal length");
    }
    RegressionOutcome out;
    out.low_excitation = true;
    out.l = residual_p.size();
    out.zip.pp = mean_of(residual_p);
    out.zip.qp = mean_of(residual_q);
    out.r_p.resize(out.l);
    out.r_q.resize(out.l);
    for (std::size_t i = 0; i < out.l; ++i) {
        out.r_p[i] = residual_p[i] - out.zip.pp;
        out.r_q[i] = residual_q[i] - out.zip.qp;
    }
    return out;
}

struct CandidateEvaluator::Impl {
    SystemConfig cfg;
    double grid_dt = 0.0;
    std::size_t fit_offset = 0; ///< fit start within the prediction slice
    std::size_t l = 0;
    bool low_excitation = false;

    // Prediction inputs over [pred_begin, fit_end).
    std::vector<double> v_pred, theta_pred;
    // Measured power and voltage over the fit range.
    std::vector<double> p_fit, q_fit;
    Eigen::MatrixXd basis;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;

    // Scratch reused across evaluations.
    mutable PowerSeries motor;
    mutable Eigen::VectorXd yp, yq, rp, rq;

    /// Predicts motor power and fills yp/yq with the static-load residuals.
    void compute_residuals(const IMParamsTransformed& d) const {
        motor = predict_im_power(d, v_pred, theta_pred, grid_dt, cfg);
        const auto il = static_cast<Eigen::Index>(l);
        yp.resize(il);
        yq.resize(il);
        for (Eigen::Index k = 0; k < il; ++k) {
            const std::size_t j = fit_offset + static_cast<std::size_t>(k);
            yp(k) = p_fit[static_cast<std::size_t>(k)] - motor.p[j];
            yq(k) = q_fit[static_cast<std::size_t>(k)] - motor.q[j];
        }
    }

    /// Solves the regression for both channels; returns the coefficient
    /// pairs and leaves the residuals in rp/rq.
    std::pair<Eigen::Vector3d, Eigen::Vector3d> solve() const {
        if (low_excitation) {
            Eigen::Vector3d cp = Eigen::Vector3d::Zero();
            Eigen::Vector3d cq = Eigen::Vector3d::Zero();
            cp(0) = yp.mean();
            cq(0) = yq.mean();
            rp = yp.array() - cp(0);
            rq = yq.array() - cq(0);
            return {cp, cq};
        }
        const Eigen::Vector3d cp = qr.solve(yp);
        const Eigen::Vector3d cq = qr.solve(yq);
        rp.noalias() = yp - basis * cp;
        rq.noalias() = yq - basis * cq;
        return {cp, cq};
    }

    double of_value() const {
        return (rp.squaredNorm() + rq.squaredNorm()) / static_cast<double>(l);
    }
};

CandidateEvaluator::CandidateEvaluator(const MeasurementSeries& data,
                                       const WindowPolicy& policy,
                                       const SystemConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
    data.validate();
    policy.validate();
    cfg.validate();

    impl_->cfg = cfg;
    impl_->grid_dt = data.grid_dt();
    const double dt = impl_->grid_dt;
    const std::size_t n = data.size();

    const std::size_t pred_begin =
        index_for(policy.fit_start - policy.warmup_skip, dt, "prediction start");
    const std::size_t fit_begin = index_for(policy.fit_start, dt, "fit_start");
    const std::size_t fit_end = index_for(policy.fit_end, dt, "fit_end");
    if (fit_end > n) {
        throw ValidationError("fit_end lies beyond the data window");
    }
    if (fit_end <= fit_begin + 2) {
        throw ValidationError("fit window must contain at least 3 samples");
    }

    impl_->fit_offset = fit_begin - pred_begin;
    impl_->l = fit_end - fit_begin;

    auto slice = [](const std::vector<double>& x, std::size_t lo, std::size_t hi) {
        return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                   x.begin() + static_cast<std::ptrdiff_t>(hi));
    };
    impl_->v_pred = slice(data.v, pred_begin, fit_end);
    impl_->theta_pred = slice(data.theta, pred_begin, fit_end);
    impl_->p_fit = slice(data.p, fit_begin, fit_end);
    impl_->q_fit = slice(data.q, fit_begin, fit_end);

    const std::vector<double> v_fit = slice(data.v, fit_begin, fit_end);
    impl_->basis = zip_basis(v_fit);
    impl_->low_excitation = basis_condition(impl_->basis) > kMaxCondition;
    if (!impl_->low_excitation) {
        impl_->qr = Eigen::HouseholderQR<Eigen::MatrixXd>(impl_->basis);
    }
}

CandidateEvaluator::~CandidateEvaluator() = default;
CandidateEvaluator::CandidateEvaluator(CandidateEvaluator&&) noexcept = default;
CandidateEvaluator& CandidateEvaluator::operator=(CandidateEvaluator&&) noexcept =
    default;

std::size_t CandidateEvaluator::fit_length() const { return impl_->l; }
bool CandidateEvaluator::low_excitation() const { return impl_->low_excitation; }
double CandidateEvaluator::grid_dt() const { return impl_->grid_dt; }

double CandidateEvaluator::objective(const IMParamsTransformed& d) const {
    impl_->compute_residuals(d);
    impl_->solve();
    return impl_->of_value();
}

CandidateEval CandidateEvaluator::evaluate(const IMParamsTransformed& d) const {
    impl_->compute_residuals(d);
    const auto [cp, cq] = impl_->solve();

    CandidateEval out;
    out.of = impl_->of_value();
    out.os = coeffs_to_zip(cp, cq);
    out.diag.zip = out.os;
    out.diag.l = impl_->l;
    out.diag.low_excitation = impl_->low_excitation;
    out.diag.r_p.assign(impl_->rp.data(), impl_->rp.data() + impl_->rp.size());
    out.diag.r_q.assign(impl_->rq.data(), impl_->rq.data() + impl_->rq.size());
    return out;
}

CandidateEval evaluate_candidate(const IMParamsTransformed& d,
                                 const MeasurementSeries& data,
                                 const WindowPolicy& policy,
                                 const SystemConfig& cfg) {
    return CandidateEvaluator(data, policy, cfg).evaluate(d);
}

} // namespace loadid
