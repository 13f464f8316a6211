#include "loadid/types.hpp"

#include <cmath>
#include <string>

#include "loadid/errors.hpp"

namespace loadid {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

bool all_finite(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_uniform_grid(const std::vector<double>& t) {
    require(t.size() >= 2, "time grid needs at least 2 samples");
    const double dt = t[1] - t[0];
    require(dt > 0.0, "time grid must be strictly increasing");
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double step = t[i] - t[i - 1];
        if (std::abs(step - dt) > 1e-9 * std::max(1.0, dt)) {
            throw ValidationError("time grid spacing is not uniform at row " +
                                  std::to_string(i));
        }
    }
}

} // namespace

void SystemConfig::validate() const {
    require(omega0 > 0.0, "omega0 must be positive");
    require(dt > 0.0, "dt must be positive");
}

void IMParamsPhysical::validate() const {
    require(std::isfinite(x) && std::isfinite(xp) && std::isfinite(td0) &&
                std::isfinite(h2) && std::isfinite(tm),
            "physical motor parameters must be finite");
    require(xp > 0.0, "xp must be positive");
    require(x > xp, "x must exceed xp");
    require(td0 > 0.0, "td0 must be positive");
    require(h2 > 0.0, "h2 must be positive");
    require(tm >= 0.0, "tm must be non-negative");
}

void IMParamsTransformed::validate() const {
    require(std::isfinite(a) && std::isfinite(b) && std::isfinite(h2) &&
                std::isfinite(tm),
            "transformed motor parameters must be finite");
    require(a > 0.0, "a must be positive");
    require(b > 0.0, "b must be positive");
    require(h2 > 0.0, "h2 must be positive");
    require(tm >= 0.0, "tm must be non-negative");
}

void ZIPParams::validate() const {
    require(std::isfinite(pz) && std::isfinite(pi) && std::isfinite(pp) &&
                std::isfinite(qz) && std::isfinite(qi) && std::isfinite(qp),
            "ZIP coefficients must be finite");
}

void MeasurementSeries::validate() const {
    const std::size_t n = t.size();
    require(n >= 2, "measurement series needs at least 2 samples");
    require(v.size() == n && theta.size() == n && p.size() == n &&
                q.size() == n,
            "measurement channels must have equal lengths");
    check_uniform_grid(t);
    require(all_finite(v) && all_finite(theta) && all_finite(p) &&
                all_finite(q),
            "measurement values must be finite");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(v[i] > 0.0)) {
            throw ValidationError("voltage must be positive at row " +
                                  std::to_string(i));
        }
    }
}

void VoltageTrajectory::validate() const {
    const std::size_t n = t.size();
    require(n >= 2, "voltage trajectory needs at least 2 samples");
    require(v.size() == n && theta.size() == n,
            "voltage trajectory channels must have equal lengths");
    check_uniform_grid(t);
    require(all_finite(v) && all_finite(theta),
            "voltage trajectory values must be finite");
}

void CompositeLoad::validate() const {
    if (physical_mode()) {
        std::get<IMParamsPhysical>(motor).validate();
    } else {
        std::get<IMParamsTransformed>(motor).validate();
    }
    zip.validate();
}

} // namespace loadid
