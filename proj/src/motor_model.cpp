#include "loadid/motor_model.hpp"

#include <cmath>

#include "loadid/errors.hpp"

namespace loadid {

IMParamsTransformed transform_params(const IMParamsPhysical& phys) {
    phys.validate();
    const double inv = 1.0 / (phys.td0 * phys.xp);
    return IMParamsTransformed{
        .a = inv * (phys.x / phys.xp - 1.0),
        .b = phys.x * inv,
        .h2 = phys.h2,
        .tm = phys.tm,
    };
}

PhasorDQ polar_to_dq(double v_mag, double theta) {
    if (v_mag < 0.0) throw ValidationError("voltage magnitude must be >= 0");
    return PhasorDQ{v_mag * std::cos(theta), v_mag * std::sin(theta)};
}

IMStateRate im_derivatives(const IMState& st, const PhasorDQ& v,
                           const IMParamsTransformed& d,
                           const SystemConfig& cfg) {
    const double s_omega = st.s * cfg.omega0;
    return IMStateRate{
        .fd_dot = -d.b * st.fd + s_omega * st.fq + d.a * v.vd,
        .fq_dot = -d.b * st.fq - s_omega * st.fd + d.a * v.vq,
        .s_dot = (d.tm - v.vq * st.fd + v.vd * st.fq) / d.h2,
    };
}

PowerPQ im_output(const IMState& st, const PhasorDQ& v) {
    return PowerPQ{
        .p = st.fd * v.vq - st.fq * v.vd,
        .q = -v.vd * st.fd - v.vq * st.fq,
    };
}

OriginalIMStateRate im_original_derivatives(const OriginalIMState& st,
                                            const PhasorDQ& v,
                                            const IMParamsPhysical& phys,
                                            const SystemConfig& cfg) {
    if (phys.xp == 0.0) throw ValidationError("xp must be nonzero");
    const double decay = phys.x / (phys.td0 * phys.xp);
    const double gain = (phys.x / phys.xp - 1.0) / phys.td0;
    const double s_omega = st.s * cfg.omega0;
    const double te = (st.ed * v.vq - st.eq * v.vd) / phys.xp;
    return OriginalIMStateRate{
        .ed_dot = -decay * st.ed + s_omega * st.eq + gain * v.vd,
        .eq_dot = -decay * st.eq - s_omega * st.ed + gain * v.vq,
        .s_dot = (phys.tm - te) / phys.h2,
    };
}

PowerPQ im_original_output(const OriginalIMState& st, const PhasorDQ& v,
                           const IMParamsPhysical& phys) {
    if (phys.xp == 0.0) throw ValidationError("xp must be nonzero");
    const double v2 = v.vd * v.vd + v.vq * v.vq;
    return PowerPQ{
        .p = (st.ed * v.vq - st.eq * v.vd) / phys.xp,
        .q = v2 / phys.xp + (-v.vd * st.ed - v.vq * st.eq) / phys.xp,
    };
}

PowerPQ zip_power(const ZIPParams& zip, double v_mag) {
    if (v_mag < 0.0) throw ValidationError("voltage magnitude must be >= 0");
    return PowerPQ{
        .p = (zip.pz * v_mag + zip.pi) * v_mag + zip.pp,
        .q = (zip.qz * v_mag + zip.qi) * v_mag + zip.qp,
    };
}

} // namespace loadid
