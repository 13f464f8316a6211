#pragma once

#include "loadid/types.hpp"

namespace loadid {

/// Collapses (x, xp, td0) into the two rate constants of the transformed
/// model:
///   a = (1/(td0*xp)) * (x/xp - 1)
///   b = x/(td0*xp)
/// h2 and tm carry over unchanged. Throws ValidationError when x <= xp (the
/// transformed gain would not be positive).
IMParamsTransformed transform_params(const IMParamsPhysical& phys);

/// (V, theta) -> Vd + i*Vq = V * e^{i*theta}.
PhasorDQ polar_to_dq(double v_mag, double theta);

/// State rates of the transformed motor:
///   dFd/dt = -b*Fd + s*omega0*Fq + a*Vd
///   dFq/dt = -b*Fq - s*omega0*Fd + a*Vq
///   ds/dt  = (1/h2) * (tm - Vq*Fd + Vd*Fq)
IMStateRate im_derivatives(const IMState& st, const PhasorDQ& v,
                           const IMParamsTransformed& d,
                           const SystemConfig& cfg);

/// Motor power in transformed coordinates:
///   P = Fd*Vq - Fq*Vd
///   Q = -Vd*Fd - Vq*Fq
/// The V^2/X' part of the original reactive output is deliberately absent;
/// it lives in the static model's qz.
PowerPQ im_output(const IMState& st, const PhasorDQ& v);

/// State rates of the original third-order motor. Throws ValidationError
/// when xp == 0.
OriginalIMStateRate im_original_derivatives(const OriginalIMState& st,
                                            const PhasorDQ& v,
                                            const IMParamsPhysical& phys,
                                            const SystemConfig& cfg);

/// Power of the original motor, including the V^2/X' reactive term:
///   P = (Ed*Vq - Eq*Vd)/X'
///   Q = (Vd^2 + Vq^2)/X' + (-Vd*Ed - Vq*Eq)/X'
PowerPQ im_original_output(const OriginalIMState& st, const PhasorDQ& v,
                           const IMParamsPhysical& phys);

/// Static load power at voltage magnitude v:
///   P = pz*v^2 + pi*v + pp
///   Q = qz*v^2 + qi*v + qp
PowerPQ zip_power(const ZIPParams& zip, double v_mag);

} // namespace loadid
