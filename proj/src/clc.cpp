#include "gfmsf/clc.hpp"

#include <algorithm>

#include "gfmsf/gfm.hpp"

namespace gfmsf::clc {

SccOutput scc_step(SccState s, const DqVector& v_ref, const DqVector& i, const DqVector& i_r,
                   const DqVector& v_pcc_f, const SccConfig& cfg, double dt) {
    const double amp = i.amplitude();
    if (!s.active && amp >= cfg.i_th) {
        s.active = true;
    } else if (s.active && amp <= cfg.i_th - cfg.hysteresis) {
        s.active = false;
        s.pi_integrator = {};
    }
    if (!s.active) return {v_ref, s};

    const DqVector err = i_r - i;
    const DqVector v_pi = cfg.k_p * err + s.pi_integrator;
    s.pi_integrator += (cfg.k_p / cfg.t_i * dt) * err;
    return {v_pcc_f + impedance_apply(cfg.z_c, cfg.omega, i_r) + v_pi, s};
}

RlccOutput rlcc_step(const DqVector& v_ref, const DqVector& i, const DqVector& v_pcc_f,
                     const Impedance& z_c, double omega, double k_p, double i_th) {
    RlccOutput out;
    const DqVector ff = v_pcc_f + impedance_apply(z_c, omega, i);
    out.i_r_fictitious = i + (1.0 / k_p) * (v_ref - ff);
    if (out.i_r_fictitious.amplitude() <= i_th) {
        out.v_c = v_ref;
        return out;
    }
    out.engaged = true;
    const DqVector clamped = gfm::limit_current_reference(out.i_r_fictitious, i_th);
    out.v_c = ff + k_p * (clamped - i);
    return out;
}

AviOutput avi_step(const DqVector& v_ref, const DqVector& i, double k_x, double eta, double i_th) {
    AviOutput out;
    const double excess = i.amplitude() - i_th;
    if (!(excess > 0.0)) {
        out.v_c = v_ref;
        return out;
    }
    out.state.x_v = k_x * excess;
    out.state.r_v = out.state.x_v / eta;
    const DqVector drop = out.state.r_v * i + out.state.x_v * rotate_quarter(i);
    out.v_c = v_ref - drop;
    return out;
}

}  // namespace gfmsf::clc
