#include "gfmsf/gfm.hpp"

#include <algorithm>
#include <cmath>

namespace gfmsf::gfm {

PllState pll_step(PllState s, const DqVector& v_pcc_global, double k_p, double t_i, double tau_d,
                  double dt) {
    const DqVector v = change_frame(v_pcc_global, 0.0, s.theta);
    const double err = std::atan2(v.q, v.d);
    const double limit = k_p * std::numbers::pi;
    s.integrator = std::clamp(s.integrator + k_p / t_i * err * dt, -limit, limit);
    s.omega_raw = 1.0 + k_p * err + s.integrator;
    s.theta = wrap_angle(s.theta + kOmegaNominal * (s.omega_raw - 1.0) * dt);
    s.omega_filtered += dt / tau_d * (s.omega_raw - s.omega_filtered);
    return s;
}

double inverse_frequency_droop(double omega_pll, double p_star, double omega_star, double d_f) {
    return p_star - (omega_pll - omega_star) / d_f;
}

double vsm_frequency_derivative(double omega_c, double p_r, double p, double omega_pll, double h,
                                double k_d) {
    return ((p_r - p) - k_d * (omega_c - omega_pll)) / (2.0 * h);
}

VsmState vsm_step(VsmState s, double p_r, double p, double omega_pll, double h, double k_d,
                  double dt) {
    const double dw = vsm_frequency_derivative(s.omega_c, p_r, p, omega_pll, h, k_d);
    s.theta_c = wrap_angle(s.theta_c + kOmegaNominal * (s.omega_c - 1.0) * dt);
    s.omega_c += dw * dt;
    return s;
}

EdpcState edpc_step(EdpcState s, double theta_pll, double p_r, double p, double k_p, double t_i,
                    double dt) {
    const double e = p_r - p;
    s.theta_r = k_p * e + s.integrator;
    s.theta_c = wrap_angle(theta_pll + s.theta_r);
    s.integrator = std::clamp(s.integrator + k_p * e * dt / t_i, -std::numbers::pi, std::numbers::pi);
    return s;
}

double voltage_droop(double q, double v_star, double q_star, double d_v) {
    return v_star + d_v * (q_star - q);
}

DqVector limit_current_reference(const DqVector& i_r_raw, double i_th) {
    const double d = std::clamp(i_r_raw.d, -i_th, i_th);
    const double q_room = std::sqrt(std::max(0.0, i_th * i_th - d * d));
    const double q = std::copysign(std::min(std::abs(i_r_raw.q), q_room), i_r_raw.q);
    return {d, q};
}

DqVector limited_voltage_reference(const DqVector& i_r, const DqVector& v_pcc_f,
                                   const Impedance& z_c, double omega) {
    return impedance_apply(z_c, omega, i_r) + v_pcc_f;
}

DqVector compute_reference_current(const DqVector& v_cn, const DqVector& v_pcc_f,
                                   const Impedance& z_c, double omega) {
    return impedance_solve(z_c, omega, v_cn - v_pcc_f);
}

GfmReference voltage_reference_limitation(const DqVector& v_cn, const DqVector& v_pcc_f,
                                          const Impedance& z_c, double omega, double i_th) {
    GfmReference ref;
    ref.v_cn = v_cn;
    const DqVector raw = compute_reference_current(v_cn, v_pcc_f, z_c, omega);
    ref.i_r = limit_current_reference(raw, i_th);
    ref.limited = !(ref.i_r == raw);
    ref.v_cn_lim = ref.limited ? limited_voltage_reference(ref.i_r, v_pcc_f, z_c, omega) : v_cn;
    return ref;
}

}  // namespace gfmsf::gfm
