#pragma once

// Grid-forming reference generation. Angles are measured relative to the
// nominal-speed global frame, so a frame turning at per-unit frequency w
// advances by omega_n * (w - 1) * dt.

#include "gfmsf/frames.hpp"
#include "gfmsf/params.hpp"

namespace gfmsf {

struct PllState {
    double theta = 0.0;
    double integrator = 0.0;      // per-unit frequency offset
    double omega_raw = 1.0;       // PI output, drives theta
    double omega_filtered = 1.0;  // omega_PLL
};

struct VsmState {
    double omega_c = 1.0;
    double theta_c = 0.0;
};

struct EdpcState {
    double integrator = 0.0;   // rad
    double theta_r = 0.0;
    double theta_c = 0.0;
};

struct GfmReference {
    DqVector v_cn;        // unlimited reference
    DqVector v_cn_lim;
    DqVector i_r;
    bool limited = false;
};

namespace gfm {

/// SRF-PLL: atan2 phase error, PI, first-order filter (tau_d) on the frequency.
/// Integrator clamps at k_p * pi.
PllState pll_step(PllState s, const DqVector& v_pcc_global, double k_p, double t_i, double tau_d,
                  double dt);

/// p_r = p* - (omega_pll - omega*) / D_f
double inverse_frequency_droop(double omega_pll, double p_star, double omega_star, double d_f);

/// Right-hand side of 2H dw/dt = (p_r - p) - K_d (w - w_pll), returned as dw/dt.
double vsm_frequency_derivative(double omega_c, double p_r, double p, double omega_pll, double h,
                                double k_d);

VsmState vsm_step(VsmState s, double p_r, double p, double omega_pll, double h, double k_d,
                  double dt);

/// theta_c = theta_pll + K_p (1 + 1/(s T_i)) (p_r - p); integrator clamps at +-pi.
EdpcState edpc_step(EdpcState s, double theta_pll, double p_r, double p, double k_p, double t_i,
                    double dt);

/// v_hat = v* + D_v (q* - q)
double voltage_droop(double q, double v_star, double q_star, double d_v);

/// Circular limit with d-axis priority: ||result|| <= i_th.
DqVector limit_current_reference(const DqVector& i_r_raw, double i_th);

/// Z_c i_r + v_pcc_f
DqVector limited_voltage_reference(const DqVector& i_r, const DqVector& v_pcc_f,
                                   const Impedance& z_c, double omega);

/// Z_c^-1 (v_cn - v_pcc_f)
DqVector compute_reference_current(const DqVector& v_cn, const DqVector& v_pcc_f,
                                   const Impedance& z_c, double omega);

/// Full chain: raw current reference, limitation, limited voltage reference.
GfmReference voltage_reference_limitation(const DqVector& v_cn, const DqVector& v_pcc_f,
                                          const Impedance& z_c, double omega, double i_th);

}  // namespace gfm
}  // namespace gfmsf
