#pragma once

// Conventional current-limiting controls. Each maps the limited GFM voltage
// reference and the measurements (controller frame) to a terminal voltage.

#include "gfmsf/frames.hpp"

namespace gfmsf {

struct SccState {
    bool active = false;
    DqVector pi_integrator;
};

struct AviState {
    double x_v = 0.0;
    double r_v = 0.0;
};

namespace clc {

struct SccConfig {
    Impedance z_c;
    double omega = 1.0;
    double k_p = 0.342;
    double t_i = 0.002;
    double i_th = 1.18;
    double hysteresis = 0.05;
};

struct SccOutput {
    DqVector v_c;
    SccState state;
};

/// Switched current control: PI current loop engaged between ||i|| >= i_th
/// and ||i|| <= i_th - hysteresis.
SccOutput scc_step(SccState s, const DqVector& v_ref, const DqVector& i, const DqVector& i_r,
                   const DqVector& v_pcc_f, const SccConfig& cfg, double dt);

struct RlccOutput {
    DqVector v_c;
    bool engaged = false;
    DqVector i_r_fictitious;
};

/// Reference-limited proportional current control.
RlccOutput rlcc_step(const DqVector& v_ref, const DqVector& i, const DqVector& v_pcc_f,
                     const Impedance& z_c, double omega, double k_p, double i_th);

struct AviOutput {
    DqVector v_c;
    AviState state;
};

/// Adaptive virtual impedance: x_v = K_X max(0, ||i|| - i_th), r_v = x_v / eta.
AviOutput avi_step(const DqVector& v_ref, const DqVector& i, double k_x, double eta, double i_th);

}  // namespace clc
}  // namespace gfmsf
