#pragma once

// Default parameter set. Values are per-unit unless the name says otherwise;
// time constants are in seconds.

namespace gfmsf {

struct NetworkParams {
    double l_g = 0.32;     // utility grid (only used by hand checks)
    double r_g = 0.02;
    double l_c = 0.16;     // transformer
    double r_c = 0.02;
    double c_f = 0.006;    // grid filter, r_f in series with c_f
    double l_f = 0.2;
    double r_f = 10.0;
    double l_sm = 0.16;
    double r_sm = 0.01;
    double l_gfl = 0.16;
    double r_gfl = 0.01;
    double l_l = 0.016;    // fault branch
    double r_l = 0.001;
    double i_0 = 0.0;      // zero-sequence current held by the plant
    double t_clear = 1.0 / 120.0;  // breaker current interruption (half cycle)
};

struct LimitParams {
    double i_max = 1.30;
    double i_th = 1.18;
    double i_r_max = 1.18;
    double i_0_max = 0.6;
    double dv_max = 1.0;
    double m_max = 1.44;
};

struct GfmParams {
    double d_f = 0.02;
    double d_v = 0.05;
    double k_d = 50.0;
    double h = 3.0;
    double k_p_pll = 0.096;
    double t_i_pll = 0.085;
    double k_p_edpc = 0.45;
    double t_i_edpc = 0.120;
    double tau_d = 0.010;
    double tau_v = 0.100;
    double p_star = 0.0;
    double omega_star = 1.0;
    double q_star = 0.0;
    double v_star = 1.0;
};

struct ClcParams {
    double k_p_cc = 0.342;
    double t_i_cc = 0.002;
    double k_x = 10.0;
    double eta_xr = 16.0;
    double scc_hysteresis = 0.05;
};

struct FilterParams {
    double gamma_b = 211.0;
    double gamma_v = 683.0;
    double d_r = 0.1;
    double epsilon = 1e-3;
};

struct GridParams {
    double h_sm = 3.0;
    double p_m = 0.9;
    double i_r_gfl = -0.9;
    double tau_dc = 0.050;   // GFL DC-link capacitance time constant
    double k_p_dc = 2.0;
    double t_i_dc = 0.050;
    double gfl_i_limit = 1.5;
    double gfl_e_limit = 1.2;   // terminal voltage magnitude per unit of v_dc
    double gfl_restore = 0.5;   // ramp time of i_r_gfl back to its value after clearing
};

struct Params {
    NetworkParams network;
    LimitParams limits;
    GfmParams gfm;
    ClcParams clc;
    FilterParams filter;
    GridParams grid;
};

}  // namespace gfmsf
