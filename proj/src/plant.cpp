#include "gfmsf/plant.hpp"

#include <algorithm>
#include <cmath>

namespace gfmsf::plant {

NonStationaryState converter_current_derivative(const NonStationaryState& x, const DqVector& u,
                                                const Impedance& z_c, double omega, double tau_v) {
    const double gain = kOmegaNominal / z_c.l;
    return {gain * (u - impedance_apply(z_c, omega, x.i)), (-1.0 / tau_v) * x.dv_pcc_f};
}

SmDerivative sm_grid_derivative(const SmGridState& g, double p_sm, double h) {
    return {(g.p_m - p_sm) / (2.0 * h), kOmegaNominal * g.omega_sm};
}

void gfl_control(GflGridState& g, const DqVector& v_pcc, const Impedance& own,
                 const GridParams& grid, const GfmParams& pll_gains, const ClcParams& cc_gains,
                 double dt) {
    g.pll = gfm::pll_step(g.pll, v_pcc, pll_gains.k_p_pll, pll_gains.t_i_pll, pll_gains.tau_d, dt);

    const DqVector v = change_frame(v_pcc, 0.0, g.pll.theta);
    const double lim = grid.gfl_i_limit * std::min(1.0, v.amplitude());
    const double err_dc = 1.0 - g.v_dc;
    g.dc_int = std::clamp(g.dc_int + grid.k_p_dc / grid.t_i_dc * err_dc * dt, -lim, lim);
    const double i_ref_d = std::clamp(grid.k_p_dc * err_dc + g.dc_int, -lim, lim);

    const DqVector i = change_frame(g.i_gfl, 0.0, g.pll.theta);
    const DqVector err_i = DqVector{i_ref_d, 0.0} - i;
    const DqVector decoupling = impedance_apply({0.0, own.l}, g.pll.omega_filtered, i);
    const DqVector cc_next = g.cc_int + (cc_gains.k_p_cc / cc_gains.t_i_cc * dt) * err_i;
    const DqVector e = v - cc_gains.k_p_cc * err_i - cc_next - decoupling;
    const double e_max = grid.gfl_e_limit * std::max(g.v_dc, 0.0);
    const double e_norm = e.amplitude();
    if (e_norm <= e_max) {
        g.cc_int = cc_next;
        g.e_cmd = e;
    } else {
        g.e_cmd = e_norm > 0.0 ? (e_max / e_norm) * e : e;
    }
}

GflDerivative gfl_derivative(const DqVector& i_gfl, double v_dc, const DqVector& v_pcc,
                             const DqVector& e_global, const Impedance& branch, double i_r_gfl,
                             double tau_dc) {
    GflDerivative out;
    out.d_i = (kOmegaNominal / branch.l) * (v_pcc - e_global - impedance_apply(branch, 1.0, i_gfl));
    // The bridge clamps the DC link at zero; below it neither side conducts.
    if (v_dc > 0.0) out.d_v_dc = (dot(e_global, i_gfl) / v_dc + i_r_gfl) / tau_dc;
    return out;
}

namespace {

struct GflContinuous {
    DqVector i;
    double v_dc = 1.0;

    GflContinuous& operator+=(const GflContinuous& o) { i += o.i; v_dc += o.v_dc; return *this; }
    friend GflContinuous operator+(GflContinuous a, const GflContinuous& b) { return a += b; }
    friend GflContinuous operator*(double s, GflContinuous a) { a.i *= s; a.v_dc *= s; return a; }
};

}  // namespace

void gfl_grid_step(GflGridState& g, const DqVector& v_pcc, const Impedance& branch,
                   const GridParams& grid, const GfmParams& pll_gains, const ClcParams& cc_gains,
                   double dt) {
    gfl_control(g, v_pcc, branch, grid, pll_gains, cc_gains, dt);

    const int substeps = std::max(1, static_cast<int>(std::ceil(dt / 1e-5)));
    const double h = dt / substeps;
    const double theta0 = g.pll.theta;
    const double omega = g.pll.omega_raw;
    const double v_dc0 = g.v_dc;
    GflContinuous x{g.i_gfl, g.v_dc};
    auto f = [&](double t, const GflContinuous& s) {
        const double m = v_dc0 > 0.0 ? std::max(s.v_dc, 0.0) / v_dc0 : 0.0;
        const DqVector e = m * rotate(g.e_cmd, theta0 + kOmegaNominal * (omega - 1.0) * t);
        const GflDerivative d = gfl_derivative(s.i, s.v_dc, v_pcc, e, branch, g.i_r_gfl, grid.tau_dc);
        return GflContinuous{d.d_i, d.d_v_dc};
    };
    for (int k = 0; k < substeps; ++k) x = rk4_step(x, k * h, h, f);
    g.i_gfl = x.i;
    g.v_dc = x.v_dc;
}

NetworkState& NetworkState::operator+=(const NetworkState& o) {
    i += o.i;
    v_cf += o.v_cf;
    i_g += o.i_g;
    i_f += o.i_f;
    omega_sm += o.omega_sm;
    delta_sm += o.delta_sm;
    v_dc += o.v_dc;
    return *this;
}

NetworkState& NetworkState::operator*=(double s) {
    i *= s;
    v_cf *= s;
    i_g *= s;
    i_f *= s;
    omega_sm *= s;
    delta_sm *= s;
    v_dc *= s;
    return *this;
}

bool NetworkState::is_finite() const {
    return i.is_finite() && v_cf.is_finite() && i_g.is_finite() && i_f.is_finite() &&
           std::isfinite(omega_sm) && std::isfinite(delta_sm) && std::isfinite(v_dc);
}

Network::Network(GridKind kind, const Params& params) : kind_(kind), params_(params) {
    const NetworkParams& n = params.network;
    if (kind == GridKind::high_inertia) {
        grid_branch_ = {n.r_sm, n.l_f + n.l_sm};
    } else {
        grid_branch_ = {n.r_gfl, n.l_f + n.l_gfl};
    }
}

DqVector Network::fault_current(double t, const NetworkState& s, const NetworkInputs& in) const {
    switch (in.fault) {
        case FaultMode::off: return {};
        case FaultMode::on: return s.i_f;
        case FaultMode::clearing: {
            const double tc = params_.network.t_clear;
            const double x = std::clamp((t - in.t_clear_start) / tc, 0.0, 1.0);
            return (0.5 * (1.0 + std::cos(std::numbers::pi * x))) * in.i_f_at_clear;
        }
    }
    return {};
}

DqVector Network::pcc_voltage(double t, const NetworkState& s, const NetworkInputs& in) const {
    // KCL: i = i_g + i_f + (v_pcc - v_cf) / r_f
    return s.v_cf + params_.network.r_f * (s.i - s.i_g - fault_current(t, s, in));
}

DqVector Network::grid_source(double t, const NetworkState& s, const NetworkInputs& in) const {
    if (kind_ == GridKind::high_inertia) {
        return {std::cos(s.delta_sm), std::sin(s.delta_sm)};
    }
    // e_gfl is a modulation command issued at v_dc_gfl; the terminal voltage follows the DC link.
    const double angle = in.theta_gfl + kOmegaNominal * (in.omega_gfl - 1.0) * (t - in.t_sample);
    const double m = in.v_dc_gfl > 0.0 ? std::max(s.v_dc, 0.0) / in.v_dc_gfl : 0.0;
    return m * rotate(in.e_gfl, angle);
}

NetworkState Network::derivative(double t, const NetworkState& s, const NetworkInputs& in) const {
    const NetworkParams& n = params_.network;
    const DqVector v_pcc = pcc_voltage(t, s, in);
    const double conv_angle = in.theta_c + kOmegaNominal * (in.omega_c - 1.0) * (t - in.t_sample);
    const DqVector v_c = rotate(in.v_c, conv_angle);
    const DqVector e = grid_source(t, s, in);

    NetworkState d{};
    const Impedance z_c{n.r_c, n.l_c};
    d.i = (kOmegaNominal / n.l_c) * (v_c - v_pcc - impedance_apply(z_c, 1.0, s.i));
    const DqVector i_cf = (1.0 / n.r_f) * (v_pcc - s.v_cf);
    d.v_cf = (kOmegaNominal / n.c_f) * (i_cf - n.c_f * rotate_quarter(s.v_cf));
    if (in.fault == FaultMode::on) {
        d.i_f = (kOmegaNominal / n.l_l) * (v_pcc - impedance_apply({n.r_l, n.l_l}, 1.0, s.i_f));
    }

    if (kind_ == GridKind::high_inertia) {
        d.i_g = (kOmegaNominal / grid_branch_.l) * (v_pcc - e - impedance_apply(grid_branch_, 1.0, s.i_g));
        const double p_sm = -dot(e, s.i_g);
        d.omega_sm = (in.p_m - p_sm) / (2.0 * params_.grid.h_sm);
        d.delta_sm = kOmegaNominal * (s.omega_sm - 1.0);
    } else {
        const GflDerivative g = gfl_derivative(s.i_g, s.v_dc, v_pcc, e, grid_branch_, in.i_r_gfl,
                                               params_.grid.tau_dc);
        d.i_g = g.d_i;
        d.v_dc = g.d_v_dc;
    }
    return d;
}

void Network::step(double t, double dt, const NetworkInputs& in) {
    state_ = rk4_step(state_, t, dt,
                      [&](double tt, const NetworkState& s) { return derivative(tt, s, in); });
    if (in.fault != FaultMode::on) state_.i_f = {};
}

}  // namespace gfmsf::plant
