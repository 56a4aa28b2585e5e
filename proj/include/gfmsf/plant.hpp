#pragma once

// Averaged plant: converter branch behind the transformer, PCC node with the
// damped filter capacitor, a grid branch towards either a synchronous machine
// or an aggregated grid-following converter, and a switchable fault branch.
//
// Network quantities live in a dq frame rotating at the nominal frequency
// ("global frame"). The PCC voltage is algebraic: KCL over the inductive
// branches and the r_f-c_f damping branch.

#include <functional>

#include "gfmsf/frames.hpp"
#include "gfmsf/gfm.hpp"
#include "gfmsf/params.hpp"

namespace gfmsf {

/// x = [i, dv_pcc_f]
struct NonStationaryState {
    DqVector i;
    DqVector dv_pcc_f;
};

/// z = [i_r, i_0]
struct StationaryState {
    DqVector i_r;
    double i_0 = 0.0;
};

struct SmGridState {
    double omega_sm = 1.0;
    double theta_sm = 0.0;   // relative to the global frame
    double p_m = 0.9;
};

struct GflGridState {
    double v_dc = 1.0;
    PllState pll;
    double dc_int = 0.0;
    DqVector cc_int;         // GFL PLL frame
    DqVector i_gfl;          // current drawn from the PCC, global frame
    double i_r_gfl = -0.9;   // DC-link current source
    DqVector e_cmd;          // terminal voltage command, GFL PLL frame
};

struct FilterState {
    DqVector v_cf;
    DqVector i_lf;
};

namespace plant {

/// f(x) + G u of the converter-side model used by the safety filter.
NonStationaryState converter_current_derivative(const NonStationaryState& x, const DqVector& u,
                                                const Impedance& z_c, double omega, double tau_v);

struct SmDerivative {
    double d_omega = 0.0;
    double d_theta = 0.0;
};

/// Swing equation 2H d(omega)/dt = p_m - p_sm. d_theta is absolute (omega_n * omega).
SmDerivative sm_grid_derivative(const SmGridState& g, double p_sm, double h);

/// Discrete GFL controller update: PLL, DC-voltage PI, current PI. Writes e_cmd.
/// `own` is the GFL's own filter impedance, used for cross-coupling compensation.
void gfl_control(GflGridState& g, const DqVector& v_pcc, const Impedance& own,
                 const GridParams& grid, const GfmParams& pll_gains, const ClcParams& cc_gains,
                 double dt);

struct GflDerivative {
    DqVector d_i;
    double d_v_dc = 0.0;
};

/// Continuous part of the GFL: branch current and DC link, e given in the global frame.
GflDerivative gfl_derivative(const DqVector& i_gfl, double v_dc, const DqVector& v_pcc,
                             const DqVector& e_global, const Impedance& branch, double i_r_gfl,
                             double tau_dc);

/// GFL attached to a stiff PCC voltage: one control update followed by RK4
/// integration of its branch current and DC link over dt (sub-stepped).
void gfl_grid_step(GflGridState& g, const DqVector& v_pcc, const Impedance& branch,
                   const GridParams& grid, const GfmParams& pll_gains, const ClcParams& cc_gains,
                   double dt);

enum class FaultMode { off, on, clearing };

/// Classical RK4 on any vector-space state type.
template <typename State, typename Fn>
State rk4_step(const State& x, double t, double dt, Fn&& derivative) {
    const State k1 = derivative(t, x);
    const State k2 = derivative(t + 0.5 * dt, x + (0.5 * dt) * k1);
    const State k3 = derivative(t + 0.5 * dt, x + (0.5 * dt) * k2);
    const State k4 = derivative(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class GridKind { high_inertia, low_inertia };

/// Continuous network state in the global frame.
struct NetworkState {
    DqVector i;        // converter current
    DqVector v_cf;     // filter capacitor voltage
    DqVector i_g;      // grid branch (l_f + grid impedance), PCC -> grid
    DqVector i_f;      // fault branch
    double omega_sm = 1.0;
    double delta_sm = 0.0;
    double v_dc = 1.0;

    NetworkState& operator+=(const NetworkState& o);
    NetworkState& operator*=(double s);
    friend NetworkState operator+(NetworkState a, const NetworkState& b) { return a += b; }
    friend NetworkState operator*(double s, NetworkState a) { return a *= s; }
    bool is_finite() const;
};

/// Inputs held constant (in their own rotating frames) over one control period.
struct NetworkInputs {
    double t_sample = 0.0;
    DqVector v_c;              // converter frame
    double theta_c = 0.0;      // converter frame angle at t_sample, relative to global frame
    double omega_c = 1.0;      // used to extrapolate theta_c between samples
    double p_m = 0.9;
    DqVector e_gfl;            // GFL frame
    double theta_gfl = 0.0;
    double omega_gfl = 1.0;
    double v_dc_gfl = 1.0;     // DC-link voltage when e_gfl was issued
    double i_r_gfl = -0.9;
    FaultMode fault = FaultMode::off;
    double t_clear_start = 0.0;
    DqVector i_f_at_clear;
};

class Network {
public:
    Network(GridKind kind, const Params& params);

    GridKind kind() const { return kind_; }
    const NetworkState& state() const { return state_; }
    NetworkState& state() { return state_; }
    const Impedance& grid_branch() const { return grid_branch_; }

    /// Fault current actually flowing (state, clearing taper or zero).
    DqVector fault_current(double t, const NetworkState& s, const NetworkInputs& in) const;

    /// Algebraic KCL solve for the PCC voltage.
    DqVector pcc_voltage(double t, const NetworkState& s, const NetworkInputs& in) const;

    /// Grid-side source voltage in the global frame.
    DqVector grid_source(double t, const NetworkState& s, const NetworkInputs& in) const;

    NetworkState derivative(double t, const NetworkState& s, const NetworkInputs& in) const;

    void step(double t, double dt, const NetworkInputs& in);

private:
    GridKind kind_;
    Params params_;
    Impedance grid_branch_;
    NetworkState state_;
};

}  // namespace plant
}  // namespace gfmsf
