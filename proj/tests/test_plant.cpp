#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "gfmsf/plant.hpp"

using namespace gfmsf;
using namespace gfmsf::plant;
using doctest::Approx;

namespace {

const Impedance kZc{0.02, 0.16};

// i' = (w_n / l)(v - Z i) with constant v, solved in complex form.
DqVector rl_exact(const DqVector& i0, const DqVector& v, double t) {
    using C = std::complex<double>;
    const C z(kZc.r, kZc.l);
    const C a = -kOmegaNominal / kZc.l * z;
    const C iss = C(v.d, v.q) / z;
    const C i = iss + std::exp(a * t) * (C(i0.d, i0.q) - iss);
    return {i.real(), i.imag()};
}

DqVector rl_rk4(const DqVector& i0, const DqVector& v, double t_end, double dt) {
    DqVector i = i0;
    const int n = static_cast<int>(std::lround(t_end / dt));
    auto f = [&](double, const DqVector& x) {
        return (kOmegaNominal / kZc.l) * (v - impedance_apply(kZc, 1.0, x));
    };
    for (int k = 0; k < n; ++k) i = rk4_step(i, k * dt, dt, f);
    return i;
}

}  // namespace

TEST_CASE("converter_current_derivative") {
    auto d = converter_current_derivative({}, {}, kZc, 1.0, 0.1);
    CHECK(d.i == DqVector{});
    CHECK(d.dv_pcc_f == DqVector{});

    d = converter_current_derivative({{0.9, 0.0}, {}}, {0.018, 0.144}, kZc, 1.0, 0.1);
    CHECK(std::abs(d.i.d) < 1e-12);
    CHECK(std::abs(d.i.q) < 1e-12);

    d = converter_current_derivative({{}, {0.1, 0.0}}, {}, kZc, 1.0, 0.1);
    CHECK(d.dv_pcc_f.d == Approx(-1.0));
    CHECK(d.dv_pcc_f.q == Approx(0.0).scale(1.0));
}

TEST_CASE("equilibrium at u = Z_c i") {
    for (double id : {-1.2, 0.3, 1.0}) {
        for (double iq : {-0.5, 0.0, 0.8}) {
            const DqVector i{id, iq};
            const auto d = converter_current_derivative({i, {}}, impedance_apply(kZc, 1.0, i), kZc, 1.0, 0.1);
            CHECK(d.i.amplitude() < 1e-12);
        }
    }
}

TEST_CASE("deviation filter decays at 1/tau_v") {
    const double tau = 0.1, dt = 1e-4;
    DqVector dv{0.3, -0.4};
    double prev = dv.amplitude();
    for (int k = 0; k < 1000; ++k) {
        dv = rk4_step(dv, 0.0, dt, [&](double, const DqVector& x) {
            return converter_current_derivative({{}, x}, {}, kZc, 1.0, tau).dv_pcc_f;
        });
        CHECK(dv.amplitude() < prev);
        prev = dv.amplitude();
    }
    CHECK(prev == Approx(0.5 * std::exp(-0.1 / tau)).epsilon(1e-9));
}

TEST_CASE("sm_grid_derivative") {
    CHECK(sm_grid_derivative({1.0, 0.0, 0.7}, 0.7, 3.0).d_omega == 0.0);
    CHECK(sm_grid_derivative({1.0, 0.0, 0.9}, 0.0, 3.0).d_omega == Approx(0.15));
    CHECK(sm_grid_derivative({1.0, 0.0, 0.9}, 0.3, 3.0).d_omega == Approx(0.1));
    CHECK(sm_grid_derivative({1.0, 0.0, 0.9}, 0.9, 3.0).d_theta == Approx(kOmegaNominal));
}

TEST_CASE("rk4 exponential decay") {
    double x = 1.0;
    const double tau = 0.1, dt = 1e-5;
    for (int k = 0; k < 10000; ++k) x = rk4_step(x, k * dt, dt, [&](double, double y) { return -y / tau; });
    CHECK(std::abs(x - std::exp(-1.0)) < 1e-6);

    double c = 0.42;
    for (int k = 0; k < 100; ++k) c = rk4_step(c, 0.0, 1e-3, [](double, double) { return 0.0; });
    CHECK(c == 0.42);
}

TEST_CASE("rk4 on the RL branch") {
    const DqVector i0{0.2, -0.1}, v{1.0, 0.3};
    const double t_end = 0.05;
    const auto exact = rl_exact(i0, v, t_end);
    CHECK((rl_rk4(i0, v, t_end, 1e-5) - exact).amplitude() < 1e-8);

    const double e1 = (rl_rk4(i0, v, t_end, 2e-4) - exact).amplitude();
    const double e2 = (rl_rk4(i0, v, t_end, 1e-4) - exact).amplitude();
    const double order = std::log2(e1 / e2);
    MESSAGE("observed RK4 order " << order);
    CHECK(order >= 3.9);
}

TEST_CASE("gfl steady states") {
    const Params p;
    const Impedance branch{p.network.r_gfl, p.network.l_gfl};
    const DqVector v_pcc{1.0, 0.0};
    const double dt = 2e-4;

    SUBCASE("zero command draws no current") {
        GflGridState g;
        g.i_r_gfl = 0.0;
        g.i_gfl = {};
        for (int k = 0; k < 10000; ++k) gfl_grid_step(g, v_pcc, branch, p.grid, p.gfm, p.clc, dt);
        CHECK(g.i_gfl.amplitude() < 1e-3);
        CHECK(g.v_dc == Approx(1.0).epsilon(1e-3));
    }

    SUBCASE("i_r = -0.9 absorbs 0.9 on the d axis") {
        GflGridState g;
        g.i_r_gfl = -0.9;
        for (int k = 0; k < 10000; ++k) gfl_grid_step(g, v_pcc, branch, p.grid, p.gfm, p.clc, dt);
        const auto i = change_frame(g.i_gfl, 0.0, g.pll.theta);
        CHECK(i.d == Approx(0.9).epsilon(0.02));
        CHECK(std::abs(i.q) < 0.02);
        CHECK(g.v_dc == Approx(1.0).epsilon(1e-3));

        SUBCASE("fault with i_r reset keeps the DC link within 10%") {
            g.i_r_gfl = 0.0;
            double lo = g.v_dc, hi = g.v_dc;
            for (int k = 0; k < 1500; ++k) {
                gfl_grid_step(g, {0.05, 0.0}, branch, p.grid, p.gfm, p.clc, dt);
                lo = std::min(lo, g.v_dc);
                hi = std::max(hi, g.v_dc);
            }
            CHECK(lo >= 0.9);
            CHECK(hi <= 1.1);
        }
    }
}

TEST_CASE("fault divider") {
    Params p;
    p.network.l_sm = p.network.l_g - p.network.l_f;   // source behind l_g
    p.network.l_c = 1e4;                               // converter branch out of the way
    p.grid.h_sm = 1e9;
    Network net(GridKind::high_inertia, p);
    NetworkInputs in;
    in.fault = FaultMode::on;
    in.p_m = 0.0;
    const double dt = 1e-5;
    double t = 0.0;
    for (int k = 0; k < 80000; ++k, t += dt) net.step(t, dt, in);
    double lo = 1e9, hi = 0.0;
    for (int k = 0; k < 2000; ++k, t += dt) {
        net.step(t, dt, in);
        const double a = net.pcc_voltage(t + dt, net.state(), in).amplitude();
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    const double expected = p.network.l_l / (p.network.l_l + p.network.l_g);
    MESSAGE("PCC amplitude under fault " << lo << " .. " << hi << ", divider " << expected);
    CHECK(lo == Approx(expected).epsilon(0.1));
    CHECK(hi == Approx(expected).epsilon(0.1));
}

TEST_CASE("fault clearing tapers the fault current to zero") {
    const Params p;
    Network net(GridKind::high_inertia, p);
    NetworkState s;
    NetworkInputs in;
    in.fault = FaultMode::clearing;
    in.t_clear_start = 1.0;
    in.i_f_at_clear = {3.0, -1.0};
    CHECK(net.fault_current(1.0, s, in) == DqVector{3.0, -1.0});
    CHECK(net.fault_current(1.0 + p.network.t_clear, s, in).amplitude() < 1e-12);
    const double mid = net.fault_current(1.0 + 0.5 * p.network.t_clear, s, in).amplitude();
    CHECK(mid == Approx(0.5 * std::hypot(3.0, 1.0)));
    in.fault = FaultMode::off;
    CHECK(net.fault_current(1.0, s, in) == DqVector{});
}

TEST_CASE("network at rest is finite and steps deterministically") {
    const Params p;
    for (auto kind : {GridKind::high_inertia, GridKind::low_inertia}) {
        Network a(kind, p), b(kind, p);
        NetworkInputs in;
        in.v_c = {1.0, 0.1};
        for (int k = 0; k < 1000; ++k) {
            a.step(k * 1e-5, 1e-5, in);
            b.step(k * 1e-5, 1e-5, in);
        }
        CHECK(a.state().is_finite());
        CHECK(a.state().i == b.state().i);
        CHECK(a.state().v_cf == b.state().v_cf);
    }
}
