#include <doctest.h>

#include <cmath>
#include <random>

#include "gfmsf/gfm.hpp"
#include "gfmsf/plant.hpp"

using namespace gfmsf;
using doctest::Approx;

namespace {
const Impedance kZc{0.02, 0.16};
const GfmParams kG;
}

TEST_CASE("pll locked") {
    PllState s;
    for (int k = 0; k < 5000; ++k) s = gfm::pll_step(s, {1.0, 0.0}, kG.k_p_pll, kG.t_i_pll, kG.tau_d, 2e-4);
    CHECK(s.omega_filtered == Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.theta) < 1e-12);
}

TEST_CASE("pll phase jump") {
    PllState s;
    const DqVector v = rotate({1.0, 0.0}, 0.1);
    double peak = 0.0;
    for (int k = 0; k < 25000; ++k) {
        s = gfm::pll_step(s, v, kG.k_p_pll, kG.t_i_pll, kG.tau_d, 2e-4);
        peak = std::max(peak, std::abs(s.omega_filtered - 1.0));
    }
    CHECK(peak > 1e-4);
    CHECK(s.omega_filtered == Approx(1.0).epsilon(1e-6));
    CHECK(wrap_angle(s.theta) == Approx(0.1).epsilon(1e-4));
}

TEST_CASE("pll tracks a frequency step") {
    PllState s;
    const double dt = 2e-4;
    for (int k = 0; k < 50000; ++k) {
        const double t = (k + 1) * dt;
        const DqVector v = rotate({1.0, 0.0}, kOmegaNominal * 0.01 * t);
        s = gfm::pll_step(s, v, kG.k_p_pll, kG.t_i_pll, kG.tau_d, dt);
    }
    CHECK(s.omega_filtered == Approx(1.01).epsilon(1e-5));
}

TEST_CASE("inverse frequency droop") {
    CHECK(gfm::inverse_frequency_droop(1.0, 0.3, 1.0, 0.02) == Approx(0.3));
    CHECK(gfm::inverse_frequency_droop(1.02, 0.0, 1.0, 0.02) == Approx(-1.0));
    CHECK(gfm::inverse_frequency_droop(0.99, 0.0, 1.0, 0.02) == Approx(0.5));
}

TEST_CASE("vsm") {
    CHECK(gfm::vsm_frequency_derivative(1.0, 0.4, 0.4, 1.0, 3.0, 50.0) == 0.0);
    CHECK(gfm::vsm_frequency_derivative(1.0, 0.6, 0.0, 1.0, 3.0, 50.0) == Approx(0.1));
    CHECK(gfm::vsm_frequency_derivative(1.01, 0.2, 0.2, 1.0, 3.0, 50.0) == Approx(-0.5 / 6.0));

    VsmState s;
    for (int k = 0; k < 100; ++k) s = gfm::vsm_step(s, 0.3, 0.3, 1.0, 3.0, 50.0, 2e-4);
    CHECK(s.omega_c == 1.0);
}

TEST_CASE("edpc") {
    EdpcState s;
    s = gfm::edpc_step(s, 0.7, 0.2, 0.2, kG.k_p_edpc, kG.t_i_edpc, 2e-4);
    CHECK(s.theta_c == Approx(0.7));

    s = {};
    const double dt = 1e-4;
    for (int k = 0; k < 10000; ++k) s = gfm::edpc_step(s, 0.0, 0.1, 0.0, kG.k_p_edpc, kG.t_i_edpc, dt);
    CHECK(s.theta_r == Approx(0.375 * 1.0 + 0.045).epsilon(1e-3));

    s = {};
    for (int k = 0; k < 100000; ++k) s = gfm::edpc_step(s, 0.0, 1.0, 0.0, kG.k_p_edpc, kG.t_i_edpc, dt);
    CHECK(std::abs(s.integrator) <= std::numbers::pi + 1e-12);
}

TEST_CASE("voltage droop") {
    CHECK(gfm::voltage_droop(0.0, 1.0, 0.0, 0.05) == Approx(1.0));
    CHECK(gfm::voltage_droop(0.2, 1.0, 0.0, 0.05) == Approx(0.99));
    CHECK(gfm::voltage_droop(-0.2, 1.0, 0.0, 0.05) == Approx(1.01));
}

TEST_CASE("limit_current_reference") {
    const DqVector in{0.6, 0.8};
    CHECK(gfm::limit_current_reference(in, 1.18) == in);
    auto r = gfm::limit_current_reference({1.5, 0.0}, 1.18);
    CHECK(r.d == Approx(1.18));
    CHECK(r.q == 0.0);
    r = gfm::limit_current_reference({1.18, 0.5}, 1.18);
    CHECK(r.d == Approx(1.18));
    CHECK(std::abs(r.q) < 1e-12);
    r = gfm::limit_current_reference({0.5, -2.0}, 1.18);
    CHECK(r.d == Approx(0.5));
    CHECK(r.q == Approx(-std::sqrt(1.18 * 1.18 - 0.25)));
}

TEST_CASE("limit_current_reference never exceeds i_th") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int k = 0; k < 100000; ++k) {
        const double i_th = 0.1 + std::abs(u(rng));
        const auto r = gfm::limit_current_reference({u(rng), u(rng)}, i_th);
        CHECK(r.amplitude() <= i_th * (1.0 + 1e-15));
    }
}

TEST_CASE("limited voltage reference and reference current") {
    const DqVector vf{1.0, 0.0};
    CHECK(gfm::limited_voltage_reference({}, vf, kZc, 1.0) == vf);
    auto v = gfm::limited_voltage_reference({0.9, 0.0}, vf, kZc, 1.0);
    CHECK(v.d == Approx(1.018));
    CHECK(v.q == Approx(0.144));
    v = gfm::limited_voltage_reference({0.0, 1.0}, vf, kZc, 1.0);
    CHECK(v.d == Approx(0.84));
    CHECK(v.q == Approx(0.02));

    CHECK(gfm::compute_reference_current(vf, vf, kZc, 1.0) == DqVector{});
    auto i = gfm::compute_reference_current({1.018, 0.144}, vf, kZc, 1.0);
    CHECK(i.d == Approx(0.9));
    CHECK(std::abs(i.q) < 1e-12);
    i = gfm::compute_reference_current({0.0, 0.16}, {}, {0.0, 0.16}, 1.0);
    CHECK(i.d == Approx(1.0));
    CHECK(std::abs(i.q) < 1e-12);
}

TEST_CASE("reference round trip on unclamped inputs") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const DqVector i{0.8 * u(rng), 0.8 * u(rng)};
        const DqVector vf{1.0 + 0.2 * u(rng), 0.2 * u(rng)};
        const double w = 1.0 + 0.05 * u(rng);
        const auto back = gfm::compute_reference_current(gfm::limited_voltage_reference(i, vf, kZc, w), vf, kZc, w);
        CHECK((back - i).amplitude() <= 1e-12);
    }
}

TEST_CASE("voltage_reference_limitation") {
    const DqVector vf{1.0, 0.0};
    auto r = gfm::voltage_reference_limitation({1.018, 0.144}, vf, kZc, 1.0, 1.18);
    CHECK_FALSE(r.limited);
    CHECK((r.v_cn_lim - r.v_cn).amplitude() < 1e-12);

    r = gfm::voltage_reference_limitation({1.0, 0.5}, {0.05, 0.0}, kZc, 1.0, 1.18);
    CHECK(r.limited);
    CHECK(r.i_r.amplitude() <= 1.18 + 1e-12);
    const auto i = gfm::compute_reference_current(r.v_cn_lim, {0.05, 0.0}, kZc, 1.0);
    CHECK((i - r.i_r).amplitude() < 1e-12);
}
