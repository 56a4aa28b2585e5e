#pragma once

// Reference-frame helpers and per-unit conventions shared by every module.
//
// All electrical quantities are per-unit. Time is in seconds; the nominal
// angular frequency kOmegaNominal converts per-unit frequency to rad/s.
// Positive current flows from the converter terminal towards the PCC.

#include <array>
#include <cmath>
#include <numbers>

namespace gfmsf {

inline constexpr double kNominalFrequencyHz = 60.0;
inline constexpr double kOmegaNominal = 2.0 * std::numbers::pi * kNominalFrequencyHz;

struct DqVector {
    double d = 0.0;
    double q = 0.0;

    double amplitude() const { return std::hypot(d, q); }
    double squared_norm() const { return d * d + q * q; }
    bool is_finite() const { return std::isfinite(d) && std::isfinite(q); }

    DqVector& operator+=(const DqVector& o) { d += o.d; q += o.q; return *this; }
    DqVector& operator-=(const DqVector& o) { d -= o.d; q -= o.q; return *this; }
    DqVector& operator*=(double s) { d *= s; q *= s; return *this; }

    friend DqVector operator+(DqVector a, const DqVector& b) { return a += b; }
    friend DqVector operator-(DqVector a, const DqVector& b) { return a -= b; }
    friend DqVector operator-(const DqVector& a) { return {-a.d, -a.q}; }
    friend DqVector operator*(double s, DqVector a) { return a *= s; }
    friend DqVector operator*(DqVector a, double s) { return a *= s; }
    friend bool operator==(const DqVector&, const DqVector&) = default;
};

inline double dot(const DqVector& a, const DqVector& b) { return a.d * b.d + a.q * b.q; }

// J = [[0, -1], [1, 0]]
inline DqVector rotate_quarter(const DqVector& v) { return {-v.q, v.d}; }

// Rotates v by +angle.
inline DqVector rotate(const DqVector& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.d - s * v.q, s * v.d + c * v.q};
}

// Re-expresses a vector given in a frame at angle `from` in a frame at angle `to`.
inline DqVector change_frame(const DqVector& v, double from, double to) {
    return rotate(v, from - to);
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

struct Dq0Vector {
    double d = 0.0;
    double q = 0.0;
    double zero = 0.0;

    bool is_finite() const {
        return std::isfinite(d) && std::isfinite(q) && std::isfinite(zero);
    }
};

using AbcVector = std::array<double, 3>;

/// Series r + jwl element. r >= 0, l > 0.
struct Impedance {
    double r = 0.0;
    double l = 0.0;
};

/// (r I + omega l J) i
DqVector impedance_apply(const Impedance& z, double omega, const DqVector& i);

/// Inverse of impedance_apply. Throws Error(singular_impedance) when r = l = 0.
DqVector impedance_solve(const Impedance& z, double omega, const DqVector& v);

/// Amplitude-invariant inverse Park transform (no 2/3 factor on this side).
AbcVector park_inverse(double theta, const Dq0Vector& x);

/// Amplitude-invariant Park transform; park_forward(t, park_inverse(t, x)) == x.
Dq0Vector park_forward(double theta, const AbcVector& abc);

/// Largest absolute phase value of the inverse transform.
double worst_phase(double theta, const Dq0Vector& x);

/// Active power p = v.i
inline double active_power(const DqVector& v, const DqVector& i) { return dot(v, i); }
/// Reactive power q = v_q i_d - v_d i_q
inline double reactive_power(const DqVector& v, const DqVector& i) {
    return v.q * i.d - v.d * i.q;
}

}  // namespace gfmsf
