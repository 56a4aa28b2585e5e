#include "gfmsf/frames.hpp"

#include <algorithm>

#include "gfmsf/error.hpp"

namespace gfmsf {

namespace {
constexpr double kThird = 2.0 * std::numbers::pi / 3.0;
}

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::singular_impedance: return "singular_impedance";
        case ErrorCode::degenerate_cbf: return "degenerate_cbf";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::invalid_config: return "invalid_config";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::numeric_blowup: return "numeric_blowup";
        case ErrorCode::certificate_error: return "certificate_error";
    }
    return "unknown";
}

DqVector impedance_apply(const Impedance& z, double omega, const DqVector& i) {
    const double x = omega * z.l;
    return {z.r * i.d - x * i.q, x * i.d + z.r * i.q};
}

DqVector impedance_solve(const Impedance& z, double omega, const DqVector& v) {
    const double x = omega * z.l;
    const double det = z.r * z.r + x * x;
    if (det == 0.0) {
        throw Error(ErrorCode::singular_impedance, "impedance with r = 0 and omega*l = 0 is not invertible");
    }
    // (r I + x J)^-1 = (r I - x J) / (r^2 + x^2)
    return {(z.r * v.d + x * v.q) / det, (-x * v.d + z.r * v.q) / det};
}

AbcVector park_inverse(double theta, const Dq0Vector& x) {
    AbcVector out{};
    const double shifts[3] = {0.0, -kThird, kThird};
    for (int k = 0; k < 3; ++k) {
        const double a = theta + shifts[k];
        out[k] = std::cos(a) * x.d - std::sin(a) * x.q + x.zero;
    }
    return out;
}

Dq0Vector park_forward(double theta, const AbcVector& abc) {
    const double shifts[3] = {0.0, -kThird, kThird};
    Dq0Vector out;
    for (int k = 0; k < 3; ++k) {
        const double a = theta + shifts[k];
        out.d += 2.0 / 3.0 * std::cos(a) * abc[k];
        out.q -= 2.0 / 3.0 * std::sin(a) * abc[k];
        out.zero += abc[k] / 3.0;
    }
    return out;
}

double worst_phase(double theta, const Dq0Vector& x) {
    const AbcVector abc = park_inverse(theta, x);
    return std::max({std::abs(abc[0]), std::abs(abc[1]), std::abs(abc[2])});
}

}  // namespace gfmsf
