#pragma once

// CBF/CLF safety filter for the converter current.
//
// The internal model is  x' = f(x) + G u  with x = [i, dv_pcc_f], z = [i_r, i_0],
// u = v_c - v_pcc and
//   f(x) = [-(omega_n / l_c) Z_c i ; -dv_pcc_f / tau_v],  G = [(omega_n / l_c) I ; 0].
// Each control step solves
//   min ||u_n - u||^2  s.t.  dB/dx (f + G u) <= -gamma_B B,  dV/dx (f + G u) <= -gamma_V V
// in closed form.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gfmsf/frames.hpp"
#include "gfmsf/params.hpp"
#include "gfmsf/plant.hpp"

namespace gfmsf {

/// Variable order of certificate monomials.
enum class CertVar : int { i_d = 0, i_q, dv_d, dv_q, i_r_d, i_r_q, i_0 };
inline constexpr int kCertVars = 7;

using CertPoint = std::array<double, kCertVars>;

CertPoint to_cert_point(const NonStationaryState& x, const StationaryState& z);

struct Monomial {
    double coefficient = 0.0;
    std::array<std::uint8_t, kCertVars> exponents{};
};

struct CertificateValue {
    double value = 0.0;
    std::array<double, 4> grad_x{};   // d/d(i_d, i_q, dv_d, dv_q)
};

class PolynomialCertificate {
public:
    PolynomialCertificate() = default;
    explicit PolynomialCertificate(std::vector<Monomial> terms);

    /// Parses "e1 e2 e3 e4 e5 e6 e7 coefficient" lines; '#' starts a comment.
    /// Throws Error(certificate_error) on malformed lines or duplicate monomials.
    static PolynomialCertificate parse(std::string_view text, std::string_view source = "<text>");
    static PolynomialCertificate load(const std::string& path);

    const std::vector<Monomial>& terms() const { return terms_; }
    std::string serialize() const;

    double value(const CertPoint& p) const;
    CertificateValue evaluate(const CertPoint& p) const;
    CertificateValue evaluate(const NonStationaryState& x, const StationaryState& z) const {
        return evaluate(to_cert_point(x, z));
    }

private:
    std::vector<Monomial> terms_;
};

struct SafetyCertificates {
    PolynomialCertificate cbf;
    PolynomialCertificate clf;

    /// B(x, z) and V(x, z) compiled into the library (same tables as data/).
    static SafetyCertificates builtin();
};

std::string_view builtin_cbf_table();
std::string_view builtin_clf_table();

enum class ActiveSet { none, cbf, clf, both, cbf_only_fallback };
const char* to_string(ActiveSet a);

/// a^T u <= b
struct QpRow {
    DqVector a;
    double b = 0.0;
};

struct QpResult {
    DqVector u;
    ActiveSet active_set = ActiveSet::none;
    double objective = 0.0;
};

namespace sfilter {

/// Exact minimiser of ||u - u_n||^2 over at most two halfplanes by active-set
/// enumeration. A jointly infeasible pair drops the CLF row. Throws
/// Error(degenerate_cbf) when the CBF row reads 0 <= b with b < 0.
QpResult qp_solve(const DqVector& u_n, const QpRow& cbf, const std::optional<QpRow>& clf);

/// u_n = Z_c i_r + dv_pcc_f
DqVector nominal_control(const NonStationaryState& x, const StationaryState& z, const Impedance& z_c,
                         double omega);

/// u_n' = 0.2 (i_r - i) + u_n
DqVector refined_nominal_control(const NonStationaryState& x, const StationaryState& z,
                                 const Impedance& z_c, double omega);

/// w = i^T i - (i_max - i_0)^2; the allowable set is w <= 0.
double allowable_margin(const NonStationaryState& x, const StationaryState& z, double i_max);

/// Margin with the sign as printed in the source derivation (negated).
double allowable_margin_printed(const NonStationaryState& x, const StationaryState& z, double i_max);

struct FilterModel {
    Impedance z_c{0.02, 0.16};
    double tau_v = 0.1;
    FilterParams params;
    /// The CLF row is kept only while the joint solution stays inside
    /// ||v_c||^2 <= m_max; otherwise the step falls back to the CBF row.
    double m_max = 1.44;
    bool gate_clf_on_input_set = true;
};

/// Row  grad^T G u <= -gamma * value - grad^T f
QpRow constraint_row(const CertificateValue& c, const NonStationaryState& x, const FilterModel& m,
                     double omega, double gamma);

/// grad^T (f + G u)
double lie_derivative(const CertificateValue& c, const NonStationaryState& x, const DqVector& u,
                      const FilterModel& m, double omega);

struct FilterOutput {
    DqVector v_c;
    DqVector u;
    DqVector u_n;
    DqVector du;
    double b = 0.0;
    double v = 0.0;
    QpResult qp;
};

FilterOutput filter_step(const NonStationaryState& x, const StationaryState& z,
                         const SafetyCertificates& certs, const FilterModel& model, double omega,
                         const DqVector& v_pcc, bool use_clf);

}  // namespace sfilter
}  // namespace gfmsf
