#include <fstream>
#include <set>
#include <sstream>

#include "gfmsf/error.hpp"
#include "gfmsf/sfilter.hpp"

namespace gfmsf {

namespace {

// Monomial order: i_d i_q dv_d dv_q i_r_d i_r_q i_0
constexpr std::string_view kCbfTable = R"(# B(x, z)
2 0 0 0 0 0 0  0.63
0 2 0 0 0 0 0  0.63
0 0 0 0 0 0 2 -0.63
0 0 0 0 0 0 1  1.59
0 0 0 0 0 0 0 -1
)";

// The published table lists -0.02 i_q i_r_d and +0.02 i_q i_r_d; the pair is
// kept as its net coefficient because monomials must be unique.
constexpr std::string_view kClfTable = R"(# V(x, z)
2 0 0 0 0 0 0    4.70
1 0 1 0 0 0 0  -13.98
1 0 0 1 0 0 0  -30.29
1 0 0 0 1 0 0   -9.15
0 1 0 0 1 0 0    0.00
0 2 0 0 0 0 0    4.70
0 1 1 0 0 0 0   30.29
0 1 0 1 0 0 0   13.98
0 1 0 0 0 1 0   -9.15
0 0 2 0 0 0 0  115.48
0 0 1 0 1 0 0   15.73
0 0 1 0 0 1 0  -33.67
0 0 0 2 0 0 0  115.48
0 0 0 1 1 0 0   33.67
0 0 0 1 0 1 0   15.73
0 0 0 0 2 0 0    5.15
0 0 0 0 0 2 0    5.15
0 0 0 0 0 0 2   -0.63
0 0 0 0 0 0 1    1.59
0 0 0 0 0 0 0   -1
)";

double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

}  // namespace

std::string_view builtin_cbf_table() { return kCbfTable; }
std::string_view builtin_clf_table() { return kClfTable; }

CertPoint to_cert_point(const NonStationaryState& x, const StationaryState& z) {
    return {x.i.d, x.i.q, x.dv_pcc_f.d, x.dv_pcc_f.q, z.i_r.d, z.i_r.q, z.i_0};
}

PolynomialCertificate::PolynomialCertificate(std::vector<Monomial> terms) : terms_(std::move(terms)) {
    std::set<std::array<std::uint8_t, kCertVars>> seen;
    for (const auto& m : terms_) {
        if (!seen.insert(m.exponents).second) {
            throw Error(ErrorCode::certificate_error, "duplicate monomial in certificate");
        }
    }
}

PolynomialCertificate PolynomialCertificate::parse(std::string_view text, std::string_view source) {
    std::vector<Monomial> terms;
    std::set<std::array<std::uint8_t, kCertVars>> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        ls.clear();
        ls.seekg(0);

        auto fail = [&](const std::string& why) {
            return Error(ErrorCode::certificate_error,
                         std::string(source) + ":" + std::to_string(line_no) + ": " + why);
        };
        Monomial m;
        for (int k = 0; k < kCertVars; ++k) {
            int e = -1;
            if (!(ls >> e) || e < 0 || e > 16) throw fail("expected 7 non-negative exponents");
            m.exponents[k] = static_cast<std::uint8_t>(e);
        }
        if (!(ls >> m.coefficient)) throw fail("missing coefficient");
        std::string extra;
        if (ls >> extra) throw fail("trailing token '" + extra + "'");
        if (!seen.insert(m.exponents).second) throw fail("duplicate monomial");
        terms.push_back(m);
    }
    return PolynomialCertificate(std::move(terms));
}

PolynomialCertificate PolynomialCertificate::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::io_error, "cannot open certificate file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str(), path);
}

std::string PolynomialCertificate::serialize() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& m : terms_) {
        for (auto e : m.exponents) out << static_cast<int>(e) << ' ';
        out << m.coefficient << '\n';
    }
    return out.str();
}

double PolynomialCertificate::value(const CertPoint& p) const {
    double sum = 0.0;
    for (const auto& m : terms_) {
        double t = m.coefficient;
        for (int k = 0; k < kCertVars; ++k) t *= ipow(p[k], m.exponents[k]);
        sum += t;
    }
    return sum;
}

CertificateValue PolynomialCertificate::evaluate(const CertPoint& p) const {
    CertificateValue out;
    for (const auto& m : terms_) {
        double t = m.coefficient;
        for (int k = 0; k < kCertVars; ++k) t *= ipow(p[k], m.exponents[k]);
        out.value += t;
        for (int j = 0; j < 4; ++j) {
            const int e = m.exponents[j];
            if (e == 0) continue;
            double g = m.coefficient * e * ipow(p[j], e - 1);
            for (int k = 0; k < kCertVars; ++k) {
                if (k != j) g *= ipow(p[k], m.exponents[k]);
            }
            out.grad_x[j] += g;
        }
    }
    return out;
}

SafetyCertificates SafetyCertificates::builtin() {
    return {PolynomialCertificate::parse(kCbfTable, "builtin:cbf"),
            PolynomialCertificate::parse(kClfTable, "builtin:clf")};
}

}  // namespace gfmsf
