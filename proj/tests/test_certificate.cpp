#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "gfmsf/error.hpp"
#include "gfmsf/sfilter.hpp"

using namespace gfmsf;
using doctest::Approx;

namespace {

const SafetyCertificates kCerts = SafetyCertificates::builtin();

CertPoint point(DqVector i, DqVector dv, DqVector i_r, double i_0) {
    return {i.d, i.q, dv.d, dv.q, i_r.d, i_r.q, i_0};
}

CertificateValue central_difference(const PolynomialCertificate& c, CertPoint p, double h) {
    CertificateValue out;
    out.value = c.value(p);
    for (int k = 0; k < 4; ++k) {
        CertPoint a = p, b = p;
        a[k] += h;
        b[k] -= h;
        out.grad_x[k] = (c.value(a) - c.value(b)) / (2 * h);
    }
    return out;
}

}  // namespace

TEST_CASE("barrier anchors") {
    CHECK(kCerts.cbf.value(CertPoint{}) == -1.0);
    const auto b = kCerts.cbf.evaluate(point({1.0, 0.0}, {}, {}, 0.0));
    CHECK(b.value == Approx(-0.37));
    CHECK(b.grad_x[0] == Approx(1.26));
    CHECK(b.grad_x[1] == 0.0);
    CHECK(b.grad_x[2] == 0.0);
    CHECK(b.grad_x[3] == 0.0);
}

TEST_CASE("lyapunov anchor") {
    const auto p = point({0.9, 0.0}, {}, {0.9, 0.0}, 0.0);
    CHECK(kCerts.clf.value(p) == Approx((4.70 - 9.15 + 5.15) * 0.81 - 1.0));
    CHECK(kCerts.clf.value(p) == Approx(-0.433));
    CHECK(kCerts.cbf.value(p) == Approx(0.63 * 0.81 - 1.0));
}

TEST_CASE("evaluate agrees with value") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k = 0; k < 1000; ++k) {
        const CertPoint p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), std::abs(u(rng))};
        CHECK(kCerts.clf.evaluate(p).value == Approx(kCerts.clf.value(p)).epsilon(1e-14).scale(1.0));
        CHECK(kCerts.cbf.evaluate(p).value == Approx(kCerts.cbf.value(p)).epsilon(1e-14).scale(1.0));
    }
}

TEST_CASE("gradients match central differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
        const CertPoint p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 0.3 + 0.3 * u(rng) / 1.3};
        for (const auto* c : {&kCerts.cbf, &kCerts.clf}) {
            const auto a = c->evaluate(p);
            const auto fd = central_difference(*c, p, 1e-5);
            for (int j = 0; j < 4; ++j) {
                const double scale = std::max(1.0, std::abs(a.grad_x[j]));
                CHECK(std::abs(a.grad_x[j] - fd.grad_x[j]) <= 1e-6 * scale);
                ++checked;
            }
        }
    }
    CHECK(checked == 80000);
}

TEST_CASE("shipped files equal the compiled tables") {
    const auto cbf = PolynomialCertificate::load(GFMSF_DATA_DIR "/cbf.cert");
    const auto clf = PolynomialCertificate::load(GFMSF_DATA_DIR "/clf.cert");
    CHECK(cbf.serialize() == kCerts.cbf.serialize());
    CHECK(clf.serialize() == kCerts.clf.serialize());
    CHECK(PolynomialCertificate::parse(builtin_cbf_table()).serialize() == cbf.serialize());
    CHECK(PolynomialCertificate::parse(builtin_clf_table()).serialize() == clf.serialize());
}

TEST_CASE("serialize round trip") {
    const auto again = PolynomialCertificate::parse(kCerts.clf.serialize());
    CHECK(again.serialize() == kCerts.clf.serialize());
    CHECK(again.terms().size() == kCerts.clf.terms().size());
}

TEST_CASE("parser errors") {
    auto code = [](std::string_view text) {
        try {
            PolynomialCertificate::parse(text, "t");
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::invalid_argument;
    };
    CHECK(code("2 0 0 0 0 0 0 1\n2 0 0 0 0 0 0 3\n") == ErrorCode::certificate_error);
    CHECK(code("2 0 0 0 0 0 1\n") == ErrorCode::certificate_error);
    CHECK(code("2 0 0 0 0 0 0 x\n") == ErrorCode::certificate_error);
    CHECK(code("2 0 0 0 0 0 0 1 9\n") == ErrorCode::certificate_error);
    CHECK(code("-1 0 0 0 0 0 0 1\n") == ErrorCode::certificate_error);
    CHECK_NOTHROW(PolynomialCertificate::parse("# only a comment\n\n0 0 0 0 0 0 0 -1  # constant\n"));
    CHECK_THROWS_AS(PolynomialCertificate::load("/nonexistent/cert"), Error);
}

TEST_CASE("cancelling monomial is stored once with zero net coefficient") {
    bool found = false;
    for (const auto& m : kCerts.clf.terms()) {
        if (m.exponents == std::array<std::uint8_t, kCertVars>{0, 1, 0, 0, 1, 0, 0}) {
            found = true;
            CHECK(m.coefficient == 0.0);
        }
    }
    CHECK(found);
}
