#include "gfmsf/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>

#include <json.hpp>
#include <limits>

namespace gfmsf {

namespace {

double sq(double x) { return x * x; }

NonStationaryState x_of(const CertPoint& p) { return {{p[0], p[1]}, {p[2], p[3]}}; }
StationaryState z_of(const CertPoint& p) { return {{p[4], p[5]}, p[6]}; }

CertPoint with_x(CertPoint p, const std::array<double, 4>& x) {
    for (int k = 0; k < 4; ++k) p[k] = x[k];
    return p;
}

const char* kVarNames[kCertVars] = {"i_d", "i_q", "dv_d", "dv_q", "i_r_d", "i_r_q", "i_0"};

struct Row {
    DqVector a;      // coefficient of u
    double lie_f;    // grad^T f
    double value;
};

Row row_at(const PolynomialCertificate& c, const CertPoint& p, const sfilter::FilterModel& m) {
    const CertificateValue cv = c.evaluate(p);
    const NonStationaryState x = x_of(p);
    const NonStationaryState f = plant::converter_current_derivative(x, {}, m.z_c, 1.0, m.tau_v);
    const double g = kOmegaNominal / m.z_c.l;
    return {{g * cv.grad_x[0], g * cv.grad_x[1]},
            cv.grad_x[0] * f.i.d + cv.grad_x[1] * f.i.q + cv.grad_x[2] * f.dv_pcc_f.d +
                cv.grad_x[3] * f.dv_pcc_f.q,
            cv.value};
}

double dissipation(double v, const FilterParams& fp) { return fp.d_r * (v + fp.epsilon); }

// Point on {B = 0} along the current direction of p, holding everything else.
std::optional<CertPoint> cbf_boundary_point(const PolynomialCertificate& b, const CertPoint& p,
                                            const VerifyOptions& o) {
    const double norm = std::hypot(p[0], p[1]);
    if (norm < 1e-9) return std::nullopt;
    const double ud = p[0] / norm;
    const double uq = p[1] / norm;
    auto at = [&](double s) {
        CertPoint q = p;
        q[0] = s * ud;
        q[1] = s * uq;
        return q;
    };
    const double hi = o.region.negated_region ? 2.0 * o.region.i_max : o.region.i_max - p[6];
    if (hi <= 0.0) return std::nullopt;
    auto g = [&](double s) { return b.value(at(s)); };
    if (g(0.0) > 0.0 || g(hi) <= 0.0) return std::nullopt;
    return at(verifier::bisect(g, 0.0, hi));
}

std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> b, bool& ok) {
    ok = true;
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        if (std::abs(a[piv][c]) < 1e-14) {
            ok = false;
            return {};
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 4; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::array<double, 4> x{};
    for (int r = 3; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 4; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

// Newton iterations on grad_x V = 0 with a finite-difference Hessian.
std::optional<CertPoint> clf_minimiser(const PolynomialCertificate& v, CertPoint p) {
    for (int k = 0; k < 4; ++k) p[k] = 0.0;
    constexpr double h = 1e-3;
    for (int it = 0; it < 4; ++it) {
        const CertificateValue c = v.evaluate(p);
        std::array<std::array<double, 4>, 4> hess{};
        for (int j = 0; j < 4; ++j) {
            CertPoint pp = p, pm = p;
            pp[j] += h;
            pm[j] -= h;
            const auto gp = v.evaluate(pp).grad_x;
            const auto gm = v.evaluate(pm).grad_x;
            for (int r = 0; r < 4; ++r) hess[r][j] = (gp[r] - gm[r]) / (2 * h);
        }
        bool ok = false;
        const auto step = solve4(hess, c.grad_x, ok);
        if (!ok) return std::nullopt;
        double size = 0.0;
        for (int k = 0; k < 4; ++k) {
            p[k] -= step[k];
            size = std::max(size, std::abs(step[k]));
        }
        if (size < 1e-13) break;
    }
    return p;
}

}  // namespace

OperationalRegion OperationalRegion::from(const LimitParams& l, bool negated_region) {
    return {l.i_max, l.dv_max, l.i_r_max, l.i_0_max, negated_region};
}

std::array<double, 4> OperationalRegion::f_op(const CertPoint& p) const {
    const double i0 = p[6];
    std::array<double, 4> f{
        sq(p[0]) + sq(p[1]) - sq(i_max - i0),
        sq(p[2]) + sq(p[3]) - sq(dv_max),
        sq(p[4]) + sq(p[5]) - sq(i_r_max - i0),
        sq(i0 - i_0_max / 2) - sq(i_0_max / 2),
    };
    if (negated_region) {
        for (auto& v : f) v = -v;
    }
    return f;
}

bool OperationalRegion::contains(const CertPoint& p) const {
    for (double v : f_op(p)) {
        if (v > 0.0) return false;
    }
    return true;
}

const char* to_string(Condition c) {
    switch (c) {
        case Condition::cbf_boundary: return "cbf_boundary";
        case Condition::clf_region: return "clf_region";
        case Condition::clf_cbf_joint: return "clf_cbf_joint";
        case Condition::nominal_invariance: return "nominal_invariance";
        case Condition::containment_xn_xs: return "containment_xn_xs";
        case Condition::containment_xs_xa: return "containment_xs_xa";
    }
    return "unknown";
}

std::uint64_t VerificationReport::count(Condition c) const {
    return static_cast<std::uint64_t>(
        std::count_if(violations.begin(), violations.end(), [c](const Violation& v) { return v.condition == c; }));
}

VerificationReport& VerificationReport::merge(const VerificationReport& other) {
    samples_tested += other.samples_tested;
    points_checked += other.points_checked;
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    std::sort(violations.begin(), violations.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.condition, a.point, a.residual) < std::tie(b.condition, b.point, b.residual);
    });
    return *this;
}

std::string VerificationReport::serialize() const {
    nlohmann::ordered_json summary;
    summary["samples"] = samples_tested;
    summary["checked"] = points_checked;
    summary["violations"] = violations.size();
    summary["pass"] = pass();
    std::string out = summary.dump() + "\n";
    for (const auto& v : violations) {
        nlohmann::ordered_json line;
        line["condition"] = to_string(v.condition);
        nlohmann::ordered_json pt;
        for (int k = 0; k < kCertVars; ++k) pt[kVarNames[k]] = v.point[k];
        line["point"] = pt;
        line["residual"] = v.residual;
        out += line.dump() + "\n";
    }
    return out;
}

RegionSampler::RegionSampler(const OperationalRegion& r, std::uint64_t seed, bool relax_current)
    : region_(r), rng_(seed), relax_current_(relax_current) {}

double RegionSampler::uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

CertPoint RegionSampler::next() {
    const double widen = region_.negated_region ? 2.0 : 1.0;
    const double ib = (relax_current_ ? 1.5 : 1.0) * widen * region_.i_max;
    const double vb = widen * region_.dv_max;
    const double rb = widen * region_.i_r_max;
    const double z_lo = region_.negated_region ? -region_.i_0_max : 0.0;
    const double z_hi = region_.negated_region ? 2.0 * region_.i_0_max : region_.i_0_max;
    for (;;) {
        CertPoint p{uniform(-ib, ib), uniform(-ib, ib), uniform(-vb, vb), uniform(-vb, vb),
                    uniform(-rb, rb), uniform(-rb, rb), uniform(z_lo, z_hi)};
        ++drawn_;
        const auto f = region_.f_op(p);
        bool ok = true;
        for (int k = relax_current_ ? 1 : 0; k < 4; ++k) ok = ok && f[k] <= 0.0;
        if (ok) return p;
    }
}

std::vector<CertPoint> sample_region(const OperationalRegion& r, std::size_t n, std::uint64_t seed) {
    RegionSampler s(r, seed);
    std::vector<CertPoint> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(s.next());
    return out;
}

VerifyOptions VerifyOptions::from(const Params& p, bool negated_region) {
    VerifyOptions o;
    o.region = OperationalRegion::from(p.limits, negated_region);
    o.model.z_c = {p.network.r_c, p.network.l_c};
    o.model.tau_v = p.gfm.tau_v;
    o.model.params = p.filter;
    o.m_max = p.limits.m_max;
    return o;
}

namespace verifier {

double ball_min(const DqVector& a, const DqVector& v_n, double m_max) {
    return -dot(a, v_n) - std::sqrt(m_max) * a.amplitude();
}

VerificationReport check_cbf_boundary(const SafetyCertificates& certs, const VerifyOptions& o) {
    VerificationReport rep;
    RegionSampler sampler(o.region, o.seed);
    for (std::size_t k = 0; k < o.samples; ++k) {
        const CertPoint p = sampler.next();
        ++rep.samples_tested;
        const auto q = cbf_boundary_point(certs.cbf, p, o);
        if (!q || !o.region.contains(*q)) continue;
        const Row r = row_at(certs.cbf, *q, o.model);
        if (std::abs(r.value) > o.band) continue;
        ++rep.points_checked;
        const double residual = r.lie_f + ball_min(r.a, o.v_pcc_n, o.m_max);
        if (residual > 0.0) rep.violations.push_back({Condition::cbf_boundary, *q, residual});
    }
    return rep;
}

VerificationReport check_clf_region(const SafetyCertificates& certs, const VerifyOptions& o) {
    VerificationReport rep;
    RegionSampler sampler(o.region, o.seed ^ 0x9e3779b97f4a7c15ULL);
    const double radius = std::sqrt(o.m_max);
    for (std::size_t k = 0; k < o.samples; ++k) {
        const CertPoint p = sampler.next();
        ++rep.samples_tested;

        const Row rb = row_at(certs.cbf, p, o.model);
        const Row rv = row_at(certs.clf, p, o.model);
        if (rb.value <= 0.0 && rv.value >= 0.0) {
            ++rep.points_checked;
            const double residual =
                rv.lie_f + ball_min(rv.a, o.v_pcc_n, o.m_max) + dissipation(rv.value, o.model.params);
            if (residual > 0.0) rep.violations.push_back({Condition::clf_region, p, residual});
        }

        // Where the barrier boundary meets the transitional region one input
        // must serve both conditions.
        const auto q = cbf_boundary_point(certs.cbf, p, o);
        if (!q || !o.region.contains(*q)) continue;
        const Row jb = row_at(certs.cbf, *q, o.model);
        const Row jv = row_at(certs.clf, *q, o.model);
        if (std::abs(jb.value) > o.band || jv.value < 0.0) continue;
        ++rep.points_checked;
        const double d = dissipation(jv.value, o.model.params);
        auto worst = [&](const DqVector& u) {
            return std::max(jb.lie_f + dot(jb.a, u), jv.lie_f + dot(jv.a, u) + d);
        };
        double best = std::numeric_limits<double>::infinity();
        for (const DqVector& a : {jb.a, jv.a}) {
            if (a.amplitude() > 0.0) best = std::min(best, worst(-1.0 * o.v_pcc_n - (radius / a.amplitude()) * a));
        }
        for (std::size_t s = 0; s < o.joint_sweep; ++s) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(o.joint_sweep);
            best = std::min(best, worst(DqVector{radius * std::cos(ang), radius * std::sin(ang)} - o.v_pcc_n));
        }
        if (best > 0.0) rep.violations.push_back({Condition::clf_cbf_joint, *q, best});
    }
    return rep;
}

VerificationReport check_nominal_invariance(const SafetyCertificates& certs, const VerifyOptions& o) {
    VerificationReport rep;
    RegionSampler sampler(o.region, o.seed ^ 0xbf58476d1ce4e5b9ULL);
    for (std::size_t k = 0; k < o.samples; ++k) {
        const CertPoint p = sampler.next();
        ++rep.samples_tested;
        const auto centre = clf_minimiser(certs.clf, p);
        if (!centre || certs.clf.value(*centre) > 0.0) continue;

        std::array<double, 4> dir{};
        double len = 0.0;
        for (int j = 0; j < 4; ++j) {
            dir[j] = p[j] - (*centre)[j];
            len += sq(dir[j]);
        }
        if (len < 1e-18) continue;
        auto at = [&](double s) {
            std::array<double, 4> x{};
            for (int j = 0; j < 4; ++j) x[j] = (*centre)[j] + s * dir[j];
            return with_x(p, x);
        };
        auto g = [&](double s) { return certs.clf.value(at(s)); };
        double hi = 1.0;
        int grow = 0;
        while (g(hi) <= 0.0 && grow++ < 60) hi *= 2.0;
        if (g(hi) <= 0.0) continue;
        const CertPoint q = at(bisect(g, 0.0, hi));
        if (!o.region.contains(q)) continue;

        const CertificateValue cv = certs.clf.evaluate(q);
        if (std::abs(cv.value) > o.band) continue;
        ++rep.points_checked;
        const NonStationaryState x = x_of(q);
        const DqVector u = sfilter::refined_nominal_control(x, z_of(q), o.model.z_c, 1.0);
        const double residual =
            sfilter::lie_derivative(cv, x, u, o.model, 1.0) + dissipation(cv.value, o.model.params);
        if (residual > 0.0) rep.violations.push_back({Condition::nominal_invariance, q, residual});
    }
    return rep;
}

VerificationReport check_containment(const SafetyCertificates& certs, const VerifyOptions& o) {
    VerificationReport rep;
    RegionSampler sampler(o.region, o.seed ^ 0x94d049bb133111ebULL, true);
    for (std::size_t k = 0; k < o.samples; ++k) {
        const CertPoint p = sampler.next();
        ++rep.samples_tested;
        ++rep.points_checked;
        const double b = certs.cbf.value(p);
        const double v = certs.clf.value(p);
        const double w = sfilter::allowable_margin(x_of(p), z_of(p), o.region.i_max);
        if (v <= 0.0 && b > 0.0) rep.violations.push_back({Condition::containment_xn_xs, p, b});
        if (b <= 0.0 && w > 0.0) rep.violations.push_back({Condition::containment_xs_xa, p, w});
    }
    return rep;
}

VerificationReport verify_all(const SafetyCertificates& certs, const VerifyOptions& o) {
    VerificationReport rep = check_cbf_boundary(certs, o);
    rep.merge(check_clf_region(certs, o));
    rep.merge(check_nominal_invariance(certs, o));
    rep.merge(check_containment(certs, o));
    return rep;
}

AbcBound check_abc_bound(int n_theta, int n_phi, double i_hat, double i_0) {
    AbcBound out;
    out.bound = i_hat + i_0;
    for (int a = 0; a < n_theta; ++a) {
        const double theta = 2.0 * std::numbers::pi * a / n_theta;
        for (int b = 0; b < n_phi; ++b) {
            const double phi = 2.0 * std::numbers::pi * b / n_phi;
            out.max_phase = std::max(
                out.max_phase, worst_phase(theta, {i_hat * std::cos(phi), i_hat * std::sin(phi), i_0}));
        }
    }
    return out;
}

}  // namespace verifier
}  // namespace gfmsf
