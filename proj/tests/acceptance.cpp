// acceptance [N ...]: runs the numbered acceptance checks (all when none given)
// and prints one PASS/FAIL line per check. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gfmsf/error.hpp"
#include "gfmsf/runner.hpp"
#include "gfmsf/verifier.hpp"

using namespace gfmsf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<ScenarioConfig> four(ClcKind clc, bool fault = true) {
    std::vector<ScenarioConfig> out;
    for (auto g : {plant::GridKind::high_inertia, plant::GridKind::low_inertia}) {
        for (auto m : {GfmKind::vsm, GfmKind::edpc}) {
            ScenarioConfig c;
            c.grid = g;
            c.gfm = m;
            c.clc = clc;
            c.fault = fault;
            out.push_back(c);
        }
    }
    return out;
}

Outcome current_limit() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (const auto& c : four(ClcKind::sf)) {
        const auto t0 = Clock::now();
        const auto r = run_scenario(c);
        const double secs = seconds_since(t0);
        const double bound = c.params.limits.i_max * 1.02;
        o.pass = o.pass && r.metrics.max_phase_current <= bound && secs <= 60.0;
        d << c.name() << " max " << r.metrics.max_phase_current << " (" << secs << " s); ";
    }
    d << "bound 1.326";
    o.detail = d.str();
    return o;
}

Outcome binding_fault() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (const auto& c : four(ClcKind::none)) {
        const auto r = run_scenario(c);
        o.pass = o.pass && r.metrics.max_phase_current > 1.1 * c.params.limits.i_max;
        d << c.name() << " max " << r.metrics.max_phase_current << "; ";
    }
    o.detail = d.str();
    return o;
}

Outcome baseline_overshoot() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (auto clc : {ClcKind::scc, ClcKind::rlcc, ClcKind::avi}) {
        double worst = 0.0;
        for (const auto& c : four(clc)) worst = std::max(worst, run_scenario(c).metrics.max_overshoot);
        o.pass = o.pass && worst > 0.0;
        d << to_string(clc) << " overshoot " << worst << "; ";
    }
    o.detail = d.str();
    return o;
}

Outcome filter_inactivity() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (const auto& c : four(ClcKind::sf, false)) {
        const auto r = run_scenario(c);
        o.pass = o.pass && r.metrics.max_dv <= 1e-6;
        d << c.name() << " max |dv| " << r.metrics.max_dv << "; ";
    }
    o.detail = d.str();
    return o;
}

double as_time(double recovery) {
    return recovery < 0.0 ? std::numeric_limits<double>::infinity() : recovery;
}

Outcome clf_benefit() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (auto g : {plant::GridKind::high_inertia, plant::GridKind::low_inertia}) {
        ScenarioConfig c;
        c.grid = g;
        c.gfm = GfmKind::vsm;
        const auto cmp = compare_clf(c);
        const double with = as_time(cmp.with_clf.recovery_time);
        const double without = as_time(cmp.without_clf.recovery_time);
        o.pass = o.pass && with <= without;
        d << to_string(g) << " recovery sf " << with << " vs sf_noclf " << without << "; ";
    }
    o.detail = d.str();
    return o;
}

Outcome certificate_oracle() {
    auto opts = VerifyOptions::from(Params{});
    opts.samples = 100000;
    opts.band = 1e-3;
    const auto t0 = Clock::now();
    const auto rep = verifier::verify_all(SafetyCertificates::builtin(), opts);
    const double secs = seconds_since(t0);
    std::ostringstream d;
    for (auto c : {Condition::cbf_boundary, Condition::clf_region, Condition::clf_cbf_joint,
                   Condition::nominal_invariance, Condition::containment_xn_xs, Condition::containment_xs_xa}) {
        d << to_string(c) << " " << rep.count(c) << "; ";
    }
    d << secs << " s";
    return {rep.pass() && secs <= 120.0, d.str()};
}

Outcome qp_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ang(-3.14159265, 3.14159265);
    auto feasible = [](const QpRow& r, const DqVector& x) { return dot(r.a, x) <= r.b + 1e-12; };
    double worst_gap = 0.0, worst_violation = -std::numeric_limits<double>::infinity();
    int compared = 0, beyond = 0, not_minimal = 0;
    for (int k = 0; k < 1000; ++k) {
        const DqVector u_n{u(rng), u(rng)};
        const double tb = ang(rng), tv = ang(rng);
        const QpRow b{{std::cos(tb), std::sin(tb)}, u(rng)};
        std::optional<QpRow> v;
        if (k % 4 != 0) v = QpRow{{std::cos(tv), std::sin(tv)}, u(rng)};
        const auto r = sfilter::qp_solve(u_n, b, v);
        const bool fallback = r.active_set == ActiveSet::cbf_only_fallback;
        worst_violation = std::max(worst_violation, dot(b.a, r.u) - b.b);
        if (v && !fallback) worst_violation = std::max(worst_violation, dot(v->a, r.u) - v->b);
        if (std::abs(r.u.d) > 2.0 || std::abs(r.u.q) > 2.0) continue;

        std::optional<DqVector> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 200; ++i) {
            for (int j = 0; j <= 200; ++j) {
                const DqVector g{-2.0 + 0.02 * i, -2.0 + 0.02 * j};
                if (!feasible(b, g) || (v && !fallback && !feasible(*v, g))) continue;
                const double dist = (g - u_n).squared_norm();
                if (dist < best_d) {
                    best_d = dist;
                    best = g;
                }
            }
        }
        if (!best) return {false, "grid found no feasible point for a solved instance"};
        const double gap = (r.u - *best).amplitude();
        worst_gap = std::max(worst_gap, gap);
        if (gap > 0.02) ++beyond;
        if ((r.u - u_n).squared_norm() > best_d + 1e-12) ++not_minimal;
        ++compared;
    }
    std::ostringstream d;
    d << compared << " instances, " << beyond << " with |u - u_grid| > 0.02 (max " << worst_gap
      << "), closed form worse than grid on " << not_minimal << ", max row residual " << worst_violation;
    return {worst_gap <= 0.02 && worst_violation <= 1e-9, d.str()};
}

Outcome abc_bound() {
    Outcome o{true, {}};
    std::ostringstream d;
    for (auto [i_hat, i_0] : {std::pair{1.0, 0.0}, std::pair{1.0, 0.3}, std::pair{0.7, 0.6}}) {
        const auto b = verifier::check_abc_bound(720, 720, i_hat, i_0);
        o.pass = o.pass && std::abs(b.max_phase - (i_hat + i_0)) <= 1e-4;
        d << "(" << i_hat << ", " << i_0 << ") -> " << b.max_phase << "; ";
    }
    o.detail = d.str();
    return o;
}

Outcome certificate_anchors() {
    const auto certs = SafetyCertificates::builtin();
    const double b0 = certs.cbf.value(CertPoint{});
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const CertPoint p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 0.3 + 0.3 * u(rng) / 1.3};
        for (const auto* c : {&certs.cbf, &certs.clf}) {
            const auto a = c->evaluate(p);
            for (int j = 0; j < 4; ++j) {
                CertPoint hi = p, lo = p;
                hi[j] += 1e-5;
                lo[j] -= 1e-5;
                const double fd = (c->value(hi) - c->value(lo)) / 2e-5;
                worst = std::max(worst, std::abs(a.grad_x[j] - fd) / std::max(1.0, std::abs(a.grad_x[j])));
            }
        }
    }
    std::ostringstream d;
    d << "B(0,0) = " << b0 << ", max relative gradient error " << worst;
    return {b0 == -1.0 && worst <= 1e-6, d.str()};
}

Outcome numerical_integrity() {
    using C = std::complex<double>;
    const Impedance z{0.02, 0.16};
    const C zc(z.r, z.l);
    const DqVector v{1.0, 0.3}, i0{0.2, -0.1};
    const double t_end = 0.05;
    const C iss = C(v.d, v.q) / zc;
    const C exact_c = iss + std::exp(-kOmegaNominal / z.l * zc * t_end) * (C(i0.d, i0.q) - iss);
    const DqVector exact{exact_c.real(), exact_c.imag()};
    auto error = [&](double dt) {
        DqVector i = i0;
        const int n = static_cast<int>(std::lround(t_end / dt));
        for (int k = 0; k < n; ++k) {
            i = plant::rk4_step(i, k * dt, dt, [&](double, const DqVector& x) {
                return (kOmegaNominal / z.l) * (v - impedance_apply(z, 1.0, x));
            });
        }
        return (i - exact).amplitude();
    };
    const double order = std::log2(error(2e-4) / error(1e-4));

    int finite = 0;
    std::ostringstream d;
    for (const auto& c : scenario_matrix()) {
        try {
            const auto r = run_scenario(c);
            bool ok = true;
            for (const auto& rec : r.trace.records) ok = ok && std::isfinite(rec.i_norm) && std::isfinite(rec.v_c.d);
            if (ok) ++finite;
            else d << c.name() << " non-finite; ";
        } catch (const Error& e) {
            d << c.name() << ": " << e.what() << "; ";
        }
    }
    d << "RK4 order " << order << ", finite runs " << finite << "/24";
    return {order >= 3.9 && finite == 24, d.str()};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& checks() {
    static const std::vector<std::pair<const char*, std::function<Outcome()>>> c{
        {"current limit with the safety filter", current_limit},
        {"fault is binding without current limiting", binding_fault},
        {"baseline limiters overshoot", baseline_overshoot},
        {"filter inactive without fault", filter_inactivity},
        {"Lyapunov row speeds up recovery", clf_benefit},
        {"certificate conditions on 1e5 samples", certificate_oracle},
        {"closed-form QP matches grid search", qp_oracle},
        {"abc phase bound", abc_bound},
        {"certificate anchor and gradients", certificate_anchors},
        {"RK4 order and finite scenario matrix", numerical_integrity},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int k = 1; k < argc; ++k) which.push_back(std::atoi(argv[k]));
    if (which.empty()) {
        for (int k = 1; k <= static_cast<int>(checks().size()); ++k) which.push_back(k);
    }
    int failures = 0;
    for (int n : which) {
        if (n < 1 || n > static_cast<int>(checks().size())) {
            std::printf("FAIL %d: no such check\n", n);
            ++failures;
            continue;
        }
        const auto& [name, fn] = checks()[n - 1];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %d: %s | %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures;
}
