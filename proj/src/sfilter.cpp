#include "gfmsf/sfilter.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gfmsf/error.hpp"

namespace gfmsf {

const char* to_string(ActiveSet a) {
    switch (a) {
        case ActiveSet::none: return "none";
        case ActiveSet::cbf: return "cbf";
        case ActiveSet::clf: return "clf";
        case ActiveSet::both: return "both";
        case ActiveSet::cbf_only_fallback: return "cbf_only_fallback";
    }
    return "unknown";
}

namespace sfilter {

namespace {

constexpr double kDegenerate = 1e-12;

struct UnitRow {
    DqVector n;      // unit normal
    double c = 0.0;  // n^T u <= c
    double scale = 1.0;
};

UnitRow normalise(const QpRow& r) {
    const double s = r.a.amplitude();
    return {(1.0 / s) * r.a, r.b / s, s};
}

bool satisfies(const UnitRow& r, const DqVector& u) {
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(r.c) + u.amplitude() + 1.0);
    return dot(r.n, u) - r.c <= tol;
}

DqVector project(const UnitRow& r, const DqVector& u) {
    const double excess = dot(r.n, u) - r.c;
    return u - excess * r.n;
}

QpResult finish(const DqVector& u_n, const DqVector& u, ActiveSet a) {
    return {u, a, (u - u_n).squared_norm()};
}

QpResult solve_single(const DqVector& u_n, const std::optional<UnitRow>& row, ActiveSet tag_active,
                      ActiveSet tag_inactive) {
    if (!row || satisfies(*row, u_n)) return finish(u_n, u_n, tag_inactive);
    return finish(u_n, project(*row, u_n), tag_active);
}

}  // namespace

QpResult qp_solve(const DqVector& u_n, const QpRow& cbf, const std::optional<QpRow>& clf) {
    std::optional<UnitRow> rb;
    if (cbf.a.amplitude() <= kDegenerate) {
        if (cbf.b < 0.0) {
            throw Error(ErrorCode::degenerate_cbf, "CBF row has zero gradient and negative bound");
        }
    } else {
        rb = normalise(cbf);
    }

    bool fallback = false;
    std::optional<UnitRow> rv;
    if (clf) {
        if (clf->a.amplitude() <= kDegenerate) {
            fallback = clf->b < 0.0;
        } else {
            rv = normalise(*clf);
        }
    }

    if (fallback || !rv) {
        return solve_single(u_n, rb, ActiveSet::cbf,
                            fallback ? ActiveSet::cbf_only_fallback : ActiveSet::none);
    }
    if (!rb) return solve_single(u_n, rv, ActiveSet::clf, ActiveSet::none);

    const bool ok_b = satisfies(*rb, u_n);
    const bool ok_v = satisfies(*rv, u_n);
    if (ok_b && ok_v) return finish(u_n, u_n, ActiveSet::none);

    struct Candidate {
        DqVector u;
        ActiveSet tag;
    };
    std::vector<Candidate> candidates;
    if (!ok_b) candidates.push_back({project(*rb, u_n), ActiveSet::cbf});
    if (!ok_v) candidates.push_back({project(*rv, u_n), ActiveSet::clf});
    const double det = rb->n.d * rv->n.q - rb->n.q * rv->n.d;
    if (std::abs(det) > 1e-12) {
        const DqVector vertex{(rb->c * rv->n.q - rv->c * rb->n.q) / det,
                              (rb->n.d * rv->c - rv->n.d * rb->c) / det};
        candidates.push_back({vertex, ActiveSet::both});
    }

    const Candidate* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (!satisfies(*rb, c.u) || !satisfies(*rv, c.u)) continue;
        const double dist = (c.u - u_n).squared_norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = &c;
        }
    }
    if (best) return finish(u_n, best->u, best->tag);

    // Parallel rows with an empty intersection: safety takes priority.
    QpResult r = solve_single(u_n, rb, ActiveSet::cbf, ActiveSet::cbf);
    r.active_set = ActiveSet::cbf_only_fallback;
    return r;
}

DqVector nominal_control(const NonStationaryState& x, const StationaryState& z, const Impedance& z_c,
                         double omega) {
    return impedance_apply(z_c, omega, z.i_r) + x.dv_pcc_f;
}

DqVector refined_nominal_control(const NonStationaryState& x, const StationaryState& z,
                                 const Impedance& z_c, double omega) {
    return 0.2 * (z.i_r - x.i) + nominal_control(x, z, z_c, omega);
}

double allowable_margin(const NonStationaryState& x, const StationaryState& z, double i_max) {
    const double room = i_max - z.i_0;
    return x.i.squared_norm() - room * room;
}

double allowable_margin_printed(const NonStationaryState& x, const StationaryState& z, double i_max) {
    return -allowable_margin(x, z, i_max);
}

QpRow constraint_row(const CertificateValue& c, const NonStationaryState& x, const FilterModel& m,
                     double omega, double gamma) {
    const NonStationaryState drift = plant::converter_current_derivative(x, {}, m.z_c, omega, m.tau_v);
    const double g = kOmegaNominal / m.z_c.l;
    const DqVector grad_i{c.grad_x[0], c.grad_x[1]};
    const DqVector grad_dv{c.grad_x[2], c.grad_x[3]};
    const double lie_f = dot(grad_i, drift.i) + dot(grad_dv, drift.dv_pcc_f);
    return {g * grad_i, -gamma * c.value - lie_f};
}

double lie_derivative(const CertificateValue& c, const NonStationaryState& x, const DqVector& u,
                      const FilterModel& m, double omega) {
    const NonStationaryState xdot = plant::converter_current_derivative(x, u, m.z_c, omega, m.tau_v);
    return c.grad_x[0] * xdot.i.d + c.grad_x[1] * xdot.i.q + c.grad_x[2] * xdot.dv_pcc_f.d +
           c.grad_x[3] * xdot.dv_pcc_f.q;
}

FilterOutput filter_step(const NonStationaryState& x, const StationaryState& z,
                         const SafetyCertificates& certs, const FilterModel& model, double omega,
                         const DqVector& v_pcc, bool use_clf) {
    FilterOutput out;
    const CertificateValue b = certs.cbf.evaluate(x, z);
    const CertificateValue v = certs.clf.evaluate(x, z);
    out.b = b.value;
    out.v = v.value;
    out.u_n = nominal_control(x, z, model.z_c, omega);

    const QpRow row_b = constraint_row(b, x, model, omega, model.params.gamma_b);
    std::optional<QpRow> row_v;
    if (use_clf) row_v = constraint_row(v, x, model, omega, model.params.gamma_v);

    out.qp = qp_solve(out.u_n, row_b, row_v);
    if (row_v && model.gate_clf_on_input_set && out.qp.active_set != ActiveSet::none &&
        (out.qp.u + v_pcc).squared_norm() > model.m_max) {
        out.qp = qp_solve(out.u_n, row_b, std::nullopt);
        out.qp.active_set = ActiveSet::cbf_only_fallback;
    }
    out.u = out.qp.u;
    out.du = out.u - out.u_n;
    out.v_c = out.u + v_pcc;
    return out;
}

}  // namespace sfilter
}  // namespace gfmsf
