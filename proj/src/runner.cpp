#include "gfmsf/runner.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gfmsf/clc.hpp"
#include "gfmsf/error.hpp"
#include "gfmsf/gfm.hpp"

namespace gfmsf {

namespace {

using cplx = std::complex<double>;

DqVector from_c(const cplx& c) { return {c.real(), c.imag()}; }
cplx series(const Impedance& z, double omega) { return {z.r, omega * z.l}; }

// Phasors in the global frame at the first simulated instant.
struct OperatingPoint {
    double omega = 1.0;
    cplx v_c, v_pcc, i, i_g, e, i_cf;
    double i_gfl_d = 0.0;
};

cplx shunt(const NetworkParams& n, double omega) { return cplx(n.r_f, 0.0) + 1.0 / cplx(0.0, omega * n.c_f); }

// SM behind l_f + l_SM; SM EMF at angle 0, converter angle found by bisection so
// that the machine delivers p_m, droop laws closed by fixed-point iteration.
OperatingPoint solve_high_inertia(const Params& p, const Impedance& branch) {
    const NetworkParams& n = p.network;
    const GfmParams& g = p.gfm;
    OperatingPoint op;
    double v_hat = g.v_star;
    op.omega = g.omega_star + g.d_f * (g.p_star + p.grid.p_m);
    const cplx e{1.0, 0.0};
    for (int it = 0; it < 200; ++it) {
        const cplx zc = series({n.r_c, n.l_c}, op.omega);
        const cplx zs = shunt(n, op.omega);
        const cplx zg = series(branch, op.omega);
        auto solve = [&](double phi) {
            OperatingPoint o = op;
            o.v_c = std::polar(v_hat, phi);
            o.v_pcc = (o.v_c / zc + e / zg) / (1.0 / zc + 1.0 / zs + 1.0 / zg);
            o.i = (o.v_c - o.v_pcc) / zc;
            o.i_g = (o.v_pcc - e) / zg;
            o.i_cf = o.v_pcc / zs;
            o.e = e;
            return o;
        };
        auto p_sm = [&](double phi) { return -(e * std::conj(solve(phi).i_g)).real(); };
        double lo = -std::numbers::pi / 2, hi = std::numbers::pi / 2;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (p_sm(mid) > p.grid.p_m ? lo : hi) = mid;
        }
        const double omega_prev = op.omega;
        const double v_prev = v_hat;
        op = solve(0.5 * (lo + hi));
        const cplx s = op.v_pcc * std::conj(op.i);
        op.omega = g.omega_star + g.d_f * (g.p_star - s.real());
        v_hat = gfm::voltage_droop(s.imag(), g.v_star, g.q_star, g.d_v);
        if (std::abs(op.omega - omega_prev) < 1e-15 && std::abs(v_hat - v_prev) < 1e-15) break;
    }
    return op;
}

// Converter alone forms the voltage; the GFL draws what balances its DC link.
OperatingPoint solve_low_inertia(const Params& p, const Impedance& branch) {
    const NetworkParams& n = p.network;
    const GfmParams& g = p.gfm;
    OperatingPoint op;
    double v_hat = g.v_star;
    op.omega = g.omega_star + g.d_f * (g.p_star + p.grid.i_r_gfl);
    const double p_gfl = -p.grid.i_r_gfl;
    op.v_pcc = {v_hat, 0.0};
    for (int it = 0; it < 200; ++it) {
        const cplx zc = series({n.r_c, n.l_c}, op.omega);
        const cplx zs = shunt(n, op.omega);
        op.v_c = {v_hat, 0.0};
        for (int k = 0; k < 500; ++k) {
            const double m = std::abs(op.v_pcc);
            const double r = branch.r;
            op.i_gfl_d = r > 0.0 ? (m - std::sqrt(m * m - 4.0 * r * p_gfl)) / (2.0 * r) : p_gfl / m;
            op.i_g = op.i_gfl_d * op.v_pcc / m;
            const cplx next = (op.v_c / zc - op.i_g) / (1.0 / zc + 1.0 / zs);
            const bool done = std::abs(next - op.v_pcc) < 1e-15;
            op.v_pcc = next;
            if (done) break;
        }
        op.i = (op.v_c - op.v_pcc) / zc;
        op.i_cf = op.v_pcc / zs;
        op.e = op.v_pcc - series(branch, op.omega) * op.i_g;
        const cplx s = op.v_pcc * std::conj(op.i);
        const double omega_prev = op.omega;
        const double v_prev = v_hat;
        op.omega = g.omega_star + g.d_f * (g.p_star - s.real());
        v_hat = gfm::voltage_droop(s.imag(), g.v_star, g.q_star, g.d_v);
        if (std::abs(op.omega - omega_prev) < 1e-15 && std::abs(v_hat - v_prev) < 1e-15) break;
    }
    return op;
}

PllState locked_pll(double theta, double omega) {
    PllState s;
    s.theta = theta;
    s.integrator = omega - 1.0;
    s.omega_raw = omega;
    s.omega_filtered = omega;
    return s;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const SafetyCertificates& certs) {
    cfg.validate();
    const Params& P = cfg.params;
    const NetworkParams& N = P.network;
    const GfmParams& G = P.gfm;
    const LimitParams& L = P.limits;
    const bool high = cfg.grid == plant::GridKind::high_inertia;

    plant::Network net(cfg.grid, P);
    const OperatingPoint op = high ? solve_high_inertia(P, net.grid_branch())
                                   : solve_low_inertia(P, net.grid_branch());

    plant::NetworkState& xs = net.state();
    xs.i = from_c(op.i);
    xs.v_cf = from_c(op.v_pcc) - N.r_f * from_c(op.i_cf);
    xs.i_g = from_c(op.i_g);
    xs.omega_sm = op.omega;
    xs.delta_sm = 0.0;
    xs.v_dc = 1.0;

    const double theta_pcc = std::arg(op.v_pcc);
    PllState pll = locked_pll(theta_pcc, op.omega);
    DqVector v_pcc_f_pll{std::abs(op.v_pcc), 0.0};
    VsmState vsm{op.omega, std::arg(op.v_c)};
    EdpcState edpc;
    edpc.integrator = wrap_angle(std::arg(op.v_c) - theta_pcc);
    SccState scc;

    GflGridState gfl;
    const Impedance gfl_own{0.0, N.l_gfl};
    if (!high) {
        gfl.pll = locked_pll(theta_pcc, op.omega);
        gfl.v_dc = 1.0;
        gfl.dc_int = op.i_gfl_d;
        gfl.i_gfl = xs.i_g;
        gfl.i_r_gfl = P.grid.i_r_gfl;
        const DqVector v = change_frame(from_c(op.v_pcc), 0.0, theta_pcc);
        const DqVector i = change_frame(from_c(op.i_g), 0.0, theta_pcc);
        gfl.e_cmd = change_frame(from_c(op.e), 0.0, theta_pcc);
        gfl.cc_int = v - gfl.e_cmd - impedance_apply(gfl_own, op.omega, i);
    }

    const Impedance z_c{N.r_c, N.l_c};
    sfilter::FilterModel model{z_c, G.tau_v, P.filter, L.m_max, true};
    const double alpha_v = -std::expm1(-cfg.dt_ctrl / G.tau_v);

    const long long n_sub = std::llround(cfg.dt_ctrl / cfg.dt_plant);
    const long long k_trace0 = std::llround(cfg.t_settle / cfg.dt_ctrl);
    const long long n_ctrl = k_trace0 + std::llround(cfg.t_end / cfg.dt_ctrl);
    const long long j_on = cfg.fault ? std::llround((cfg.t_settle + cfg.t_fault_on) / cfg.dt_plant) : -1;
    const long long j_off = cfg.fault ? std::llround((cfg.t_settle + cfg.t_fault_off) / cfg.dt_plant) : -1;
    const long long j_clear_end = cfg.fault ? j_off + std::llround(N.t_clear / cfg.dt_plant) : -1;
    auto plant_time = [&](long long j) { return -cfg.t_settle + static_cast<double>(j) * cfg.dt_plant; };

    plant::NetworkInputs in;
    in.p_m = P.grid.p_m;
    in.i_r_gfl = P.grid.i_r_gfl;
    bool captured = false;
    auto apply_fault_mode = [&](long long j) {
        if (!cfg.fault || j < j_on || j >= j_clear_end) {
            in.fault = plant::FaultMode::off;
        } else if (j < j_off) {
            in.fault = plant::FaultMode::on;
        } else {
            if (!captured) {
                in.i_f_at_clear = xs.i_f;
                in.t_clear_start = plant_time(j_off);
                captured = true;
            }
            in.fault = plant::FaultMode::clearing;
        }
    };

    RunResult result;
    result.trace.records.reserve(static_cast<std::size_t>(n_ctrl - k_trace0));
    result.min_v_dc = result.max_v_dc = xs.v_dc;

    for (long long k = 0; k < n_ctrl; ++k) {
        const long long j0 = k * n_sub;
        const double t_k = plant_time(j0);
        apply_fault_mode(j0);
        const bool fault_window = cfg.fault && j0 >= j_on && j0 < j_off;

        const DqVector i_g = xs.i;
        const DqVector v_pcc_g = net.pcc_voltage(t_k, xs, in);

        const PllState pll_prev = pll;
        pll = gfm::pll_step(pll, v_pcc_g, G.k_p_pll, G.t_i_pll, G.tau_d, cfg.dt_ctrl);
        const double theta_pll = pll_prev.theta;
        const double omega_pll = pll.omega_filtered;
        v_pcc_f_pll += alpha_v * (change_frame(v_pcc_g, 0.0, theta_pll) - v_pcc_f_pll);

        const double p = active_power(v_pcc_g, i_g);
        const double q = reactive_power(v_pcc_g, i_g);
        const double p_r = gfm::inverse_frequency_droop(omega_pll, G.p_star, G.omega_star, G.d_f);

        double theta_c = 0.0;
        double omega_frame = 1.0;
        if (cfg.gfm == GfmKind::vsm) {
            theta_c = vsm.theta_c;
            omega_frame = vsm.omega_c;
            vsm = gfm::vsm_step(vsm, p_r, p, omega_pll, G.h, G.k_d, cfg.dt_ctrl);
        } else {
            edpc = gfm::edpc_step(edpc, theta_pll, p_r, p, G.k_p_edpc, G.t_i_edpc, cfg.dt_ctrl);
            theta_c = edpc.theta_c;
            omega_frame = pll.omega_raw;
        }
        const DqVector v_cn{gfm::voltage_droop(q, G.v_star, G.q_star, G.d_v), 0.0};

        const DqVector i_c = change_frame(i_g, 0.0, theta_c);
        const DqVector v_pcc_c = change_frame(v_pcc_g, 0.0, theta_c);
        const DqVector v_pcc_f_c = change_frame(v_pcc_f_pll, theta_pll, theta_c);
        const GfmReference ref = gfm::voltage_reference_limitation(v_cn, v_pcc_f_c, z_c, omega_pll, L.i_th);

        const NonStationaryState x{i_c, v_pcc_f_c - v_pcc_c};
        const StationaryState z{ref.i_r, N.i_0};

        DqVector v_c = ref.v_cn_lim;
        bool active = ref.limited;
        double b = 0.0, v = 0.0;
        bool have_bv = false;
        switch (cfg.clc) {
            case ClcKind::none:
                break;
            case ClcKind::scc: {
                const clc::SccConfig sc{z_c, omega_pll, P.clc.k_p_cc, P.clc.t_i_cc, L.i_th, P.clc.scc_hysteresis};
                const auto out = clc::scc_step(scc, ref.v_cn_lim, i_c, ref.i_r, v_pcc_f_c, sc, cfg.dt_ctrl);
                scc = out.state;
                v_c = out.v_c;
                active = scc.active;
                break;
            }
            case ClcKind::rlcc: {
                const auto out = clc::rlcc_step(ref.v_cn_lim, i_c, v_pcc_f_c, z_c, omega_pll, P.clc.k_p_cc, L.i_th);
                v_c = out.v_c;
                active = out.engaged;
                break;
            }
            case ClcKind::avi: {
                const auto out = clc::avi_step(ref.v_cn_lim, i_c, P.clc.k_x, P.clc.eta_xr, L.i_th);
                v_c = out.v_c;
                active = out.state.x_v > 0.0;
                break;
            }
            case ClcKind::sf:
            case ClcKind::sf_noclf: {
                const auto out = sfilter::filter_step(x, z, certs, model, omega_pll, v_pcc_c,
                                                      cfg.clc == ClcKind::sf);
                v_c = out.v_c;
                active = out.qp.active_set != ActiveSet::none;
                b = out.b;
                v = out.v;
                have_bv = true;
                break;
            }
        }
        if (const double m2 = v_c.squared_norm(); m2 > L.m_max) v_c = std::sqrt(L.m_max / m2) * v_c;
        if (!have_bv) {
            b = certs.cbf.value(to_cert_point(x, z));
            v = certs.clf.value(to_cert_point(x, z));
        }

        if (high) {
            in.p_m = fault_window || (!cfg.restore_p_m && cfg.fault && t_k >= cfg.t_fault_off) ? 0.0 : P.grid.p_m;
        } else {
            gfl.i_gfl = xs.i_g;
            gfl.v_dc = xs.v_dc;
            double ramp = 1.0;
            if (cfg.fault && t_k >= cfg.t_fault_off && P.grid.gfl_restore > 0.0) {
                ramp = std::min(1.0, (t_k - cfg.t_fault_off) / P.grid.gfl_restore);
            }
            gfl.i_r_gfl = fault_window ? 0.0 : ramp * P.grid.i_r_gfl;
            plant::gfl_control(gfl, v_pcc_g, gfl_own, P.grid, G, P.clc, cfg.dt_ctrl);
            in.e_gfl = gfl.e_cmd;
            in.theta_gfl = gfl.pll.theta;
            in.omega_gfl = gfl.pll.omega_raw;
            in.v_dc_gfl = gfl.v_dc;
            in.i_r_gfl = gfl.i_r_gfl;
        }
        in.t_sample = t_k;
        in.v_c = v_c;
        in.theta_c = theta_c;
        in.omega_c = omega_frame;

        double phase_max = worst_phase(kOmegaNominal * t_k, {xs.i.d, xs.i.q, N.i_0});
        for (long long m = 0; m < n_sub; ++m) {
            const long long j = j0 + m;
            apply_fault_mode(j);
            net.step(plant_time(j), cfg.dt_plant, in);
            if (!xs.is_finite()) {
                std::ostringstream msg;
                msg << "non-finite plant state at t = " << plant_time(j + 1) << " s";
                if (!result.trace.records.empty()) msg << "; last finite record at t = " << result.trace.records.back().t << " s";
                throw Error(ErrorCode::numeric_blowup, msg.str());
            }
            phase_max = std::max(phase_max, worst_phase(kOmegaNominal * plant_time(j + 1), {xs.i.d, xs.i.q, N.i_0}));
        }

        if (k >= k_trace0) {
            TraceRecord r;
            r.t = static_cast<double>(k - k_trace0) * cfg.dt_ctrl;
            r.i = i_c;
            r.i_norm = i_c.amplitude();
            r.i_phase_max = phase_max;
            r.v_c = v_c;
            r.dv = v_c - ref.v_cn_lim;
            r.omega_pll = omega_pll;
            r.p = p;
            r.q = q;
            r.b = b;
            r.v = v;
            r.active = active;
            result.trace.records.push_back(r);
            if (!high) {
                result.min_v_dc = std::min(result.min_v_dc, xs.v_dc);
                result.max_v_dc = std::max(result.max_v_dc, xs.v_dc);
            }
        }
    }
    result.final_v_dc = xs.v_dc;
    result.metrics = compute_metrics(result.trace, cfg);
    return result;
}

Metrics compute_metrics(const SimTrace& trace, const ScenarioConfig& cfg) {
    Metrics m;
    const auto& rs = trace.records;
    const double i_max = cfg.params.limits.i_max;
    const double dt = cfg.dt_ctrl;
    double p_pre = 0.0;
    bool have_pre = false;
    for (const auto& r : rs) {
        m.max_phase_current = std::max(m.max_phase_current, r.i_phase_max);
        const double dv = r.dv.amplitude();
        m.max_dv = std::max(m.max_dv, dv);
        m.int_dv += dv * dt;
        const bool pre = !cfg.fault || r.t < cfg.t_fault_on;
        if (pre) {
            m.max_dv_prefault = std::max(m.max_dv_prefault, dv);
            p_pre = r.p;
            have_pre = true;
        }
        if (cfg.fault && r.t >= cfg.t_fault_off) {
            if (r.active) m.active_time_post_fault += dt;
            if (have_pre && r.p < p_pre - 0.5) m.post_fault_p_dip += dt;
        }
    }
    m.max_overshoot = std::max(0.0, m.max_phase_current - i_max);

    if (cfg.fault && !rs.empty() && rs.back().v <= 0.0) {
        std::size_t first_post = rs.size();
        for (std::size_t k = 0; k < rs.size(); ++k) {
            if (rs[k].t >= cfg.t_fault_off) {
                first_post = k;
                break;
            }
        }
        std::size_t idx = first_post;
        for (std::size_t k = rs.size(); k-- > first_post;) {
            if (rs[k].v > 0.0) {
                idx = k + 1;
                break;
            }
        }
        if (first_post < rs.size()) m.recovery_time = rs[idx].t - cfg.t_fault_off;
    }

    m.stable = !rs.empty();
    if (!rs.empty()) {
        const double t_last = rs.back().t;
        double w_lo = 1e9, w_hi = -1e9, i_hi = 0.0;
        for (const auto& r : rs) {
            if (!std::isfinite(r.i_norm) || !std::isfinite(r.omega_pll)) m.stable = false;
            if (r.t >= t_last - 0.1) {
                w_lo = std::min(w_lo, r.omega_pll);
                w_hi = std::max(w_hi, r.omega_pll);
                i_hi = std::max(i_hi, r.i_norm);
            }
        }
        m.stable = m.stable && (w_hi - w_lo) < 5e-3 && i_hi < 3.0;
    }
    return m;
}

ClfComparison compare_clf(ScenarioConfig cfg, const SafetyCertificates& certs) {
    ClfComparison out;
    cfg.clc = ClcKind::sf;
    out.with_clf = run_scenario(cfg, certs).metrics;
    cfg.clc = ClcKind::sf_noclf;
    out.without_clf = run_scenario(cfg, certs).metrics;
    return out;
}

std::string trace_to_csv(const SimTrace& trace) {
    std::string out(kTraceHeader);
    out += '\n';
    char buf[512];
    for (const auto& r : trace.records) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.t,
                      r.i.d, r.i.q, r.i_norm, r.i_phase_max, r.v_c.d, r.v_c.q, r.dv.d, r.dv.q, r.omega_pll,
                      r.p, r.q, r.b, r.v, r.active ? 1 : 0);
        out += buf;
    }
    return out;
}

void emit_trace(const SimTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write trace file " + path);
    f << trace_to_csv(trace);
    if (!f) throw Error(ErrorCode::io_error, "failed writing trace file " + path);
}

SimTrace parse_trace_csv(std::string_view csv) {
    SimTrace trace;
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) {
        throw Error(ErrorCode::parse_error, "trace: missing or unexpected header");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(std::stod(cell));
        if (f.size() != 15) {
            throw Error(ErrorCode::parse_error, "trace line " + std::to_string(line_no) + ": expected 15 columns");
        }
        TraceRecord r;
        r.t = f[0];
        r.i = {f[1], f[2]};
        r.i_norm = f[3];
        r.i_phase_max = f[4];
        r.v_c = {f[5], f[6]};
        r.dv = {f[7], f[8]};
        r.omega_pll = f[9];
        r.p = f[10];
        r.q = f[11];
        r.b = f[12];
        r.v = f[13];
        r.active = f[14] != 0.0;
        trace.records.push_back(r);
    }
    return trace;
}

std::vector<ScenarioConfig> scenario_matrix(const ScenarioConfig& base) {
    std::vector<ScenarioConfig> out;
    for (auto g : {plant::GridKind::high_inertia, plant::GridKind::low_inertia}) {
        for (auto f : {GfmKind::vsm, GfmKind::edpc}) {
            for (auto c : {ClcKind::none, ClcKind::scc, ClcKind::rlcc, ClcKind::avi, ClcKind::sf,
                           ClcKind::sf_noclf}) {
                ScenarioConfig cfg = base;
                cfg.grid = g;
                cfg.gfm = f;
                cfg.clc = c;
                out.push_back(cfg);
            }
        }
    }
    return out;
}

}  // namespace gfmsf
