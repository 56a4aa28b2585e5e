#include "gfmsf/gfmsf.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "gfmsf/error.hpp"
#include "gfmsf/runner.hpp"
#include "gfmsf/verifier.hpp"

struct gfmsf_config {
    gfmsf::ScenarioConfig cfg;
};

struct gfmsf_certs {
    gfmsf::SafetyCertificates certs;
};

struct gfmsf_result {
    gfmsf::RunResult run;
};

struct gfmsf_report {
    gfmsf::VerificationReport report;
};

namespace {

thread_local std::string last_error;

gfmsf_status status_of(gfmsf::ErrorCode c) {
    return static_cast<gfmsf_status>(static_cast<int>(c));
}

template <typename Fn>
gfmsf_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        fn();
        return GFMSF_OK;
    } catch (const gfmsf::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return GFMSF_E_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return GFMSF_E_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return GFMSF_E_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw gfmsf::Error(gfmsf::ErrorCode::invalid_argument, what);
}

const gfmsf::SafetyCertificates& certs_or_builtin(const gfmsf_certs* c) {
    static const gfmsf::SafetyCertificates builtin = gfmsf::SafetyCertificates::builtin();
    return c ? c->certs : builtin;
}

void fill(const gfmsf::Metrics& m, gfmsf_metrics* out) {
    out->max_phase_current = m.max_phase_current;
    out->max_overshoot = m.max_overshoot;
    out->max_dv = m.max_dv;
    out->int_dv = m.int_dv;
    out->recovery_time = m.recovery_time;
    out->post_fault_p_dip = m.post_fault_p_dip;
    out->active_time_post_fault = m.active_time_post_fault;
    out->max_dv_prefault = m.max_dv_prefault;
    out->stable = m.stable ? 1 : 0;
}

const std::vector<std::pair<std::string, double>>& param_names() {
    static const auto names = gfmsf::config::parameter_listing(gfmsf::Params{});
    return names;
}

}  // namespace

extern "C" {

const char* gfmsf_version(void) { return "0.1.0"; }

const char* gfmsf_last_error(void) { return last_error.c_str(); }

const char* gfmsf_status_name(gfmsf_status status) {
    switch (status) {
        case GFMSF_OK: return "ok";
        case GFMSF_E_INTERNAL: return "internal";
        default: break;
    }
    if (status >= GFMSF_E_INVALID_ARGUMENT && status <= GFMSF_E_CERTIFICATE) {
        return gfmsf::to_string(static_cast<gfmsf::ErrorCode>(status));
    }
    return "unknown";
}

gfmsf_status gfmsf_config_new(gfmsf_config** out) {
    return guarded([&] {
        require(out, "out is null");
        *out = new gfmsf_config{};
    });
}

gfmsf_status gfmsf_config_load(const char* path, gfmsf_config** out) {
    return guarded([&] {
        require(path && out, "path or out is null");
        *out = new gfmsf_config{gfmsf::config::load(path)};
    });
}

gfmsf_status gfmsf_config_parse(const char* text, gfmsf_config** out) {
    return guarded([&] {
        require(text && out, "text or out is null");
        *out = new gfmsf_config{gfmsf::config::parse(text)};
    });
}

gfmsf_status gfmsf_config_clone(const gfmsf_config* cfg, gfmsf_config** out) {
    return guarded([&] {
        require(cfg && out, "cfg or out is null");
        *out = new gfmsf_config{cfg->cfg};
    });
}

gfmsf_status gfmsf_config_set(gfmsf_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg && key && value, "cfg, key or value is null");
        gfmsf::ScenarioConfig next = cfg->cfg;
        gfmsf::config::set(next, key, value);
        cfg->cfg = next;
    });
}

gfmsf_status gfmsf_config_validate(const gfmsf_config* cfg) {
    return guarded([&] {
        require(cfg, "cfg is null");
        cfg->cfg.validate();
    });
}

gfmsf_status gfmsf_config_name(const gfmsf_config* cfg, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(cfg, "cfg is null");
        const std::string name = cfg->cfg.name();
        if (needed) *needed = name.size();
        if (buf && cap > 0) {
            const size_t n = std::min(cap - 1, name.size());
            std::memcpy(buf, name.data(), n);
            buf[n] = '\0';
        }
    });
}

size_t gfmsf_config_param_count(void) { return param_names().size(); }

gfmsf_status gfmsf_config_param(const gfmsf_config* cfg, size_t index, const char** key, double* value) {
    return guarded([&] {
        require(cfg, "cfg is null");
        require(index < param_names().size(), "parameter index out of range");
        if (key) *key = param_names()[index].first.c_str();
        if (value) *value = gfmsf::config::parameter_listing(cfg->cfg.params)[index].second;
    });
}

void gfmsf_config_free(gfmsf_config* cfg) { delete cfg; }

size_t gfmsf_matrix_size(void) { return gfmsf::scenario_matrix().size(); }

gfmsf_status gfmsf_matrix_config(const gfmsf_config* base, size_t index, gfmsf_config** out) {
    return guarded([&] {
        require(out, "out is null");
        const auto all = gfmsf::scenario_matrix(base ? base->cfg : gfmsf::ScenarioConfig{});
        require(index < all.size(), "matrix index out of range");
        *out = new gfmsf_config{all[index]};
    });
}

gfmsf_status gfmsf_certs_builtin(gfmsf_certs** out) {
    return guarded([&] {
        require(out, "out is null");
        *out = new gfmsf_certs{gfmsf::SafetyCertificates::builtin()};
    });
}

gfmsf_status gfmsf_certs_load(const char* cbf_path, const char* clf_path, gfmsf_certs** out) {
    return guarded([&] {
        require(cbf_path && clf_path && out, "path or out is null");
        gfmsf::SafetyCertificates c{gfmsf::PolynomialCertificate::load(cbf_path),
                                    gfmsf::PolynomialCertificate::load(clf_path)};
        *out = new gfmsf_certs{std::move(c)};
    });
}

gfmsf_status gfmsf_certs_eval(const gfmsf_certs* certs, const double point[7], double* b, double* v) {
    return guarded([&] {
        require(point, "point is null");
        gfmsf::CertPoint p{};
        for (size_t k = 0; k < p.size(); ++k) p[k] = point[k];
        const auto& c = certs_or_builtin(certs);
        if (b) *b = c.cbf.value(p);
        if (v) *v = c.clf.value(p);
    });
}

void gfmsf_certs_free(gfmsf_certs* certs) { delete certs; }

gfmsf_status gfmsf_run(const gfmsf_config* cfg, const gfmsf_certs* certs, gfmsf_result** out) {
    return guarded([&] {
        require(cfg && out, "cfg or out is null");
        *out = new gfmsf_result{gfmsf::run_scenario(cfg->cfg, certs_or_builtin(certs))};
    });
}

gfmsf_status gfmsf_result_metrics(const gfmsf_result* res, gfmsf_metrics* out) {
    return guarded([&] {
        require(res && out, "res or out is null");
        fill(res->run.metrics, out);
    });
}

size_t gfmsf_result_length(const gfmsf_result* res) { return res ? res->run.trace.records.size() : 0; }

gfmsf_status gfmsf_result_row(const gfmsf_result* res, size_t index, double row[15]) {
    return guarded([&] {
        require(res && row, "res or row is null");
        require(index < res->run.trace.records.size(), "row index out of range");
        const auto& r = res->run.trace.records[index];
        const double values[15] = {r.t,         r.i.d,    r.i.q,    r.i_norm, r.i_phase_max,
                                   r.v_c.d,     r.v_c.q,  r.dv.d,   r.dv.q,   r.omega_pll,
                                   r.p,         r.q,      r.b,      r.v,      r.active ? 1.0 : 0.0};
        std::memcpy(row, values, sizeof values);
    });
}

gfmsf_status gfmsf_result_write_csv(const gfmsf_result* res, const char* path) {
    return guarded([&] {
        require(res && path, "res or path is null");
        gfmsf::emit_trace(res->run.trace, path);
    });
}

void gfmsf_result_free(gfmsf_result* res) { delete res; }

gfmsf_status gfmsf_compare_clf(const gfmsf_config* cfg, const gfmsf_certs* certs, gfmsf_metrics* with_clf,
                               gfmsf_metrics* without_clf) {
    return guarded([&] {
        require(cfg && with_clf && without_clf, "cfg or output is null");
        const auto cmp = gfmsf::compare_clf(cfg->cfg, certs_or_builtin(certs));
        fill(cmp.with_clf, with_clf);
        fill(cmp.without_clf, without_clf);
    });
}

void gfmsf_verify_options_default(gfmsf_verify_options* opts) {
    if (!opts) return;
    const gfmsf::VerifyOptions o;
    opts->samples = o.samples;
    opts->seed = o.seed;
    opts->band = o.band;
    opts->negated_region = 0;
}

gfmsf_status gfmsf_verify(const gfmsf_config* cfg, const gfmsf_certs* certs, const gfmsf_verify_options* opts,
                          gfmsf_report** out) {
    return guarded([&] {
        require(opts && out, "opts or out is null");
        require(opts->samples > 0, "samples must be positive");
        require(opts->band > 0.0, "band must be positive");
        const gfmsf::Params params = cfg ? cfg->cfg.params : gfmsf::Params{};
        auto o = gfmsf::VerifyOptions::from(params, opts->negated_region != 0);
        o.samples = static_cast<std::size_t>(opts->samples);
        o.seed = opts->seed;
        o.band = opts->band;
        *out = new gfmsf_report{gfmsf::verifier::verify_all(certs_or_builtin(certs), o)};
    });
}

uint64_t gfmsf_report_samples(const gfmsf_report* rep) { return rep ? rep->report.samples_tested : 0; }

uint64_t gfmsf_report_points_checked(const gfmsf_report* rep) { return rep ? rep->report.points_checked : 0; }

uint64_t gfmsf_report_count(const gfmsf_report* rep, int condition) {
    if (!rep) return 0;
    if (condition == GFMSF_COND_ALL) return rep->report.violations.size();
    if (condition < 0 || condition > GFMSF_COND_CONTAINMENT_XS_XA) return 0;
    return rep->report.count(static_cast<gfmsf::Condition>(condition));
}

gfmsf_status gfmsf_report_write(const gfmsf_report* rep, const char* path) {
    return guarded([&] {
        require(rep && path, "rep or path is null");
        std::ofstream f(path);
        if (!f) throw gfmsf::Error(gfmsf::ErrorCode::io_error, std::string("cannot write ") + path);
        f << rep->report.serialize();
        if (!f) throw gfmsf::Error(gfmsf::ErrorCode::io_error, std::string("write failed: ") + path);
    });
}

void gfmsf_report_free(gfmsf_report* rep) { delete rep; }

gfmsf_status gfmsf_abc_bound(int n_theta, int n_phi, double i_hat, double i_0, double* max_phase) {
    return guarded([&] {
        require(n_theta > 0 && n_phi > 0 && max_phase, "grid sizes must be positive and max_phase non-null");
        *max_phase = gfmsf::verifier::check_abc_bound(n_theta, n_phi, i_hat, i_0).max_phase;
    });
}

}  // extern "C"
