#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfmsf/gfmsf.h"

namespace {

struct Failure {
    gfmsf_status status;
};

void check(gfmsf_status s) {
    if (s != GFMSF_OK) throw Failure{s};
}

struct Handles {
    gfmsf_config* cfg = nullptr;
    gfmsf_certs* certs = nullptr;
    ~Handles() {
        gfmsf_config_free(cfg);
        gfmsf_certs_free(certs);
    }
};

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string cbf, clf;
};

void add_common(CLI::App* app, Common& c, bool certs = true) {
    app->add_option("-c,--config", c.config, "scenario file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("-s,--set", c.sets, "override, e.g. --set clc=sf_noclf");
    if (certs) {
        app->add_option("--cbf", c.cbf, "barrier certificate file")->check(CLI::ExistingFile);
        app->add_option("--clf", c.clf, "Lyapunov certificate file")->check(CLI::ExistingFile);
    }
}

void open(const Common& c, Handles& h) {
    check(c.config.empty() ? gfmsf_config_new(&h.cfg) : gfmsf_config_load(c.config.c_str(), &h.cfg));
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        check(gfmsf_config_set(h.cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    check(gfmsf_config_validate(h.cfg));
    if (c.cbf.empty() != c.clf.empty()) throw CLI::ValidationError("--cbf/--clf", "give both or neither");
    if (!c.cbf.empty()) check(gfmsf_certs_load(c.cbf.c_str(), c.clf.c_str(), &h.certs));
}

std::string name_of(const gfmsf_config* cfg) {
    char buf[128];
    check(gfmsf_config_name(cfg, buf, sizeof buf, nullptr));
    return buf;
}

void print_metrics(const gfmsf_metrics& m) {
    std::printf("max_phase_current      %.6f\n", m.max_phase_current);
    std::printf("max_overshoot          %.6f\n", m.max_overshoot);
    std::printf("max_dv                 %.6f\n", m.max_dv);
    std::printf("int_dv                 %.6f\n", m.int_dv);
    std::printf("recovery_time          %.6f\n", m.recovery_time);
    std::printf("post_fault_p_dip       %.6f\n", m.post_fault_p_dip);
    std::printf("active_time_post_fault %.6f\n", m.active_time_post_fault);
    std::printf("max_dv_prefault        %.3g\n", m.max_dv_prefault);
    std::printf("stable                 %d\n", m.stable);
}

int cmd_run(const Common& c, const std::string& out) {
    Handles h;
    open(c, h);
    gfmsf_result* res = nullptr;
    check(gfmsf_run(h.cfg, h.certs, &res));
    std::unique_ptr<gfmsf_result, decltype(&gfmsf_result_free)> guard(res, gfmsf_result_free);
    gfmsf_metrics m{};
    check(gfmsf_result_metrics(res, &m));
    std::printf("scenario               %s\n", name_of(h.cfg).c_str());
    print_metrics(m);
    if (!out.empty()) check(gfmsf_result_write_csv(res, out.c_str()));
    return 0;
}

int cmd_matrix(const Common& c, const std::string& out_dir) {
    Handles h;
    open(c, h);
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    std::printf("%-28s %10s %10s %10s %9s %6s\n", "scenario", "max_i", "overshoot", "max_dv", "recovery", "stable");
    int failures = 0;
    for (size_t k = 0; k < gfmsf_matrix_size(); ++k) {
        gfmsf_config* one = nullptr;
        check(gfmsf_matrix_config(h.cfg, k, &one));
        std::unique_ptr<gfmsf_config, decltype(&gfmsf_config_free)> g1(one, gfmsf_config_free);
        const std::string name = name_of(one);
        gfmsf_result* res = nullptr;
        if (gfmsf_run(one, h.certs, &res) != GFMSF_OK) {
            std::printf("%-28s error: %s\n", name.c_str(), gfmsf_last_error());
            ++failures;
            continue;
        }
        std::unique_ptr<gfmsf_result, decltype(&gfmsf_result_free)> g2(res, gfmsf_result_free);
        gfmsf_metrics m{};
        check(gfmsf_result_metrics(res, &m));
        std::printf("%-28s %10.4f %10.4f %10.4f %9.4f %6d\n", name.c_str(), m.max_phase_current, m.max_overshoot,
                    m.max_dv, m.recovery_time, m.stable);
        if (!out_dir.empty()) {
            const auto path = (std::filesystem::path(out_dir) / (name + ".csv")).string();
            check(gfmsf_result_write_csv(res, path.c_str()));
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_verify(const Common& c, gfmsf_verify_options o, const std::string& report) {
    Handles h;
    open(c, h);
    const auto t0 = std::chrono::steady_clock::now();
    gfmsf_report* rep = nullptr;
    check(gfmsf_verify(h.cfg, h.certs, &o, &rep));
    std::unique_ptr<gfmsf_report, decltype(&gfmsf_report_free)> guard(rep, gfmsf_report_free);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    static const char* names[] = {"cbf_boundary", "clf_region", "clf_cbf_joint", "nominal_invariance",
                                  "containment_xn_xs", "containment_xs_xa"};
    std::printf("samples %llu, points checked %llu, %.1f s\n",
                static_cast<unsigned long long>(gfmsf_report_samples(rep)),
                static_cast<unsigned long long>(gfmsf_report_points_checked(rep)), secs);
    for (int k = 0; k <= GFMSF_COND_CONTAINMENT_XS_XA; ++k) {
        std::printf("  %-20s %llu\n", names[k], static_cast<unsigned long long>(gfmsf_report_count(rep, k)));
    }
    if (!report.empty()) check(gfmsf_report_write(rep, report.c_str()));
    return gfmsf_report_count(rep, GFMSF_COND_ALL) == 0 ? 0 : 1;
}

int cmd_compare(const Common& c) {
    Handles h;
    open(c, h);
    gfmsf_metrics with{}, without{};
    check(gfmsf_compare_clf(h.cfg, h.certs, &with, &without));
    std::printf("%-22s %12s %12s\n", "", "sf", "sf_noclf");
    std::printf("%-22s %12.4f %12.4f\n", "recovery_time", with.recovery_time, without.recovery_time);
    std::printf("%-22s %12.4f %12.4f\n", "max_phase_current", with.max_phase_current, without.max_phase_current);
    std::printf("%-22s %12.4f %12.4f\n", "active_time_post_fault", with.active_time_post_fault,
                without.active_time_post_fault);
    std::printf("%-22s %12d %12d\n", "stable", with.stable, without.stable);
    return 0;
}

int cmd_params(const Common& c) {
    Handles h;
    open(c, h);
    for (size_t k = 0; k < gfmsf_config_param_count(); ++k) {
        const char* key = nullptr;
        double value = 0.0;
        check(gfmsf_config_param(h.cfg, k, &key, &value));
        std::printf("%-22s %.10g\n", key, value);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-forming converter current-limiting simulator and certificate checker"};
    app.set_version_flag("--version", gfmsf_version());
    app.require_subcommand(1);

    Common run_c, matrix_c, verify_c, compare_c, params_c;
    std::string run_out, matrix_out, report;
    gfmsf_verify_options vo{};
    gfmsf_verify_options_default(&vo);
    bool negated_region = false;

    auto* run = app.add_subcommand("run", "simulate one scenario and print its metrics");
    add_common(run, run_c);
    run->add_option("-o,--out", run_out, "write the trace as CSV");

    auto* matrix = app.add_subcommand("matrix", "simulate every grid x gfm x clc combination");
    add_common(matrix, matrix_c);
    matrix->add_option("-o,--out-dir", matrix_out, "directory for one CSV per scenario");

    auto* verify = app.add_subcommand("verify", "sample the operational region and check the certificates");
    add_common(verify, verify_c);
    verify->add_option("-n,--samples", vo.samples, "samples per check")->check(CLI::PositiveNumber);
    verify->add_option("--seed", vo.seed, "sampler seed");
    verify->add_option("--band", vo.band, "boundary band half-width")->check(CLI::PositiveNumber);
    verify->add_option("-r,--report", report, "write violations as JSON lines");
    verify->add_flag("--negated-region", negated_region, "use the operational region with every f_op row negated");

    auto* compare = app.add_subcommand("compare-clf", "run sf and sf_noclf on one scenario");
    add_common(compare, compare_c);

    auto* params = app.add_subcommand("params", "list every parameter and its value");
    add_common(params, params_c, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_c, run_out);
        if (*matrix) return cmd_matrix(matrix_c, matrix_out);
        if (*verify) {
            vo.negated_region = negated_region ? 1 : 0;
            return cmd_verify(verify_c, vo, report);
        }
        if (*compare) return cmd_compare(compare_c);
        if (*params) return cmd_params(params_c);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error (%s): %s\n", gfmsf_status_name(f.status), gfmsf_last_error());
        return 2;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
