#pragma once

// Scenario orchestration: configuration, steady-state initialisation, the
// sampled control loop around the averaged plant, metrics and CSV traces.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfmsf/params.hpp"
#include "gfmsf/plant.hpp"
#include "gfmsf/sfilter.hpp"

namespace gfmsf {

enum class GfmKind { vsm, edpc };
enum class ClcKind { none, scc, rlcc, avi, sf, sf_noclf };

const char* to_string(plant::GridKind g);
const char* to_string(GfmKind g);
const char* to_string(ClcKind c);

struct ScenarioConfig {
    plant::GridKind grid = plant::GridKind::high_inertia;
    GfmKind gfm = GfmKind::vsm;
    ClcKind clc = ClcKind::sf;
    double t_end = 1.5;
    double t_fault_on = 0.2;
    double t_fault_off = 0.5;
    bool fault = true;
    bool restore_p_m = false;   // high inertia: p_m back to its value after clearing instead of staying at 0
    double t_settle = 0.5;
    double dt_plant = 1e-5;
    double dt_ctrl = 2e-4;
    std::uint64_t seed = 0;
    Params params;

    /// Throws Error(invalid_config) naming the offending field.
    void validate() const;
    std::string name() const;
};

namespace config {

/// "key = value" lines, '#' comments. Keys: grid, gfm, clc, fault, restore_p_m, t_end, t_fault_on,
/// t_fault_off, t_settle, dt_plant, dt_ctrl, seed, and parameters as
/// section.symbol (plant, limits, gfm, clc, filter, grid) or a bare symbol
/// when unambiguous.
ScenarioConfig parse(std::string_view text, std::string_view source = "<text>");

/// One key assignment without validation. Throws Error(parse_error).
void set(ScenarioConfig& cfg, std::string_view key, std::string_view value);
ScenarioConfig load(const std::string& path);

/// Every parameter key with its current value, in section order.
std::vector<std::pair<std::string, double>> parameter_listing(const Params& p);

}  // namespace config

struct TraceRecord {
    double t = 0.0;
    DqVector i;            // controller frame
    double i_norm = 0.0;
    double i_phase_max = 0.0;
    DqVector v_c;          // controller frame
    DqVector dv;           // v_c - v_cn_lim
    double omega_pll = 1.0;
    double p = 0.0;
    double q = 0.0;
    double b = 0.0;
    double v = 0.0;
    bool active = false;
};

struct SimTrace {
    std::vector<TraceRecord> records;
};

struct Metrics {
    double max_phase_current = 0.0;
    double max_overshoot = 0.0;
    double max_dv = 0.0;
    double int_dv = 0.0;
    double recovery_time = -1.0;      // -1: V never settles at or below 0 after clearing
    double post_fault_p_dip = 0.0;    // time after clearing with p below its pre-fault value by > 0.5
    double active_time_post_fault = 0.0;
    double max_dv_prefault = 0.0;
    bool stable = false;

    bool recovered() const { return recovery_time >= 0.0; }
};

struct RunResult {
    SimTrace trace;
    Metrics metrics;
    double final_v_dc = 1.0;
    double min_v_dc = 1.0;
    double max_v_dc = 1.0;
};

/// Deterministic. Throws Error(numeric_blowup) with the time of the first
/// non-finite state.
RunResult run_scenario(const ScenarioConfig& cfg, const SafetyCertificates& certs = SafetyCertificates::builtin());

Metrics compute_metrics(const SimTrace& trace, const ScenarioConfig& cfg);

struct ClfComparison {
    Metrics with_clf;
    Metrics without_clf;
};

ClfComparison compare_clf(ScenarioConfig cfg, const SafetyCertificates& certs = SafetyCertificates::builtin());

inline constexpr std::string_view kTraceHeader =
    "t,i_d,i_q,i_norm,i_phase_max,v_cd,v_cq,dv_d,dv_q,omega_pll,p,q,B,V,active";

std::string trace_to_csv(const SimTrace& trace);
void emit_trace(const SimTrace& trace, const std::string& path);
SimTrace parse_trace_csv(std::string_view csv);

/// All grid x GFM x CLC combinations with the given base configuration.
std::vector<ScenarioConfig> scenario_matrix(const ScenarioConfig& base = {});

}  // namespace gfmsf
