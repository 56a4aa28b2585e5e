#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gfmsf/error.hpp"
#include "gfmsf/runner.hpp"

namespace gfmsf {

namespace {

struct ParamKey {
    const char* section;
    const char* name;
    double& (*ref)(Params&);
    bool positive;   // must be > 0 (otherwise >= 0)
};

#define GFMSF_KEY(sec, member, field, pos) \
    ParamKey{sec, #field, [](Params& p) -> double& { return p.member.field; }, pos}

const std::vector<ParamKey>& keys() {
    static const std::vector<ParamKey> k{
        GFMSF_KEY("plant", network, l_g, true),
        GFMSF_KEY("plant", network, r_g, false),
        GFMSF_KEY("plant", network, l_c, true),
        GFMSF_KEY("plant", network, r_c, false),
        GFMSF_KEY("plant", network, c_f, true),
        GFMSF_KEY("plant", network, l_f, true),
        GFMSF_KEY("plant", network, r_f, true),
        GFMSF_KEY("plant", network, l_sm, true),
        GFMSF_KEY("plant", network, r_sm, false),
        GFMSF_KEY("plant", network, l_gfl, true),
        GFMSF_KEY("plant", network, r_gfl, false),
        GFMSF_KEY("plant", network, l_l, true),
        GFMSF_KEY("plant", network, r_l, false),
        GFMSF_KEY("plant", network, i_0, false),
        GFMSF_KEY("plant", network, t_clear, true),
        GFMSF_KEY("limits", limits, i_max, true),
        GFMSF_KEY("limits", limits, i_th, true),
        GFMSF_KEY("limits", limits, i_r_max, true),
        GFMSF_KEY("limits", limits, i_0_max, true),
        GFMSF_KEY("limits", limits, dv_max, true),
        GFMSF_KEY("limits", limits, m_max, true),
        GFMSF_KEY("gfm", gfm, d_f, true),
        GFMSF_KEY("gfm", gfm, d_v, false),
        GFMSF_KEY("gfm", gfm, k_d, false),
        GFMSF_KEY("gfm", gfm, h, true),
        GFMSF_KEY("gfm", gfm, k_p_pll, true),
        GFMSF_KEY("gfm", gfm, t_i_pll, true),
        GFMSF_KEY("gfm", gfm, k_p_edpc, true),
        GFMSF_KEY("gfm", gfm, t_i_edpc, true),
        GFMSF_KEY("gfm", gfm, tau_d, true),
        GFMSF_KEY("gfm", gfm, tau_v, true),
        GFMSF_KEY("gfm", gfm, p_star, false),
        GFMSF_KEY("gfm", gfm, omega_star, true),
        GFMSF_KEY("gfm", gfm, q_star, false),
        GFMSF_KEY("gfm", gfm, v_star, true),
        GFMSF_KEY("clc", clc, k_p_cc, true),
        GFMSF_KEY("clc", clc, t_i_cc, true),
        GFMSF_KEY("clc", clc, k_x, false),
        GFMSF_KEY("clc", clc, eta_xr, true),
        GFMSF_KEY("clc", clc, scc_hysteresis, false),
        GFMSF_KEY("filter", filter, gamma_b, true),
        GFMSF_KEY("filter", filter, gamma_v, true),
        GFMSF_KEY("filter", filter, d_r, true),
        GFMSF_KEY("filter", filter, epsilon, true),
        GFMSF_KEY("grid", grid, h_sm, true),
        GFMSF_KEY("grid", grid, p_m, false),
        GFMSF_KEY("grid", grid, i_r_gfl, false),
        GFMSF_KEY("grid", grid, tau_dc, true),
        GFMSF_KEY("grid", grid, k_p_dc, true),
        GFMSF_KEY("grid", grid, t_i_dc, true),
        GFMSF_KEY("grid", grid, gfl_i_limit, true),
        GFMSF_KEY("grid", grid, gfl_e_limit, true),
        GFMSF_KEY("grid", grid, gfl_restore, false),
    };
    return k;
}

#undef GFMSF_KEY

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Error invalid(const std::string& field, const std::string& why) {
    return Error(ErrorCode::invalid_config, field + ": " + why);
}

}  // namespace

const char* to_string(plant::GridKind g) {
    return g == plant::GridKind::high_inertia ? "high_inertia" : "low_inertia";
}

const char* to_string(GfmKind g) { return g == GfmKind::vsm ? "vsm" : "edpc"; }

const char* to_string(ClcKind c) {
    switch (c) {
        case ClcKind::none: return "none";
        case ClcKind::scc: return "scc";
        case ClcKind::rlcc: return "rlcc";
        case ClcKind::avi: return "avi";
        case ClcKind::sf: return "sf";
        case ClcKind::sf_noclf: return "sf_noclf";
    }
    return "unknown";
}

std::string ScenarioConfig::name() const {
    return std::string(to_string(grid)) + "_" + to_string(gfm) + "_" + to_string(clc);
}

void ScenarioConfig::validate() const {
    auto finite_pos = [](const char* field, double v) {
        if (!std::isfinite(v) || v <= 0.0) throw invalid(field, "must be a positive number");
    };
    finite_pos("t_end", t_end);
    finite_pos("dt_plant", dt_plant);
    finite_pos("dt_ctrl", dt_ctrl);
    if (!std::isfinite(t_settle) || t_settle < 0.0) throw invalid("t_settle", "must be >= 0");
    if (fault) {
        if (!std::isfinite(t_fault_on) || t_fault_on < 0.0) throw invalid("t_fault_on", "must be >= 0");
        if (!(t_fault_on < t_fault_off)) throw invalid("t_fault_off", "must be greater than t_fault_on");
        if (!(t_fault_off <= t_end)) throw invalid("t_fault_off", "must not exceed t_end");
    }
    const double ratio = dt_ctrl / dt_plant;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw invalid("dt_ctrl", "must be an integer multiple of dt_plant");
    }

    Params copy = params;
    for (const auto& k : keys()) {
        const double v = k.ref(copy);
        const std::string field = std::string(k.section) + "." + k.name;
        if (!std::isfinite(v)) throw invalid(field, "must be finite");
        if (k.positive && v <= 0.0) throw invalid(field, "must be > 0");
    }
    const auto& n = params.network;
    const auto& l = params.limits;
    if (n.r_c < 0 || n.r_f < 0 || n.r_sm < 0 || n.r_gfl < 0 || n.r_l < 0) {
        throw invalid("plant", "resistances must be >= 0");
    }
    if (n.i_0 < 0.0 || n.i_0 > l.i_0_max) throw invalid("plant.i_0", "must lie in [0, limits.i_0_max]");
    if (l.i_th > l.i_max) throw invalid("limits.i_th", "must not exceed limits.i_max");
    if (n.i_0 >= l.i_max) throw invalid("plant.i_0", "must be below limits.i_max");
}

namespace config {

void set(ScenarioConfig& cfg, std::string_view key_in, std::string_view value_in) {
    std::string key = trim(std::string(key_in));
    const std::string value = trim(std::string(value_in));
    if (key.empty() || value.empty()) throw Error(ErrorCode::parse_error, "expected 'key = value'");
    auto fail = [&](const std::string& why) { return Error(ErrorCode::parse_error, why); };
    auto number = [&]() {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw fail("key '" + key + "': '" + value + "' is not a number");
        }
        return v;
    };
    auto flag = [&]() {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        throw fail(key + " must be true or false");
    };

    if (key == "grid") {
        if (value == "high_inertia") cfg.grid = plant::GridKind::high_inertia;
        else if (value == "low_inertia") cfg.grid = plant::GridKind::low_inertia;
        else throw fail("grid must be high_inertia or low_inertia");
    } else if (key == "gfm") {
        if (value == "vsm") cfg.gfm = GfmKind::vsm;
        else if (value == "edpc") cfg.gfm = GfmKind::edpc;
        else throw fail("gfm must be vsm or edpc");
    } else if (key == "clc") {
        bool found = false;
        for (auto c : {ClcKind::none, ClcKind::scc, ClcKind::rlcc, ClcKind::avi, ClcKind::sf,
                       ClcKind::sf_noclf}) {
            if (value == to_string(c)) {
                cfg.clc = c;
                found = true;
            }
        }
        if (!found) throw fail("clc must be one of none, scc, rlcc, avi, sf, sf_noclf");
    } else if (key == "fault") {
        cfg.fault = flag();
    } else if (key == "restore_p_m") {
        cfg.restore_p_m = flag();
    } else if (key == "t_end") {
        cfg.t_end = number();
    } else if (key == "t_fault_on") {
        cfg.t_fault_on = number();
    } else if (key == "t_fault_off") {
        cfg.t_fault_off = number();
    } else if (key == "t_settle") {
        cfg.t_settle = number();
    } else if (key == "dt_plant") {
        cfg.dt_plant = number();
    } else if (key == "dt_ctrl") {
        cfg.dt_ctrl = number();
    } else if (key == "seed") {
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (ec != std::errc() || ptr != value.data() + value.size()) throw fail("seed must be an unsigned integer");
        cfg.seed = seed;
    } else {
        if (key.rfind("network.", 0) == 0) key = "plant." + key.substr(8);
        const ParamKey* target = nullptr;
        for (const auto& k : keys()) {
            if (key == std::string(k.section) + "." + k.name) target = &k;
        }
        if (!target) {
            for (const auto& k : keys()) {
                if (key != k.name) continue;
                if (target) throw fail("key '" + key + "' is ambiguous; use section.name");
                target = &k;
            }
        }
        if (!target) throw fail("unknown key '" + key + "'");
        target->ref(cfg.params) = number();
    }
}

ScenarioConfig parse(std::string_view text, std::string_view source) {
    ScenarioConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::parse_error, "expected 'key = value'");
            set(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(e.code(), std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::io_error, "cannot open config file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str(), path);
}

std::vector<std::pair<std::string, double>> parameter_listing(const Params& p) {
    Params copy = p;
    std::vector<std::pair<std::string, double>> out;
    for (const auto& k : keys()) out.emplace_back(std::string(k.section) + "." + k.name, k.ref(copy));
    return out;
}

}  // namespace config
}  // namespace gfmsf
