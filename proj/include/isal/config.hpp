#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isal/channel.hpp"
#include "isal/core_model.hpp"
#include "isal/errors.hpp"
#include "isal/fim.hpp"
#include "isal/rlm_owr.hpp"
#include "isal/schemes.hpp"

namespace isal {

using json = nlohmann::json;

inline constexpr int kConfigSchema = 1;

// Channel section as written in the file: gains and noise in dB.
struct ChannelConfig {
    double f_c = 77e9;
    double B = 500e6;
    double G_dB = 10.0;
    double N0_dBm_per_Hz = -174.0;
    double L_dB = 3.0;
    double sigma = 10.0;
    double P_a_max = 1.0;
    double P_r_max = 1.0;
    double E_total = 10.0;
    double eta2 = 0.01;
    double rho2 = 1e-10;

    ChannelParams to_params() const {
        ChannelParams p;
        p.carrier_frequency = f_c;
        p.bandwidth = B;
        p.antenna_gain = db_to_linear(G_dB);
        p.noise_psd = dbm_per_hz_to_watts_per_hz(N0_dBm_per_Hz);
        p.system_loss = db_to_linear(L_dB);
        p.radar_cross_section = sigma;
        p.anchor_power_cap = P_a_max;
        p.radar_power_cap = P_r_max;
        p.total_energy = E_total;
        p.velocity_variance = eta2;
        p.drift_rate_variance = rho2;
        return p;
    }
};

enum class SchemeSelection { Integrated, Stepwise, Both };

inline const char* to_string(SchemeSelection s) {
    switch (s) {
        case SchemeSelection::Integrated: return "integrated";
        case SchemeSelection::Stepwise: return "stepwise";
        case SchemeSelection::Both: return "both";
    }
    return "?";
}

inline SchemeSelection parse_scheme_selection(const std::string& s, const std::string& path = "scheme") {
    if (s == "integrated") return SchemeSelection::Integrated;
    if (s == "stepwise") return SchemeSelection::Stepwise;
    if (s == "both") return SchemeSelection::Both;
    throw ConfigError(path + ": expected integrated|stepwise|both, got '" + s + "'");
}

struct SolverConfig {
    double grid_step = 0.0;  // 0: E_total / 20
    double tolerance = 1e-7;
    int max_iterations = 10000;
    double temporal_offdiag_sign = 1.0;
    bool pruned = false;
};

struct ClockConfig {
    ClockModel clock;
    ExchangeConfig exchange;
    double drift_bound = 1e-3;
    std::uint64_t first_seed = 1;
};

struct NodeSpec {
    NodeKind kind;
    std::string id;
    std::vector<Position2D> positions;  // one per slot; anchors hold one
};

struct ScenarioConfig {
    std::string name;
    SyncMode mode = SyncMode::Synchronous;
    std::size_t slots = 1;
    std::vector<NodeSpec> nodes;
    ChannelConfig channel;
    SolverConfig solver;
    SchemeSelection scheme = SchemeSelection::Both;
    std::optional<ClockConfig> clock;

    NetworkScene scene() const {
        std::vector<Position2D> anchors;
        std::vector<SlotState> states(slots);
        for (const auto& n : nodes) {
            switch (n.kind) {
                case NodeKind::Anchor: anchors.push_back(n.positions.at(0)); break;
                case NodeKind::Radar:
                    for (std::size_t s = 0; s < slots; ++s) states[s].radars.push_back(n.positions.at(s));
                    break;
                case NodeKind::Target:
                    for (std::size_t s = 0; s < slots; ++s) states[s].targets.push_back(n.positions.at(s));
                    break;
            }
        }
        return NetworkScene(std::move(anchors), std::move(states), mode);
    }

    ChannelParams params() const { return channel.to_params(); }

    SchemeOptions scheme_options() const {
        SchemeOptions o;
        o.grid_step = solver.grid_step;
        o.solver.tolerance = solver.tolerance;
        o.solver.max_iterations = solver.max_iterations;
        o.temporal.offdiag_sign = solver.temporal_offdiag_sign;
        o.pruned = solver.pruned;
        return o;
    }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown field: " + (path.empty() ? "" : path + ".") + it.key());
        }
    }
}

inline const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    return j;
}

inline double get_number(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline Position2D parse_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(path + ": expected [x, y]");
    }
    Position2D p{j[0].get<double>(), j[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ConfigError(path + ": non-finite coordinate");
    return p;
}

inline NodeKind parse_kind(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected anchor|radar|target");
    const auto s = j.get<std::string>();
    if (s == "anchor") return NodeKind::Anchor;
    if (s == "radar") return NodeKind::Radar;
    if (s == "target") return NodeKind::Target;
    throw ConfigError(path + ": expected anchor|radar|target, got '" + s + "'");
}

inline ChannelConfig parse_channel(const json& j) {
    require_object(j, "channel");
    reject_unknown(j, {"f_c", "B", "G_dB", "N0_dBm_per_Hz", "L_dB", "sigma", "P_a_max", "P_r_max", "E_total", "eta2",
                       "rho2"},
                   "channel");
    ChannelConfig c;
    c.f_c = get_number(j, "f_c", "channel", c.f_c);
    c.B = get_number(j, "B", "channel", c.B);
    c.G_dB = get_number(j, "G_dB", "channel", c.G_dB);
    c.N0_dBm_per_Hz = get_number(j, "N0_dBm_per_Hz", "channel", c.N0_dBm_per_Hz);
    c.L_dB = get_number(j, "L_dB", "channel", c.L_dB);
    c.sigma = get_number(j, "sigma", "channel", c.sigma);
    c.P_a_max = get_number(j, "P_a_max", "channel", c.P_a_max);
    c.P_r_max = get_number(j, "P_r_max", "channel", c.P_r_max);
    c.E_total = get_number(j, "E_total", "channel", c.E_total);
    c.eta2 = get_number(j, "eta2", "channel", c.eta2);
    c.rho2 = get_number(j, "rho2", "channel", c.rho2);
    try {
        c.to_params().validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline SolverConfig parse_solver(const json& j) {
    require_object(j, "solver");
    reject_unknown(j, {"grid_step", "tolerance", "max_iterations", "temporal_offdiag_sign", "pruned"}, "solver");
    SolverConfig s;
    s.grid_step = get_number(j, "grid_step", "solver", s.grid_step);
    s.tolerance = get_number(j, "tolerance", "solver", s.tolerance);
    const double it = get_number(j, "max_iterations", "solver", s.max_iterations);
    s.temporal_offdiag_sign = get_number(j, "temporal_offdiag_sign", "solver", s.temporal_offdiag_sign);
    if (j.contains("pruned")) {
        if (!j.at("pruned").is_boolean()) throw ConfigError("solver.pruned: expected true|false");
        s.pruned = j.at("pruned").get<bool>();
    }
    if (!(s.grid_step >= 0.0)) throw ConfigError("solver.grid_step must be >= 0");
    if (!(s.tolerance > 0.0)) throw ConfigError("solver.tolerance must be > 0");
    if (!(it >= 1.0) || it != std::floor(it)) throw ConfigError("solver.max_iterations must be a positive integer");
    s.max_iterations = static_cast<int>(it);
    if (s.temporal_offdiag_sign != 1.0 && s.temporal_offdiag_sign != -1.0) {
        throw ConfigError("solver.temporal_offdiag_sign must be 1 or -1");
    }
    return s;
}

inline ClockConfig parse_clock(const json& j) {
    require_object(j, "clock");
    reject_unknown(j, {"offset", "drift_rate", "drift_bound", "slot1_send", "slot2_send", "forward_delay",
                       "reverse_delay", "processing_delay", "stamp_noise_sd", "first_seed"},
                   "clock");
    ClockConfig c;
    c.clock.offset = get_number(j, "offset", "clock", c.clock.offset);
    c.clock.drift_rate = get_number(j, "drift_rate", "clock", c.clock.drift_rate);
    c.drift_bound = get_number(j, "drift_bound", "clock", c.drift_bound);
    auto& x = c.exchange;
    x.slot1_send = get_number(j, "slot1_send", "clock", x.slot1_send);
    x.slot2_send = get_number(j, "slot2_send", "clock", x.slot2_send);
    x.forward_delay = get_number(j, "forward_delay", "clock", x.forward_delay);
    x.reverse_delay = get_number(j, "reverse_delay", "clock", x.reverse_delay);
    x.processing_delay = get_number(j, "processing_delay", "clock", x.processing_delay);
    x.stamp_noise_sd = get_number(j, "stamp_noise_sd", "clock", x.stamp_noise_sd);
    if (j.contains("first_seed")) {
        if (!j.at("first_seed").is_number_unsigned()) throw ConfigError("clock.first_seed: expected an unsigned integer");
        c.first_seed = j.at("first_seed").get<std::uint64_t>();
    }
    if (!(x.forward_delay >= 0.0)) throw ConfigError("clock.forward_delay must be >= 0");
    if (j.contains("reverse_delay") && !(x.reverse_delay >= 0.0)) throw ConfigError("clock.reverse_delay must be >= 0");
    if (!(x.processing_delay >= 0.0)) throw ConfigError("clock.processing_delay must be >= 0");
    if (!(x.stamp_noise_sd >= 0.0)) throw ConfigError("clock.stamp_noise_sd must be >= 0");
    if (!(x.slot2_send >= x.slot1_send)) throw ConfigError("clock.slot2_send must not precede clock.slot1_send");
    if (!(c.drift_bound > 0.0)) throw ConfigError("clock.drift_bound must be > 0");
    if (!(std::abs(c.clock.drift_rate) < c.drift_bound)) {
        throw ConfigError("clock.drift_rate exceeds clock.drift_bound");
    }
    return c;
}

}  // namespace detail

inline ScenarioConfig parse_config_json(const json& root) {
    detail::require_object(root, "(root)");
    detail::reject_unknown(root, {"schema", "name", "mode", "slots", "nodes", "channel", "solver", "scheme", "clock"}, "");
    if (!root.contains("schema")) throw ConfigError("schema: missing (expected 1)");
    if (!root.at("schema").is_number_integer() || root.at("schema").get<int>() != kConfigSchema) {
        throw ConfigError("schema: unsupported version (expected 1)");
    }
    ScenarioConfig cfg;
    if (root.contains("name")) {
        if (!root.at("name").is_string()) throw ConfigError("name: expected a string");
        cfg.name = root.at("name").get<std::string>();
    }
    if (root.contains("mode")) {
        const json& m = root.at("mode");
        const std::string s = m.is_string() ? m.get<std::string>() : "";
        if (s == "sync") cfg.mode = SyncMode::Synchronous;
        else if (s == "async") cfg.mode = SyncMode::Asynchronous;
        else throw ConfigError("mode: expected sync|async");
    }
    if (root.contains("slots")) {
        const json& s = root.at("slots");
        if (!s.is_number_integer() || (s.get<int>() != 1 && s.get<int>() != 2)) {
            throw ConfigError("slots: expected 1 or 2");
        }
        cfg.slots = static_cast<std::size_t>(s.get<int>());
    }
    if (root.contains("scheme")) {
        if (!root.at("scheme").is_string()) throw ConfigError("scheme: expected integrated|stepwise|both");
        cfg.scheme = parse_scheme_selection(root.at("scheme").get<std::string>());
    }
    if (root.contains("channel")) cfg.channel = detail::parse_channel(root.at("channel"));
    if (root.contains("solver")) cfg.solver = detail::parse_solver(root.at("solver"));
    if (root.contains("clock")) cfg.clock = detail::parse_clock(root.at("clock"));

    if (root.contains("nodes")) {
        const json& nodes = root.at("nodes");
        if (!nodes.is_array()) throw ConfigError("nodes: expected an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string path = "nodes[" + std::to_string(i) + "]";
            const json& n = detail::require_object(nodes[i], path);
            detail::reject_unknown(n, {"kind", "id", "position", "positions"}, path);
            if (!n.contains("kind")) throw ConfigError(path + ".kind: missing");
            NodeSpec spec;
            spec.kind = detail::parse_kind(n.at("kind"), path + ".kind");
            if (!n.contains("id") || !n.at("id").is_string()) throw ConfigError(path + ".id: expected a string");
            spec.id = n.at("id").get<std::string>();
            if (!ids.insert(spec.id).second) throw ConfigError(path + ".id: duplicate node id '" + spec.id + "'");
            const bool one = n.contains("position");
            const bool many = n.contains("positions");
            if (one == many) throw ConfigError(path + ": give exactly one of position, positions");
            if (one) {
                spec.positions.push_back(detail::parse_point(n.at("position"), path + ".position"));
            } else {
                const json& ps = n.at("positions");
                if (!ps.is_array()) throw ConfigError(path + ".positions: expected an array of [x, y]");
                for (std::size_t s = 0; s < ps.size(); ++s) {
                    spec.positions.push_back(
                        detail::parse_point(ps[s], path + ".positions[" + std::to_string(s) + "]"));
                }
            }
            if (spec.kind == NodeKind::Anchor) {
                if (spec.positions.size() != 1) throw ConfigError(path + ": anchors take a single position");
            } else if (spec.positions.size() == 1 && cfg.slots == 2) {
                throw ConfigError(path + ".positions: expected one position per slot (2)");
            } else if (spec.positions.size() != cfg.slots && !(one && cfg.slots == 1)) {
                throw ConfigError(path + ".positions: expected " + std::to_string(cfg.slots) + " positions");
            }
            cfg.nodes.push_back(std::move(spec));
        }
    }
    try {
        (void)cfg.scene();
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("nodes: ") + e.what());
    }
    return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config_json(root);
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline json to_json(const Position2D& p) { return json::array({p.x, p.y}); }

inline json export_config_json(const ScenarioConfig& cfg) {
    json root;
    root["schema"] = kConfigSchema;
    if (!cfg.name.empty()) root["name"] = cfg.name;
    root["mode"] = to_string(cfg.mode);
    root["slots"] = cfg.slots;
    json nodes = json::array();
    for (const auto& n : cfg.nodes) {
        json j;
        j["kind"] = to_string(n.kind);
        j["id"] = n.id;
        if (n.kind == NodeKind::Anchor) {
            j["position"] = to_json(n.positions.at(0));
        } else {
            json ps = json::array();
            for (const auto& p : n.positions) ps.push_back(to_json(p));
            j["positions"] = ps;
        }
        nodes.push_back(j);
    }
    root["nodes"] = nodes;
    const auto& c = cfg.channel;
    root["channel"] = {{"f_c", c.f_c},     {"B", c.B},         {"G_dB", c.G_dB},       {"N0_dBm_per_Hz", c.N0_dBm_per_Hz},
                       {"L_dB", c.L_dB},   {"sigma", c.sigma}, {"P_a_max", c.P_a_max}, {"P_r_max", c.P_r_max},
                       {"E_total", c.E_total}, {"eta2", c.eta2}, {"rho2", c.rho2}};
    root["solver"] = {{"grid_step", cfg.solver.grid_step},
                      {"tolerance", cfg.solver.tolerance},
                      {"max_iterations", cfg.solver.max_iterations},
                      {"temporal_offdiag_sign", cfg.solver.temporal_offdiag_sign},
                      {"pruned", cfg.solver.pruned}};
    root["scheme"] = to_string(cfg.scheme);
    if (cfg.clock) {
        const auto& k = *cfg.clock;
        root["clock"] = {{"offset", k.clock.offset},
                         {"drift_rate", k.clock.drift_rate},
                         {"drift_bound", k.drift_bound},
                         {"slot1_send", k.exchange.slot1_send},
                         {"slot2_send", k.exchange.slot2_send},
                         {"forward_delay", k.exchange.forward_delay},
                         {"reverse_delay", k.exchange.reverse_delay},
                         {"processing_delay", k.exchange.processing_delay},
                         {"stamp_noise_sd", k.exchange.stamp_noise_sd},
                         {"first_seed", k.first_seed}};
    }
    return root;
}

/// Config describing `scene`, nodes named a1.., r1.., t1.
inline ScenarioConfig config_from_scene(const NetworkScene& scene, const std::string& name = {}) {
    ScenarioConfig cfg;
    cfg.name = name;
    cfg.mode = scene.mode();
    cfg.slots = scene.slot_count();
    for (std::size_t a = 0; a < scene.anchor_count(); ++a) {
        cfg.nodes.push_back({NodeKind::Anchor, "a" + std::to_string(a + 1), {scene.anchors()[a]}});
    }
    for (std::size_t r = 0; r < scene.radar_count(); ++r) {
        NodeSpec n{NodeKind::Radar, "r" + std::to_string(r + 1), {}};
        for (std::size_t s = 0; s < scene.slot_count(); ++s) n.positions.push_back(scene.slot(s).radars[r]);
        cfg.nodes.push_back(std::move(n));
    }
    NodeSpec t{NodeKind::Target, "t1", {}};
    for (std::size_t s = 0; s < scene.slot_count(); ++s) t.positions.push_back(scene.slot(s).targets[0]);
    cfg.nodes.push_back(std::move(t));
    return cfg;
}

// ---- output ---------------------------------------------------------------

inline std::string fmt_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes through a sibling temp file and renames it into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw Error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline const char* kTraceHeader = "scheme,lattice_index,e_1,e_2,e_3,speb_stage_1,speb_stage_2,speb_stage_3,final_speb";
inline const char* kSummaryHeader =
    "scheme,mode,slots,best_e_1,best_e_2,best_e_3,best_speb,stage,stage_budget_j,node,power_w";

inline void append_trace_rows(std::string& out, const AllocationReport& report) {
    for (const auto& row : report.trace) {
        out += to_string(report.scheme);
        out += "," + std::to_string(row.lattice_index);
        for (std::size_t k = 0; k < 3; ++k) {
            out += ",";
            if (k < row.split.parts.size()) out += fmt_number(row.split.parts[k]);
        }
        for (std::size_t k = 0; k < 3; ++k) {
            out += ",";
            if (k < row.stage_objectives.size()) out += fmt_number(row.stage_objectives[k]);
        }
        out += "," + fmt_number(row.objective) + "\n";
    }
}

inline std::string stage_label(const StageResult& s) {
    return "s" + std::to_string(s.slot + 1) + "." + to_string(s.step);
}

inline void append_summary_rows(std::string& out, const AllocationReport& report, const NetworkScene& scene) {
    std::string head = std::string(to_string(report.scheme)) + "," + to_string(report.mode) + "," +
                       std::to_string(report.slot_count);
    for (std::size_t k = 0; k < 3; ++k) {
        head += ",";
        if (k < report.best_split.parts.size()) head += fmt_number(report.best_split.parts[k]);
    }
    head += "," + fmt_number(report.best_objective);
    for (const auto& stage : report.stages) {
        for (std::size_t j = 0; j < stage.solution.powers.watts.size(); ++j) {
            out += head + "," + stage_label(stage) + "," + fmt_number(stage.budget) + "," +
                   to_string(power_node(scene, j)) + "," + fmt_number(stage.solution.powers.watts[j]) + "\n";
        }
    }
}

inline std::string trace_csv(const std::vector<AllocationReport>& reports) {
    std::string out = std::string(kTraceHeader) + "\n";
    for (const auto& r : reports) append_trace_rows(out, r);
    return out;
}

inline std::string summary_csv(const std::vector<AllocationReport>& reports, const NetworkScene& scene) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& r : reports) append_summary_rows(out, r, scene);
    return out;
}

inline std::string fim_dump_text(const std::vector<AllocationReport>& reports) {
    std::ostringstream os;
    for (const auto& r : reports) {
        os << "# " << to_string(r.scheme) << "\n";
        write_fim_dump(os, r.final_fim, r.layout);
    }
    return os.str();
}

inline std::string drift_csv(const DriftStudy& study) {
    std::string out = "seed,tau_a,tau_b,k_tau\n";
    for (std::size_t i = 0; i < study.estimates.size(); ++i) {
        const auto& e = study.estimates[i];
        out += std::to_string(study.seeds[i]) + "," + fmt_number(e.tau_a) + "," + fmt_number(e.tau_b) + "," +
               fmt_number(e.drift_rate) + "\n";
    }
    return out;
}

inline std::string drift_summary_csv(const DriftStudy& study) {
    return "seeds,mean_k_tau,variance_k_tau,analytic_rho2\n" + std::to_string(study.estimates.size()) + "," +
           fmt_number(study.mean) + "," + fmt_number(study.variance) + "," + fmt_number(study.analytic_variance) +
           "\n";
}

}  // namespace isal
