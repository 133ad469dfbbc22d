#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "heatflat/scenario.hpp"

namespace heatflat {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Scenario <-> JSON
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->template get<T>();
}

inline double require_number(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw std::invalid_argument(where + ": missing numeric field '" + key + "'");
    }
    return it->get<double>();
}

}  // namespace detail

inline json to_json(const ReferenceSpec& s) {
    return json{{"family", std::string(to_string(s.family))},
                {"amplitude", s.amplitude},
                {"rate", s.rate},
                {"offset", s.offset},
                {"t_start", s.t_start},
                {"t_end", s.t_end}};
}

inline ReferenceSpec reference_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("phase: expected an object");
    ReferenceSpec s;
    s.family = parse_family(j.at("family").get<std::string>());
    s.amplitude = detail::require_number(j, "amplitude", "phase");
    s.rate = detail::get_or(j, "rate", 0.0);
    s.offset = detail::get_or(j, "offset", 0.0);
    s.t_start = detail::require_number(j, "t_start", "phase");
    s.t_end = detail::require_number(j, "t_end", "phase");
    if ((s.family == ReferenceFamily::Sinusoid || s.family == ReferenceFamily::Exponential) && !j.contains("rate")) {
        throw std::invalid_argument("phase: '" + std::string(to_string(s.family)) + "' requires 'rate'");
    }
    return s;
}

inline json to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["plant"] = {{"d", c.plant.d},         {"D", c.plant.D},         {"d_min", c.plant.d_min},
                  {"d_max", c.plant.d_max}, {"D_min", c.plant.D_min}, {"D_max", c.plant.D_max},
                  {"d_nom", c.plant.d_nom}, {"D_nom", c.plant.D_nom}};
    j["grid_nodes"] = c.grid_nodes;
    j["dt"] = c.dt;
    j["horizon"] = c.horizon;
    j["phases"] = json::array();
    for (const auto& p : c.phases) j["phases"].push_back(to_json(p));
    j["gains"] = {{"lambda1", c.gains.lambda1},
                  {"lambda2", c.gains.lambda2},
                  {"lambda3", c.gains.lambda3},
                  {"D_nom", c.gains.D_nom}};
    json dist;
    switch (c.disturbance.kind) {
        case DisturbanceKind::None: dist["kind"] = "none"; break;
        case DisturbanceKind::RampPlusSine:
            dist = {{"kind", "ramp_plus_sine"}, {"a", c.disturbance.a}, {"b", c.disturbance.b},
                    {"omega", c.disturbance.omega}};
            break;
        case DisturbanceKind::Table:
            dist = {{"kind", "table"}, {"t", c.disturbance.table_t}, {"phi", c.disturbance.table_phi}};
            break;
    }
    dist["L"] = c.disturbance.lipschitz;
    j["disturbance"] = dist;
    j["planning"] = c.planning == PlanningMode::Exact ? "exact" : "nominal";
    j["profile_mode"] = c.profile_mode == ProfileMode::ClosedForm ? "closed_form" : "series";
    j["series_terms"] = c.series_terms;
    switch (c.initial.kind) {
        case InitialKind::Zero: j["initial"] = {{"kind", "zero"}}; break;
        case InitialKind::Constant: j["initial"] = {{"kind", "constant"}, {"value", c.initial.value}}; break;
        case InitialKind::Table: j["initial"] = {{"kind", "table"}, {"values", c.initial.values}}; break;
        case InitialKind::Reference: j["initial"] = {{"kind", "reference"}}; break;
    }
    j["nu0"] = c.nu0;
    j["sensor"] = c.sensor == SensorReference::Physical ? "physical" : "nominal";
    j["output"] = c.output;
    j["decimation"] = c.decimation;
    j["snapshot_interval"] = c.snapshot_interval;
    return j;
}

/// Parses a scenario document. Missing optional fields take the defaults of
/// ScenarioConfig; gains.D_nom defaults to plant.D_nom.
inline ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    ScenarioConfig c;
    try {
        c.name = detail::get_or<std::string>(j, "name", c.name);
        const auto& p = j.at("plant");
        c.plant.d = detail::require_number(p, "d", "plant");
        c.plant.D = detail::require_number(p, "D", "plant");
        c.plant.d_min = detail::get_or(p, "d_min", c.plant.d);
        c.plant.d_max = detail::get_or(p, "d_max", c.plant.d);
        c.plant.D_min = detail::get_or(p, "D_min", c.plant.D);
        c.plant.D_max = detail::get_or(p, "D_max", c.plant.D);
        c.plant.d_nom = detail::get_or(p, "d_nom", c.plant.d);
        c.plant.D_nom = detail::get_or(p, "D_nom", c.plant.D);

        c.grid_nodes = detail::get_or<std::size_t>(j, "grid_nodes", c.grid_nodes);
        c.dt = detail::require_number(j, "dt", "config");
        c.horizon = detail::require_number(j, "horizon", "config");

        const auto& phases = j.at("phases");
        if (!phases.is_array()) throw std::invalid_argument("config: 'phases' must be an array");
        for (const auto& ph : phases) c.phases.push_back(reference_from_json(ph));

        const auto& g = j.at("gains");
        c.gains.lambda1 = detail::require_number(g, "lambda1", "gains");
        c.gains.lambda2 = detail::get_or(g, "lambda2", 0.0);
        c.gains.lambda3 = detail::get_or(g, "lambda3", 0.0);
        c.gains.D_nom = detail::get_or(g, "D_nom", c.plant.D_nom);

        if (const auto it = j.find("disturbance"); it != j.end()) {
            const auto& dj = *it;
            const auto kind = dj.at("kind").get<std::string>();
            const double lip = detail::get_or(dj, "L", 0.0);
            if (kind == "none") {
                c.disturbance = DisturbanceModel::none();
                c.disturbance.lipschitz = lip;
            } else if (kind == "ramp_plus_sine") {
                c.disturbance = DisturbanceModel::ramp_plus_sine(detail::get_or(dj, "a", 0.0), detail::get_or(dj, "b", 0.0),
                                                                 detail::get_or(dj, "omega", 0.0), lip);
            } else if (kind == "table") {
                c.disturbance = DisturbanceModel::table(dj.at("t").get<std::vector<double>>(),
                                                        dj.at("phi").get<std::vector<double>>(), lip);
            } else {
                throw std::invalid_argument("disturbance: unknown kind '" + kind + "'");
            }
        }

        const auto planning = detail::get_or<std::string>(j, "planning", "exact");
        if (planning == "exact") c.planning = PlanningMode::Exact;
        else if (planning == "nominal") c.planning = PlanningMode::Nominal;
        else throw std::invalid_argument("config: planning must be 'exact' or 'nominal'");

        const auto mode = detail::get_or<std::string>(j, "profile_mode", "closed_form");
        if (mode == "closed_form") c.profile_mode = ProfileMode::ClosedForm;
        else if (mode == "series") c.profile_mode = ProfileMode::Series;
        else throw std::invalid_argument("config: profile_mode must be 'closed_form' or 'series'");

        c.series_terms = detail::get_or(j, "series_terms", c.series_terms);

        if (const auto it = j.find("initial"); it != j.end()) {
            const auto kind = it->at("kind").get<std::string>();
            if (kind == "zero") c.initial.kind = InitialKind::Zero;
            else if (kind == "constant") {
                c.initial.kind = InitialKind::Constant;
                c.initial.value = detail::require_number(*it, "value", "initial");
            } else if (kind == "table") {
                c.initial.kind = InitialKind::Table;
                c.initial.values = it->at("values").get<std::vector<double>>();
            } else if (kind == "reference") c.initial.kind = InitialKind::Reference;
            else throw std::invalid_argument("initial: unknown kind '" + kind + "'");
        }

        c.nu0 = detail::get_or(j, "nu0", 0.0);
        const auto sensor = detail::get_or<std::string>(j, "sensor", "physical");
        if (sensor == "physical") c.sensor = SensorReference::Physical;
        else if (sensor == "nominal") c.sensor = SensorReference::Nominal;
        else throw std::invalid_argument("config: sensor must be 'physical' or 'nominal'");

        c.output = detail::get_or<std::string>(j, "output", "");
        c.decimation = detail::get_or<std::size_t>(j, "decimation", c.decimation);
        c.snapshot_interval = detail::get_or(j, "snapshot_interval", c.snapshot_interval);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV / summary
// ---------------------------------------------------------------------------

inline constexpr const char* kRunCsvHeader = "t,y,r,q,nu,phi,err_norm,V,Gamma,delta";
inline constexpr const char* kFieldCsvHeader = "t,x,u,u_ref";

inline void write_csv(std::ostream& os, const std::vector<DiagnosticsRow>& log) {
    if (log.empty()) throw std::invalid_argument("emit_csv: log is empty");
    os << kRunCsvHeader << '\n';
    for (const auto& r : log) {
        os << format_double(r.t) << ',' << format_double(r.y) << ',' << format_double(r.r) << ','
           << format_double(r.q) << ',' << format_double(r.nu) << ',' << format_double(r.phi) << ','
           << format_double(r.err_norm) << ',' << format_double(r.V) << ',' << format_double(r.Gamma) << ','
           << format_double(r.delta) << '\n';
    }
}

namespace detail {

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace detail

inline void emit_csv(const std::vector<DiagnosticsRow>& log, const std::filesystem::path& path) {
    if (log.empty()) throw std::invalid_argument("emit_csv: log is empty");
    detail::write_file(path, [&](std::ostream& os) { write_csv(os, log); });
}

/// One row per node per snapshot.
inline void write_field_csv(std::ostream& os, const std::vector<FieldSnapshot>& snaps, const Grid& grid) {
    os << kFieldCsvHeader << '\n';
    for (const auto& s : snaps) {
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            os << format_double(s.t) << ',' << format_double(grid[i]) << ',' << format_double(s.u[i]) << ','
               << format_double(s.u_ref[i]) << '\n';
        }
    }
}

inline void write_summary(std::ostream& os, const ScenarioConfig& c, const RunSummary& s) {
    os << "scenario=" << c.name << '\n';
    os << "planning=" << (c.planning == PlanningMode::Exact ? "exact" : "nominal") << '\n';
    os << "steps=" << s.steps << '\n';
    os << "dt=" << format_double(c.dt) << '\n';
    os << "horizon=" << format_double(c.horizon) << '\n';
    os << "phases=" << s.phases.size() << '\n';
    for (std::size_t i = 0; i < s.phases.size(); ++i) {
        const auto& p = s.phases[i];
        const std::string k = "phase" + std::to_string(i + 1) + ".";
        os << k << "family=" << to_string(p.family) << '\n';
        os << k << "t_start=" << format_double(p.t_start) << '\n';
        os << k << "t_end=" << format_double(p.t_end) << '\n';
        os << k << "max_tracking_error=" << format_double(p.max_tracking_error) << '\n';
        os << k << "max_estimation_error=" << format_double(p.max_estimation_error) << '\n';
        os << k << "max_estimation_ratio=" << format_double(p.max_estimation_ratio) << '\n';
        os << k << "decay_rate=" << format_double(p.decay_rate) << '\n';
        os << k << "decay_r_squared=" << format_double(p.decay_r_squared) << '\n';
    }
    os << "gamma0=" << format_double(s.gamma0) << '\n';
    os << "tail_gamma=" << format_double(s.tail_gamma) << '\n';
    os << "final_err_norm=" << format_double(s.final_err_norm) << '\n';
    os << "max_control_jump=" << format_double(s.max_control_jump) << '\n';
    os << "sup_phi=" << format_double(s.sup_phi) << '\n';
    os << "sup_phi_rate=" << format_double(s.sup_phi_rate) << '\n';
}

struct WrittenOutputs {
    std::filesystem::path run_csv;
    std::filesystem::path summary;
    std::filesystem::path field_csv;  ///< empty when no snapshots were taken
};

/// Writes run.csv, summary.txt and (if snapshots exist) field.csv into `dir`.
inline WrittenOutputs write_outputs(const std::filesystem::path& dir, const ScenarioConfig& c, const RunResult& r) {
    WrittenOutputs w;
    w.run_csv = dir / "run.csv";
    w.summary = dir / "summary.txt";
    emit_csv(r.log, w.run_csv);
    detail::write_file(w.summary, [&](std::ostream& os) { write_summary(os, c, r.summary); });
    if (!r.snapshots.empty()) {
        w.field_csv = dir / "field.csv";
        const Grid grid(c.plant.D, c.grid_nodes);
        detail::write_file(w.field_csv, [&](std::ostream& os) { write_field_csv(os, r.snapshots, grid); });
    }
    return w;
}

}  // namespace heatflat
