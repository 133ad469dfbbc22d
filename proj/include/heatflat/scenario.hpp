#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatflat/analysis.hpp"
#include "heatflat/control.hpp"
#include "heatflat/motion_planning.hpp"
#include "heatflat/pde_core.hpp"

namespace heatflat {

enum class PlanningMode { Exact, Nominal };

/// Where the controller samples u_bar for the boundary error.
enum class SensorReference { Physical, Nominal };

enum class InitialKind { Zero, Constant, Table, Reference };

struct InitialProfile {
    InitialKind kind = InitialKind::Zero;
    double value = 0.0;
    std::vector<double> values;
};

struct ScenarioConfig {
    std::string name = "custom";
    PlantConfig plant;
    std::size_t grid_nodes = 51;
    double dt = 0.05;
    double horizon = 0.0;
    std::vector<ReferenceSpec> phases;
    ControllerGains gains;
    DisturbanceModel disturbance;
    PlanningMode planning = PlanningMode::Exact;
    ProfileMode profile_mode = ProfileMode::ClosedForm;
    int series_terms = 30;
    InitialProfile initial;
    double nu0 = 0.0;
    SensorReference sensor = SensorReference::Physical;
    std::string output;
    std::size_t decimation = 20;
    double snapshot_interval = 200.0;

    [[nodiscard]] std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
    [[nodiscard]] double plan_d() const { return planning == PlanningMode::Exact ? plant.d : plant.d_nom; }
    [[nodiscard]] double plan_D() const { return planning == PlanningMode::Exact ? plant.D : plant.D_nom; }
    [[nodiscard]] double sensor_position() const {
        return sensor == SensorReference::Physical ? plant.D : plant.D_nom;
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { Info, Warning, Error };

struct ValidationItem {
    Severity severity = Severity::Info;
    std::string check;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationItem> items;

    [[nodiscard]] bool ok() const {
        return std::none_of(items.begin(), items.end(),
                            [](const ValidationItem& i) { return i.severity == Severity::Error; });
    }
    [[nodiscard]] std::size_t count(Severity s) const {
        return static_cast<std::size_t>(
            std::count_if(items.begin(), items.end(), [s](const ValidationItem& i) { return i.severity == s; }));
    }
    [[nodiscard]] std::string errors() const {
        std::ostringstream os;
        for (const auto& i : items) {
            if (i.severity == Severity::Error) os << i.check << ": " << i.message << '\n';
        }
        return os.str();
    }
    void add(Severity s, std::string check, std::string message) {
        items.push_back({s, std::move(check), std::move(message)});
    }
};

inline std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Info: return "ok";
        case Severity::Warning: return "WARN";
        case Severity::Error: return "FAIL";
    }
    return "?";
}

/// Gain margins are warnings, never errors: the reference experiment itself
/// sits on the lambda1 boundary.
inline ValidationReport validate_scenario(const ScenarioConfig& c) {
    ValidationReport rep;
    try {
        c.plant.validate();
        rep.add(Severity::Info, "plant", "parameters inside their bounds");
    } catch (const std::invalid_argument& e) {
        rep.add(Severity::Error, "plant", e.what());
        return rep;
    }
    if (c.grid_nodes < 3) {
        rep.add(Severity::Error, "grid", "at least 3 nodes are required");
        return rep;
    }
    if (!(c.dt > 0.0) || !(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
        rep.add(Severity::Error, "time", "dt and horizon must be positive and finite");
        return rep;
    }
    if (std::abs(static_cast<double>(c.steps()) * c.dt - c.horizon) > 1e-9 * c.horizon) {
        rep.add(Severity::Warning, "time", "horizon is not an integer multiple of dt; rounded");
    }
    if (c.decimation == 0) rep.add(Severity::Error, "output", "decimation must be >= 1");
    if (c.series_terms < 0) rep.add(Severity::Error, "planning", "series_terms must be >= 0");

    const Grid grid(c.plant.D, c.grid_nodes);
    const auto cfl = check_cfl(c.plant, grid, c.dt);
    rep.add(cfl.accepted ? Severity::Info : Severity::Error, "cfl", cfl.message);

    if (c.phases.empty()) {
        rep.add(Severity::Error, "phases", "at least one reference phase is required");
    } else {
        const double tol = 1e-9 * std::max(1.0, c.horizon);
        bool contiguous = std::abs(c.phases.front().t_start) <= tol &&
                          std::abs(c.phases.back().t_end - c.horizon) <= tol;
        for (std::size_t i = 0; i < c.phases.size(); ++i) {
            if (!(c.phases[i].t_end > c.phases[i].t_start)) contiguous = false;
            if (i + 1 < c.phases.size() && std::abs(c.phases[i].t_end - c.phases[i + 1].t_start) > tol) {
                contiguous = false;
            }
        }
        rep.add(contiguous ? Severity::Info : Severity::Error, "phases",
                contiguous ? "windows are contiguous and cover [0, horizon)"
                           : "windows must be contiguous, nonoverlapping and cover [0, horizon)");

        for (std::size_t i = 0; i < c.phases.size(); ++i) {
            const auto& p = c.phases[i];
            const std::string tag = "phase " + std::to_string(i + 1);
            const auto adm = check_admissibility(p, c.plan_d(), c.plan_D(), c.series_terms);
            rep.add(adm.accepted ? Severity::Info : Severity::Error, tag + " admissibility", adm.message);
            if (c.planning == PlanningMode::Nominal) {
                const auto unc = check_uncertain_planning(p, c.plant.d_nom, c.plant.D_max, c.series_terms);
                rep.add(unc.accepted ? Severity::Info : Severity::Warning, tag + " uncertain planning", unc.message);
            }
            const auto gev = gevrey_check(p, c.plan_d(), c.plan_D(), c.series_terms);
            rep.add(gev.exists ? Severity::Info : Severity::Warning, tag + " gevrey", gev.message);
        }
    }

    try {
        validate_disturbance(c.disturbance);
        std::ostringstream os;
        os << "sup|phi'| = " << disturbance_rate_bound(c.disturbance) << " <= L = " << c.disturbance.lipschitz;
        rep.add(Severity::Info, "disturbance", os.str());
    } catch (const std::invalid_argument& e) {
        rep.add(Severity::Error, "disturbance", e.what());
    }

    const auto gv = validate_gains(c.gains, c.plant, c.disturbance.lipschitz);
    {
        std::ostringstream os;
        os << "margins lambda1 " << gv.margin_lambda1;
        if (gv.robust) os << ", lambda2 " << gv.margin_lambda2 << ", lambda3 " << gv.margin_lambda3;
        rep.add(Severity::Info, "gains", os.str());
    }
    for (const auto& msg : gv.violations) rep.add(Severity::Warning, "gains", msg);
    if (!(c.gains.D_nom > 0.0)) rep.add(Severity::Error, "gains", "D_nom must be positive");

    if (c.initial.kind == InitialKind::Table && c.initial.values.size() != c.grid_nodes) {
        rep.add(Severity::Error, "initial", "table length must equal grid_nodes");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Closed-loop run
// ---------------------------------------------------------------------------

class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(std::size_t step, const std::string& what)
        : std::runtime_error("simulation diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> u_ref;
};

struct PhaseSummary {
    ReferenceFamily family = ReferenceFamily::Constant;
    double t_start = 0.0;
    double t_end = 0.0;
    double max_tracking_error = 0.0;     ///< max |y - r| over the final 50% of the phase
    double max_estimation_error = 0.0;   ///< max |nu + phi| over the final 25%
    double max_estimation_ratio = 0.0;   ///< max |nu + phi| / (1 + sup_[0,t] |phi|) over the final 25%
    double decay_rate = std::numeric_limits<double>::quiet_NaN();
    double decay_r_squared = std::numeric_limits<double>::quiet_NaN();
};

struct RunSummary {
    std::size_t steps = 0;
    std::vector<PhaseSummary> phases;
    double max_control_jump = 0.0;  ///< max |q(t+dt) - q(t)| over every step
    double tail_gamma = 0.0;        ///< sup Gamma over the final 20% of the horizon
    double gamma0 = 0.0;
    double final_err_norm = 0.0;
    double sup_phi = 0.0;
    double sup_phi_rate = 0.0;
};

struct RunResult {
    std::vector<DiagnosticsRow> log;
    std::vector<FieldSnapshot> snapshots;
    RunSummary summary;
};

namespace detail {

inline std::vector<double> initial_profile(const ScenarioConfig& c, const Grid& grid, const ReferenceProfile& first) {
    switch (c.initial.kind) {
        case InitialKind::Zero:
            return std::vector<double>(grid.size(), 0.0);
        case InitialKind::Constant:
            return std::vector<double>(grid.size(), c.initial.value);
        case InitialKind::Table:
            return c.initial.values;
        case InitialKind::Reference: {
            std::vector<double> u(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) u[i] = first.state(grid[i], 0.0);
            return u;
        }
    }
    return {};
}

}  // namespace detail

inline RunResult run_scenario(const ScenarioConfig& c) {
    const auto report = validate_scenario(c);
    if (!report.ok()) throw std::invalid_argument("invalid scenario:\n" + report.errors());

    const Grid grid(c.plant.D, c.grid_nodes);
    const std::size_t n_nodes = grid.size();
    std::vector<ReferenceProfile> profiles;
    profiles.reserve(c.phases.size());
    for (const auto& p : c.phases) profiles.emplace_back(p, c.plan_d(), c.plan_D(), c.profile_mode, c.series_terms);

    const std::size_t n_steps = c.steps();
    const double sensor_x = c.sensor_position();
    const std::size_t snapshot_stride =
        c.snapshot_interval > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.snapshot_interval / c.dt)))
                                  : 0;
    const bool robust = c.gains.robust();

    RunResult result;
    result.log.reserve(n_steps / c.decimation + 2);
    auto& summary = result.summary;
    summary.steps = n_steps;
    summary.sup_phi_rate = disturbance_rate_bound(c.disturbance);
    for (const auto& p : c.phases) {
        PhaseSummary ps;
        ps.family = p.family;
        ps.t_start = p.t_start;
        ps.t_end = p.t_end;
        summary.phases.push_back(ps);
    }

    FieldState state{detail::initial_profile(c, grid, profiles.front()), 0.0};
    ControllerState ctrl{c.nu0, 0.0};
    std::vector<double> rhs(n_nodes);
    std::vector<double> err(n_nodes);
    std::vector<double> ref(n_nodes);
    std::size_t phase = 0;
    double prev_q = 0.0;

    for (std::size_t n = 0; n <= n_steps; ++n) {
        const double t = static_cast<double>(n) * c.dt;
        while (phase + 1 < c.phases.size() && t >= c.phases[phase].t_end) ++phase;
        const auto& prof = profiles[phase];
        auto& ps = summary.phases[phase];

        const double y = state.u.front();
        const double r = prof.output(t);
        const auto dist = eval_disturbance(c.disturbance, t);
        summary.sup_phi = std::max(summary.sup_phi, std::abs(dist.phi));

        const auto out = control_step(state.u.back(), prof.state(sensor_x, t), prof.input(t), c.gains, ctrl, c.dt);
        if (n > 0) summary.max_control_jump = std::max(summary.max_control_jump, std::abs(out.q - prev_q));
        prev_q = out.q;

        const double len = ps.t_end - ps.t_start;
        if (t >= ps.t_start + 0.5 * len) ps.max_tracking_error = std::max(ps.max_tracking_error, std::abs(y - r));
        if (t >= ps.t_start + 0.75 * len) {
            const double est = std::abs(ctrl.nu + dist.phi);
            ps.max_estimation_error = std::max(ps.max_estimation_error, est);
            ps.max_estimation_ratio = std::max(ps.max_estimation_ratio, est / (1.0 + summary.sup_phi));
        }

        const bool log_now = n % c.decimation == 0 || n == n_steps;
        const bool snap_now = snapshot_stride > 0 && n % snapshot_stride == 0;
        if (log_now || snap_now) {
            for (std::size_t i = 0; i < n_nodes; ++i) {
                ref[i] = prof.state(grid[i], t);
                err[i] = state.u[i] - ref[i];
            }
            if (log_now) {
                DiagnosticsRow row;
                row.t = t;
                row.y = y;
                row.r = r;
                row.q = out.q;
                row.nu = ctrl.nu;
                row.phi = dist.phi;
                row.delta = ctrl.nu + dist.phi;
                row.err_norm = l2_norm(err, grid);
                row.V = lyapunov_value(row.err_norm, row.delta, robust);
                row.Gamma = composite_norm(row.err_norm, row.delta);
                result.log.push_back(row);
            }
            if (snap_now) result.snapshots.push_back({t, state.u, ref});
        }
        if (n == n_steps) break;

        if (!std::isfinite(out.q + dist.phi)) throw SimulationDiverged(n, "non-finite boundary flux");
        semi_discrete_rhs(state.u, c.plant, grid, out.q + dist.phi, rhs);
        step_explicit_euler_in_place(state, rhs, c.dt);
        state.t = static_cast<double>(n + 1) * c.dt;
        ctrl = out.next;
        if (!std::isfinite(ctrl.nu) || !state.finite()) {
            throw SimulationDiverged(n + 1, "non-finite state or integrator value");
        }
    }

    // Derived statistics from the log.
    const auto& log = result.log;
    summary.gamma0 = log.front().Gamma;
    summary.final_err_norm = log.back().err_norm;
    const double tail_from = 0.8 * c.horizon;
    for (const auto& row : log) {
        if (row.t >= tail_from) summary.tail_gamma = std::max(summary.tail_gamma, row.Gamma);
    }
    std::vector<double> ts;
    std::vector<double> norms;
    for (auto& ps : summary.phases) {
        ts.clear();
        norms.clear();
        for (const auto& row : log) {
            if (row.t >= ps.t_start && row.t < ps.t_end) {
                ts.push_back(row.t);
                norms.push_back(row.err_norm);
            }
        }
        if (ts.size() < 5) continue;
        try {
            const auto fit = fit_decay_rate(ts, norms);
            ps.decay_rate = fit.rate;
            ps.decay_r_squared = fit.r_squared;
        } catch (const std::invalid_argument&) {
        }
    }
    return result;
}

/// The four-phase reference experiment: ramp, constant, decaying
/// exponential, sinusoid on a 10-unit rod with a ramp-plus-sine
/// boundary disturbance.
inline ScenarioConfig paper_scenario(bool uncertain_planning) {
    ScenarioConfig c;
    c.name = uncertain_planning ? "paper-uncertain" : "paper-exact";
    c.plant = PlantConfig{};  // d = 0.05, D = 10, d_nom = 0.06, D_nom = 9
    c.grid_nodes = 51;
    c.dt = 0.05;
    c.horizon = 4.0e4;
    c.phases = {
        ReferenceSpec::ramp(1.0e-3, 0.0, 1.0e4),
        ReferenceSpec::constant(20.0, 1.0e4, 2.0e4),
        ReferenceSpec::exponential(20.0, -1.0e-3, 2.0e4, 3.0e4, 2.0e4),
        ReferenceSpec::sinusoid(10.0, 1.0e-3, 3.0e4, 4.0e4),
    };
    c.gains = ControllerGains{1.0, 10.0, 2.5, 9.0};
    c.disturbance = DisturbanceModel::ramp_plus_sine(0.01, 2.0, 1.0, 2.01);
    c.planning = uncertain_planning ? PlanningMode::Nominal : PlanningMode::Exact;
    c.initial = {InitialKind::Zero, 0.0, {}};
    c.decimation = 20;
    c.snapshot_interval = 200.0;
    return c;
}

}  // namespace heatflat
