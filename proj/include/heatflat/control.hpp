#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatflat/pde_core.hpp"

namespace heatflat {

/// Gains of the boundary law
///   q~ = -(lambda1 / D_nom) e_D + nu,   nu' = -lambda2 e_D - lambda3 sign(e_D).
/// lambda2 = lambda3 = 0 gives the plain proportional law.
struct ControllerGains {
    double lambda1 = 1.0;
    double lambda2 = 10.0;
    double lambda3 = 2.5;
    double D_nom = 9.0;

    [[nodiscard]] bool robust() const noexcept { return lambda2 != 0.0 || lambda3 != 0.0; }
};

struct ControllerState {
    double nu = 0.0;
    double last_q = 0.0;
};

/// sign with sign(0) = 0.
inline double signum(double v) noexcept {
    return static_cast<double>((0.0 < v) - (v < 0.0));
}

struct GainVerdict {
    bool accepted = true;
    bool robust = true;
    double margin_lambda1 = 0.0;  ///< lambda1 - D_nom/D_min
    double margin_lambda2 = 0.0;  ///< lambda2 - d_max
    double margin_lambda3 = 0.0;  ///< lambda3 - L
    std::vector<std::string> violations;
};

/// Strict gain conditions lambda1 > D_nom/D_min, and in robust mode also
/// lambda2 > d_max and lambda3 > L.
inline GainVerdict validate_gains(const ControllerGains& g, const PlantConfig& bounds, double lipschitz) {
    GainVerdict v;
    v.robust = g.robust();
    v.margin_lambda1 = g.lambda1 - g.D_nom / bounds.D_min;
    v.margin_lambda2 = g.lambda2 - bounds.d_max;
    v.margin_lambda3 = g.lambda3 - lipschitz;

    auto fail = [&v](const std::string& what, double lhs, double rhs) {
        std::ostringstream os;
        os << what << ": " << lhs << " <= " << rhs;
        v.violations.push_back(os.str());
        v.accepted = false;
    };
    if (!(v.margin_lambda1 > 0.0)) fail("lambda1 > D_nom/D_min violated", g.lambda1, g.D_nom / bounds.D_min);
    if (v.robust) {
        if (!(v.margin_lambda2 > 0.0)) fail("lambda2 > d_max violated", g.lambda2, bounds.d_max);
        if (!(v.margin_lambda3 > 0.0)) fail("lambda3 > L violated", g.lambda3, lipschitz);
    }
    return v;
}

struct ControlOutput {
    double q = 0.0;        ///< total boundary command q~ + q_bar
    double q_tilde = 0.0;
    double error = 0.0;    ///< e_D = u(D) - u_bar(D)
    ControllerState next;
};

/// One sample of the boundary law. The emitted q uses the current nu; the
/// discontinuous term only enters through the Euler update of nu.
inline ControlOutput control_step(double meas_uD, double ref_uD, double q_bar, const ControllerGains& g,
                                  const ControllerState& state, double dt) {
    if (!std::isfinite(meas_uD) || !std::isfinite(ref_uD) || !std::isfinite(q_bar)) {
        throw std::domain_error("control_step: non-finite measurement or reference");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("control_step: dt must be positive");
    }
    ControlOutput out;
    out.error = meas_uD - ref_uD;
    out.q_tilde = -(g.lambda1 / g.D_nom) * out.error + state.nu;
    out.q = out.q_tilde + q_bar;
    out.next.nu = state.nu + dt * (-g.lambda2 * out.error - g.lambda3 * signum(out.error));
    out.next.last_q = out.q;
    return out;
}

// ---------------------------------------------------------------------------
// Boundary disturbance
// ---------------------------------------------------------------------------

enum class DisturbanceKind { None, RampPlusSine, Table };

/// phi(t) entering the flux boundary. RampPlusSine: a t + b sin(omega t).
/// Table: piecewise linear through (t_i, phi_i), held constant outside.
struct DisturbanceModel {
    DisturbanceKind kind = DisturbanceKind::None;
    double a = 0.0;
    double b = 0.0;
    double omega = 0.0;
    std::vector<double> table_t;
    std::vector<double> table_phi;
    double lipschitz = 0.0;  ///< declared L with |phi'| <= L

    static DisturbanceModel none() { return {}; }
    static DisturbanceModel ramp_plus_sine(double a, double b, double omega, double lipschitz) {
        DisturbanceModel m;
        m.kind = DisturbanceKind::RampPlusSine;
        m.a = a;
        m.b = b;
        m.omega = omega;
        m.lipschitz = lipschitz;
        return m;
    }
    static DisturbanceModel table(std::vector<double> t, std::vector<double> phi, double lipschitz) {
        DisturbanceModel m;
        m.kind = DisturbanceKind::Table;
        m.table_t = std::move(t);
        m.table_phi = std::move(phi);
        m.lipschitz = lipschitz;
        return m;
    }
};

struct DisturbanceValue {
    double phi = 0.0;
    double rate = 0.0;  ///< phi'
};

inline DisturbanceValue eval_disturbance(const DisturbanceModel& m, double t) {
    switch (m.kind) {
        case DisturbanceKind::None:
            return {};
        case DisturbanceKind::RampPlusSine:
            return {m.a * t + m.b * std::sin(m.omega * t), m.a + m.b * m.omega * std::cos(m.omega * t)};
        case DisturbanceKind::Table: {
            const auto& ts = m.table_t;
            const auto& ps = m.table_phi;
            if (ts.empty()) return {};
            if (t <= ts.front()) return {ps.front(), 0.0};
            if (t >= ts.back()) return {ps.back(), 0.0};
            const auto it = std::upper_bound(ts.begin(), ts.end(), t);
            const std::size_t j = static_cast<std::size_t>(it - ts.begin());
            const double slope = (ps[j] - ps[j - 1]) / (ts[j] - ts[j - 1]);
            return {ps[j - 1] + slope * (t - ts[j - 1]), slope};
        }
    }
    return {};
}

/// Analytic sup|phi'| of the model (over all t >= 0).
inline double disturbance_rate_bound(const DisturbanceModel& m) {
    switch (m.kind) {
        case DisturbanceKind::None:
            return 0.0;
        case DisturbanceKind::RampPlusSine:
            if (m.b == 0.0 || m.omega == 0.0) return std::abs(m.a);
            return std::abs(m.a) + std::abs(m.b * m.omega);
        case DisturbanceKind::Table: {
            double s = 0.0;
            for (std::size_t j = 1; j < m.table_t.size(); ++j) {
                s = std::max(s, std::abs((m.table_phi[j] - m.table_phi[j - 1]) /
                                         (m.table_t[j] - m.table_t[j - 1])));
            }
            return s;
        }
    }
    return 0.0;
}

/// Throws if the model is malformed or the declared L is below sup|phi'|.
inline void validate_disturbance(const DisturbanceModel& m) {
    if (m.kind == DisturbanceKind::Table) {
        if (m.table_t.size() != m.table_phi.size() || m.table_t.empty()) {
            throw std::invalid_argument("disturbance table: t and phi must be nonempty and of equal length");
        }
        if (!std::is_sorted(m.table_t.begin(), m.table_t.end()) ||
            std::adjacent_find(m.table_t.begin(), m.table_t.end()) != m.table_t.end()) {
            throw std::invalid_argument("disturbance table: t must be strictly increasing");
        }
    }
    const double sup_rate = disturbance_rate_bound(m);
    if (sup_rate > m.lipschitz * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "disturbance: declared L = " << m.lipschitz << " is below sup|phi'| = " << sup_rate;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace heatflat
