#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatflat/motion_planning.hpp"
#include "heatflat/pde_core.hpp"

namespace heatflat {

/// One logged sample of the closed loop.
struct DiagnosticsRow {
    double t = 0.0;
    double y = 0.0;         ///< u(0,t)
    double r = 0.0;
    double q = 0.0;
    double nu = 0.0;
    double phi = 0.0;
    double err_norm = 0.0;  ///< L2 norm of u - u_bar over [0, D]
    double V = 0.0;
    double Gamma = 0.0;
    double delta = 0.0;     ///< nu + phi
};

/// Trapezoidal sqrt(int u^2 dx).
inline double l2_norm(std::span<const double> profile, const Grid& grid) {
    if (profile.size() != grid.size()) {
        throw std::invalid_argument("l2_norm: profile length does not match grid");
    }
    const std::size_t n = profile.size();
    double s = 0.5 * (profile[0] * profile[0] + profile[n - 1] * profile[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s += profile[i] * profile[i];
    return std::sqrt(s * grid.dx());
}

/// V = 1/2 ||e||^2 (+ 1/2 delta^2 for the robust law).
inline double lyapunov_value(double err_norm, double delta, bool robust) noexcept {
    return 0.5 * err_norm * err_norm + (robust ? 0.5 * delta * delta : 0.0);
}

/// Same functional by direct quadrature of e^2.
inline double lyapunov_direct(std::span<const double> err, const Grid& grid, double delta, bool robust) {
    if (err.size() != grid.size()) {
        throw std::invalid_argument("lyapunov_direct: profile length does not match grid");
    }
    const auto w = trapezoid_weights(grid);
    double integral = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) integral += w[i] * err[i] * err[i];
    return 0.5 * integral + (robust ? 0.5 * delta * delta : 0.0);
}

/// Gamma = sqrt(||e||^2 + delta^2).
inline double composite_norm(double err_norm, double delta) noexcept { return std::hypot(err_norm, delta); }

struct DecayFit {
    double rate = 0.0;       ///< slope of log(value) against t
    double r_squared = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log(value) on [t_begin, t_end]. Nonpositive
/// values are skipped; fewer than 3 usable points throws.
inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> value, double t_begin,
                               double t_end) {
    if (t.size() != value.size()) {
        throw std::invalid_argument("fit_decay_rate: time and value series differ in length");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_begin || t[i] > t_end || !(value[i] > 0.0) || !std::isfinite(value[i])) continue;
        xs.push_back(t[i]);
        ys.push_back(std::log(value[i]));
    }
    const std::size_t n = xs.size();
    if (n < 3) {
        throw std::invalid_argument("fit_decay_rate: fewer than 3 positive samples in window");
    }
    const double nn = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= nn;
    my /= nn;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    if (!(cxx > 0.0)) {
        throw std::invalid_argument("fit_decay_rate: degenerate time window");
    }
    DecayFit f;
    f.points = n;
    f.rate = cxy / cxx;
    f.intercept = my - f.rate * mx;
    // Flat series: treat the fit as exact.
    const double tol = 1e-24 * nn * std::max(1.0, my * my);
    f.r_squared = cyy <= tol ? 1.0 : std::clamp(cxy * cxy / (cxx * cyy), 0.0, 1.0);
    return f;
}

inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> value) {
    if (t.empty()) throw std::invalid_argument("fit_decay_rate: empty series");
    const double t0 = t.front();
    const double t1 = t.back();
    // First 20% of the horizon is treated as transient.
    return fit_decay_rate(t, value, t0 + 0.2 * (t1 - t0), t1);
}

// ---------------------------------------------------------------------------
// Parameter-mismatch forcing
// ---------------------------------------------------------------------------

struct PerturbationMeasure {
    std::vector<double> M;         ///< M(x_i, t) on the grid
    double norm = 0.0;             ///< trapezoidal L2 norm of M
    double series_L1 = 0.0;        ///< sqrt of sum_i r^(i)^2 D^{4i-3} / (d_n^{2i} (4i-3) (2i-2)!^2)
    double mismatch_bound = 0.0;   ///< (d_max - d_nom)^2 * series_L1
    double triangle_bound = 0.0;   ///< |d - d_nom| sum_i |r^(i)| ||x^{2i-2}|| / (d_n^i (2i-2)!)
    double max_term_ratio = 0.0;   ///< max_p S_{p+1}/S_p using sup-derivative bounds
};

/// Forcing term of the error dynamics when the planner uses d_nom instead of d:
///   M(x,t) = (d - d_nom) sum_{i=1}^{N} r^(i)(t) x^{2i-2} / (d_nom^i (2i-2)!).
inline PerturbationMeasure measure_perturbation_M(const PlantConfig& plant, const ReferenceSpec& spec,
                                                  const Grid& grid, double t, int terms = 30) {
    if (terms < 1) throw std::invalid_argument("measure_perturbation_M: need at least one series term");
    const double dn = plant.d_nom;
    const double mismatch = plant.d - dn;
    const double len = grid.length();

    PerturbationMeasure out;
    out.M.assign(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x2 = grid[k] * grid[k];
        double coeff = 1.0 / dn;  // x^{2i-2} / (d_n^i (2i-2)!) at i = 1
        double sum = 0.0;
        for (int i = 1; i <= terms; ++i) {
            sum += reference_derivative(spec, i, t) * coeff;
            const double m = static_cast<double>(2 * i - 2);
            coeff *= x2 / (dn * (m + 1.0) * (m + 2.0));
        }
        out.M[k] = mismatch * sum;
    }
    out.norm = l2_norm(out.M, grid);

    // Series of the bound, term by term. coeff_i = 1 / (d_n^i (2i-2)!).
    double coeff = 1.0 / dn;
    double sum_sq = 0.0;
    double tri = 0.0;
    double prev_sup_term = 0.0;
    for (int i = 1; i <= terms; ++i) {
        const double ri = reference_derivative(spec, i, t);
        const double p = static_cast<double>(4 * i - 3);
        const double monomial_sq = std::pow(len, p) / p;  // int_0^D x^{4i-4} dx
        sum_sq += ri * ri * coeff * coeff * monomial_sq;
        tri += std::abs(ri) * coeff * std::sqrt(monomial_sq);

        const double sup_i = sup_derivative(spec, i);
        const double sup_term = sup_i * sup_i * coeff * coeff * monomial_sq;
        if (i > 1 && prev_sup_term > 0.0) {
            out.max_term_ratio = std::max(out.max_term_ratio, sup_term / prev_sup_term);
        }
        prev_sup_term = sup_term;

        const double m = static_cast<double>(2 * i - 2);
        coeff /= dn * (m + 1.0) * (m + 2.0);
    }
    out.series_L1 = std::sqrt(sum_sq);
    out.mismatch_bound = (plant.d_max - dn) * (plant.d_max - dn) * out.series_L1;
    out.triangle_bound = std::abs(mismatch) * tri;
    return out;
}

// ---------------------------------------------------------------------------
// Exponential input-to-state stability
// ---------------------------------------------------------------------------

struct EissVerdict {
    bool holds = false;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double gamma0 = 0.0;
    double gamma_cap = 0.0;
    double tail_sup = 0.0;  ///< sup Gamma over the final 20% of the window
    double t_begin = 0.0;
    double t_end = 0.0;
};

/// Checks Gamma(t) <= alpha1 exp(-alpha2 (t - t_begin)) Gamma(t_begin) + cap.
///
/// alpha2 comes from a log-linear fit of the nonincreasing upper envelope
/// of the excess max(Gamma - cap, 0); alpha1 is then the smallest constant
/// that makes the inequality hold on every logged sample. The verdict holds
/// when a positive alpha2 exists (or there is no excess at all).
inline EissVerdict check_eiss(std::span<const DiagnosticsRow> rows, double gamma_cap, double t_begin, double t_end) {
    EissVerdict v;
    v.gamma_cap = gamma_cap;
    v.t_begin = t_begin;
    v.t_end = t_end;

    std::vector<double> ts;
    std::vector<double> excess;
    std::vector<double> gammas;
    for (const auto& row : rows) {
        if (row.t < t_begin || row.t > t_end) continue;
        ts.push_back(row.t);
        gammas.push_back(row.Gamma);
        excess.push_back(std::max(row.Gamma - gamma_cap, 0.0));
    }
    if (ts.empty()) throw std::invalid_argument("check_eiss: no samples in window");
    if (!std::all_of(gammas.begin(), gammas.end(), [](double g) { return std::isfinite(g); })) {
        v.tail_sup = std::numeric_limits<double>::infinity();
        return v;
    }

    v.gamma0 = gammas.front();
    const double tail_from = ts.front() + 0.8 * (ts.back() - ts.front());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] >= tail_from) v.tail_sup = std::max(v.tail_sup, gammas[i]);
    }

    const bool any_excess = std::any_of(excess.begin(), excess.end(), [](double e) { return e > 0.0; });
    if (!any_excess) {
        v.holds = true;
        v.alpha1 = 1.0;
        v.alpha2 = ts.back() > ts.front() ? 1.0 / (ts.back() - ts.front()) : 1.0;
        return v;
    }
    if (!(v.gamma0 > 0.0)) return v;

    std::vector<double> envelope(excess.size());
    double running = 0.0;
    for (std::size_t i = excess.size(); i-- > 0;) {
        running = std::max(running, excess[i]);
        envelope[i] = running;
    }
    const auto positive = static_cast<std::size_t>(
        std::count_if(envelope.begin(), envelope.end(), [](double e) { return e > 0.0; }));
    if (positive >= 3) {
        try {
            const auto fit = fit_decay_rate(ts, envelope, ts.front(), ts.back());
            v.alpha2 = -fit.rate;
        } catch (const std::invalid_argument&) {
            v.alpha2 = 0.0;
        }
    } else {
        // Excess only at the first couple of samples: any positive rate works.
        v.alpha2 = ts.back() > ts.front() ? 1.0 / (ts.back() - ts.front()) : 1.0;
    }
    if (!(v.alpha2 > 0.0)) return v;

    for (std::size_t i = 0; i < ts.size(); ++i) {
        v.alpha1 = std::max(v.alpha1, excess[i] * std::exp(v.alpha2 * (ts[i] - ts.front())) / v.gamma0);
    }
    v.holds = std::isfinite(v.alpha1);
    return v;
}

inline EissVerdict check_eiss(std::span<const DiagnosticsRow> rows, double gamma_cap) {
    if (rows.empty()) throw std::invalid_argument("check_eiss: empty log");
    return check_eiss(rows, gamma_cap, rows.front().t, rows.back().t);
}

}  // namespace heatflat
