#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace heatflat {

enum class ReferenceFamily { Constant, Ramp, Sinusoid, Exponential };

inline std::string_view to_string(ReferenceFamily f) {
    switch (f) {
        case ReferenceFamily::Constant: return "constant";
        case ReferenceFamily::Ramp: return "ramp";
        case ReferenceFamily::Sinusoid: return "sinusoid";
        case ReferenceFamily::Exponential: return "exponential";
    }
    return "unknown";
}

inline ReferenceFamily parse_family(std::string_view s) {
    if (s == "constant") return ReferenceFamily::Constant;
    if (s == "ramp") return ReferenceFamily::Ramp;
    if (s == "sinusoid") return ReferenceFamily::Sinusoid;
    if (s == "exponential") return ReferenceFamily::Exponential;
    throw std::invalid_argument("unknown reference family '" + std::string(s) + "'");
}

/// One analytic output reference r(t) active on [t_start, t_end).
///
/// With tau = t - offset:
///   Constant     r = A
///   Ramp         r = A tau
///   Sinusoid     r = A sin(rate tau)
///   Exponential  r = A exp(rate tau)     (rate < 0 decays)
struct ReferenceSpec {
    ReferenceFamily family = ReferenceFamily::Constant;
    double amplitude = 0.0;
    double rate = 0.0;
    double offset = 0.0;
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool contains(double t) const noexcept { return t >= t_start && t <= t_end; }

    static ReferenceSpec constant(double a, double t0, double t1) {
        return {ReferenceFamily::Constant, a, 0.0, 0.0, t0, t1};
    }
    static ReferenceSpec ramp(double a, double t0, double t1, double offset = 0.0) {
        return {ReferenceFamily::Ramp, a, 0.0, offset, t0, t1};
    }
    static ReferenceSpec sinusoid(double a, double omega, double t0, double t1, double offset = 0.0) {
        return {ReferenceFamily::Sinusoid, a, omega, offset, t0, t1};
    }
    static ReferenceSpec exponential(double a, double beta, double t0, double t1, double offset = 0.0) {
        return {ReferenceFamily::Exponential, a, beta, offset, t0, t1};
    }
};

/// i-th time derivative of r at t. No window check.
inline double reference_derivative(const ReferenceSpec& s, int order, double t) {
    const double tau = t - s.offset;
    switch (s.family) {
        case ReferenceFamily::Constant:
            return order == 0 ? s.amplitude : 0.0;
        case ReferenceFamily::Ramp:
            if (order == 0) return s.amplitude * tau;
            return order == 1 ? s.amplitude : 0.0;
        case ReferenceFamily::Sinusoid: {
            const double scale = s.amplitude * std::pow(s.rate, order);
            const double phase = s.rate * tau;
            switch (order % 4) {
                case 0: return scale * std::sin(phase);
                case 1: return scale * std::cos(phase);
                case 2: return -scale * std::sin(phase);
                default: return -scale * std::cos(phase);
            }
        }
        case ReferenceFamily::Exponential:
            return s.amplitude * std::pow(s.rate, order) * std::exp(s.rate * tau);
    }
    return 0.0;
}

/// sup over the window of |r^(i)|, from the closed-form derivative.
/// Returns +inf when the family is unbounded on the window.
inline double sup_derivative(const ReferenceSpec& s, int order) {
    const double a = std::abs(s.amplitude);
    switch (s.family) {
        case ReferenceFamily::Constant:
            return order == 0 ? a : 0.0;
        case ReferenceFamily::Ramp: {
            if (order == 0) {
                if (a == 0.0) return 0.0;
                return a * std::max(std::abs(s.t_start - s.offset), std::abs(s.t_end - s.offset));
            }
            return order == 1 ? a : 0.0;
        }
        case ReferenceFamily::Sinusoid:
            return a * std::pow(std::abs(s.rate), order);
        case ReferenceFamily::Exponential: {
            if (a == 0.0) return 0.0;
            const double scale = std::pow(std::abs(s.rate), order);
            if (scale == 0.0) return 0.0;
            const double e = std::max(std::exp(s.rate * (s.t_start - s.offset)),
                                      std::exp(s.rate * (s.t_end - s.offset)));
            return a * scale * e;
        }
    }
    return 0.0;
}

struct ReferenceValue {
    double r = 0.0;
    std::vector<double> sup_bounds;  ///< sup|r^(i)| for i = 0..max_order
};

inline ReferenceValue eval_reference(const ReferenceSpec& s, double t, int max_order = -1) {
    if (!s.contains(t)) {
        std::ostringstream os;
        os << "reference: t = " << t << " outside window [" << s.t_start << ", " << s.t_end << ")";
        throw std::out_of_range(os.str());
    }
    ReferenceValue v;
    v.r = reference_derivative(s, 0, t);
    for (int i = 0; i <= max_order; ++i) v.sup_bounds.push_back(sup_derivative(s, i));
    return v;
}

/// Reference state u_bar(x,t) and the boundary input q_bar(t) = u_bar_x(D,t).
struct ProfileValue {
    double u = 0.0;
    double q = 0.0;
};

namespace detail {

inline double closed_form_state(const ReferenceSpec& s, double d, double x, double t) {
    const double tau = t - s.offset;
    const double a = s.amplitude;
    switch (s.family) {
        case ReferenceFamily::Constant:
            return a;
        case ReferenceFamily::Ramp:
            return a * tau + a * x * x / (2.0 * d);
        case ReferenceFamily::Sinusoid: {
            const double k = std::sqrt(s.rate / (2.0 * d));
            const double wt = s.rate * tau;
            return 0.5 * a * std::exp(k * x) * std::sin(wt + k * x) +
                   0.5 * a * std::exp(-k * x) * std::sin(wt - k * x);
        }
        case ReferenceFamily::Exponential: {
            const double e = a * std::exp(s.rate * tau);
            if (s.rate < 0.0) return e * std::cos(x * std::sqrt(-s.rate / d));
            if (s.rate > 0.0) return e * std::cosh(x * std::sqrt(s.rate / d));
            return e;
        }
    }
    return 0.0;
}

inline double closed_form_input(const ReferenceSpec& s, double d, double length, double t) {
    const double tau = t - s.offset;
    const double a = s.amplitude;
    switch (s.family) {
        case ReferenceFamily::Constant:
            return 0.0;
        case ReferenceFamily::Ramp:
            return a * length / d;
        case ReferenceFamily::Sinusoid: {
            const double k = std::sqrt(s.rate / (2.0 * d));
            const double wt = s.rate * tau;
            const double kd = k * length;
            const double ep = std::exp(kd);
            const double em = std::exp(-kd);
            return 0.5 * a * k * ep * (std::sin(wt + kd) + std::cos(wt + kd)) -
                   0.5 * a * k * em * (std::sin(wt - kd) + std::cos(wt - kd));
        }
        case ReferenceFamily::Exponential: {
            const double e = a * std::exp(s.rate * tau);
            if (s.rate < 0.0) {
                const double k = std::sqrt(-s.rate / d);
                return -e * k * std::sin(k * length);
            }
            if (s.rate > 0.0) {
                const double k = std::sqrt(s.rate / d);
                return e * k * std::sinh(k * length);
            }
            return 0.0;
        }
    }
    return 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// Relative slack on the ratio conditions, so parameters sitting exactly on
/// the boundary (e.g. omega = 2d/D^2) are not rejected by rounding.
inline constexpr double kAdmissibilityRelTol = 1e-12;

struct AdmissibilityVerdict {
    bool accepted = true;
    std::optional<int> violating_order;  ///< first order i where the bound fails
    double tightest_ratio = 0.0;         ///< max over i of sup|r^(i+1)| / bound_i
    int tightest_order = 0;
    std::vector<double> margins;         ///< bound_i - sup|r^(i+1)|, one per order
    std::string condition;
    std::string message;
};

namespace detail {

// Checks sup|r^(i+1)| <= threshold(i) * sup|r^(i)| for i < max_order.
template <typename Threshold>
AdmissibilityVerdict ratio_check(const ReferenceSpec& s, int max_order, Threshold&& threshold,
                                 std::string condition) {
    AdmissibilityVerdict v;
    v.condition = std::move(condition);
    double prev = sup_derivative(s, 0);
    for (int i = 0; i < max_order; ++i) {
        const double next = sup_derivative(s, i + 1);
        const double bound = threshold(i) * prev;
        double ratio = 0.0;
        if (!std::isfinite(prev) || !std::isfinite(next)) {
            ratio = std::numeric_limits<double>::infinity();
        } else if (next > 0.0) {
            ratio = bound > 0.0 ? next / bound : std::numeric_limits<double>::infinity();
        }
        v.margins.push_back(std::isfinite(ratio) ? bound - next : -std::numeric_limits<double>::infinity());
        if (i == 0 || ratio > v.tightest_ratio) {
            v.tightest_ratio = ratio;
            v.tightest_order = i;
        }
        if (ratio > 1.0 + kAdmissibilityRelTol && v.accepted) {
            v.accepted = false;
            v.violating_order = i;
        }
        prev = next;
    }
    std::ostringstream os;
    os << to_string(s.family) << " reference: ";
    if (v.accepted) {
        os << "accepted (" << v.condition << "), tightest ratio " << v.tightest_ratio
           << " at order " << v.tightest_order;
    } else {
        os << "violates " << v.condition << " at order " << *v.violating_order;
    }
    v.message = os.str();
    return v;
}

}  // namespace detail

/// Series convergence condition
///   sup|r^(i+1)| <= (2 d / D^2) (i+1) sup|r^(i)|,  i = 0 .. max_order-1.
inline AdmissibilityVerdict check_admissibility(const ReferenceSpec& s, double plan_d, double plan_D,
                                                int max_order = 30) {
    const double base = 2.0 * plan_d / (plan_D * plan_D);
    return detail::ratio_check(
        s, max_order, [base](int i) { return base * static_cast<double>(i + 1); },
        "series convergence condition sup|r^(i+1)| <= (2d/D^2)(i+1) sup|r^(i)|");
}

/// Stricter condition under nominal planning
///   sup|r^(i+1)| <= (d_nom / D_max^2) sup|r^(i)|,
/// which keeps the parameter-mismatch forcing uniformly bounded.
inline AdmissibilityVerdict check_uncertain_planning(const ReferenceSpec& s, double d_nom, double D_max,
                                                     int max_order = 30) {
    const double base = d_nom / (D_max * D_max);
    return detail::ratio_check(
        s, max_order, [base](int) { return base; },
        "uncertain-planning condition sup|r^(i+1)| <= (d_nom/D_max^2) sup|r^(i)|");
}

struct GevreyCertificate {
    bool exists = false;
    double M = 0.0;
    double R = 0.0;
    int max_order = 0;
    std::string message;
};

/// Smallest M with sup|r^(i)| <= M i! / R^i for i <= max_order, R = D^2/(2d).
/// Fails when a bound is infinite or the normalised sequence is still
/// growing at max_order (no uniform M is certified).
inline GevreyCertificate gevrey_check(const ReferenceSpec& s, double plan_d, double plan_D, int max_order = 30) {
    GevreyCertificate c;
    c.R = plan_D * plan_D / (2.0 * plan_d);
    c.max_order = max_order;
    double factor = 1.0;  // R^i / i!
    double prev_m = 0.0;
    double last_m = 0.0;
    for (int i = 0; i <= max_order; ++i) {
        if (i > 0) factor *= c.R / static_cast<double>(i);
        const double sup = sup_derivative(s, i);
        if (!std::isfinite(sup)) {
            c.exists = false;
            c.message = "derivative bound of order " + std::to_string(i) + " is unbounded on the window";
            return c;
        }
        const double m = sup == 0.0 ? 0.0 : sup * factor;
        c.M = std::max(c.M, m);
        prev_m = last_m;
        last_m = m;
    }
    const bool growing = max_order > 0 && last_m > prev_m * (1.0 + kAdmissibilityRelTol);
    c.exists = std::isfinite(c.M) && !growing;
    std::ostringstream os;
    if (c.exists) {
        os << "Gevrey order 1 certificate: M = " << c.M << ", R = " << c.R;
    } else {
        os << "no Gevrey order 1 certificate with R = " << c.R << " up to order " << max_order;
    }
    c.message = os.str();
    return c;
}

// ---------------------------------------------------------------------------
// Profile evaluation
// ---------------------------------------------------------------------------

inline ProfileValue closed_form_profile(const ReferenceSpec& s, double plan_d, double plan_D, double x, double t) {
    if (!(plan_d > 0.0) || !(plan_D > 0.0)) {
        throw std::invalid_argument("closed_form_profile: planning parameters must be positive");
    }
    if (x < 0.0 || x > plan_D) {
        throw std::out_of_range("closed_form_profile: x outside [0, D]");
    }
    const auto verdict = check_admissibility(s, plan_d, plan_D, 4);
    if (!verdict.accepted) {
        throw std::invalid_argument("closed_form_profile: " + verdict.message);
    }
    return {detail::closed_form_state(s, plan_d, x, t), detail::closed_form_input(s, plan_d, plan_D, t)};
}

struct SeriesValue {
    double u = 0.0;
    double q = 0.0;
    double last_state_term = 0.0;  ///< |i = N term| of the state series
    double last_input_term = 0.0;  ///< |i = N term| of the input series
};

/// Truncated flatness series
///   u_N = sum_{i=0}^{N} r^(i) x^{2i} / (d^i (2i)!)
///   q_N = sum_{i=1}^{N} r^(i) D^{2i-1} / (d^i (2i-1)!)
inline SeriesValue series_profile(const ReferenceSpec& s, double plan_d, double plan_D, double x, double t,
                                  int terms) {
    if (terms < 0) {
        throw std::invalid_argument("series_profile: truncation order must be nonnegative");
    }
    SeriesValue v;
    double state_coeff = 1.0;               // x^{2i} / (d^i (2i)!)
    double input_coeff = plan_D / plan_d;   // D^{2i-1} / (d^i (2i-1)!), starts at i = 1
    const double x2 = x * x;
    const double len2 = plan_D * plan_D;
    for (int i = 0; i <= terms; ++i) {
        const double ri = reference_derivative(s, i, t);
        const double state_term = ri * state_coeff;
        v.u += state_term;
        v.last_state_term = std::abs(state_term);
        if (i >= 1) {
            const double input_term = ri * input_coeff;
            v.q += input_term;
            v.last_input_term = std::abs(input_term);
            const double k = static_cast<double>(2 * i);
            input_coeff *= len2 / (plan_d * k * (k + 1.0));
        }
        const double k = static_cast<double>(2 * i);
        state_coeff *= x2 / (plan_d * (k + 1.0) * (k + 2.0));
    }
    return v;
}

enum class ProfileMode { ClosedForm, Series };

/// Reference generator bound to one parameter set.
///
/// Evaluation is unchecked: x may exceed plan_D (an uncertain planner is
/// still sampled over the physical rod) and admissibility is the caller's
/// responsibility.
class ReferenceProfile {
public:
    ReferenceProfile(ReferenceSpec spec, double plan_d, double plan_D, ProfileMode mode = ProfileMode::ClosedForm,
                     int series_terms = 30)
        : spec_(spec), plan_d_(plan_d), plan_D_(plan_D), mode_(mode), terms_(series_terms) {
        if (!(plan_d > 0.0) || !(plan_D > 0.0)) {
            throw std::invalid_argument("reference profile: planning parameters must be positive");
        }
        if (series_terms < 0) {
            throw std::invalid_argument("reference profile: series_terms must be nonnegative");
        }
    }

    [[nodiscard]] const ReferenceSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] double plan_d() const noexcept { return plan_d_; }
    [[nodiscard]] double plan_D() const noexcept { return plan_D_; }

    [[nodiscard]] double output(double t) const { return reference_derivative(spec_, 0, t); }

    [[nodiscard]] double state(double x, double t) const {
        if (mode_ == ProfileMode::Series) return series_profile(spec_, plan_d_, plan_D_, x, t, terms_).u;
        return detail::closed_form_state(spec_, plan_d_, x, t);
    }

    [[nodiscard]] double input(double t) const {
        if (mode_ == ProfileMode::Series) return series_profile(spec_, plan_d_, plan_D_, 0.0, t, terms_).q;
        return detail::closed_form_input(spec_, plan_d_, plan_D_, t);
    }

private:
    ReferenceSpec spec_;
    double plan_d_;
    double plan_D_;
    ProfileMode mode_;
    int terms_;
};

}  // namespace heatflat
