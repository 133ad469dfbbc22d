#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatflat {

/// Physical parameters of the rod together with their admissible bounds.
///
/// `d` and `D` are the true diffusivity and length used by the simulated
/// plant. `d_nom` and `D_nom` are what the planner and controller believe.
/// Every value must lie inside [d_min, d_max] x [D_min, D_max].
struct PlantConfig {
    double d = 0.05;
    double D = 10.0;
    double d_min = 0.04;
    double d_max = 0.06;
    double D_min = 9.0;
    double D_max = 10.0;
    double d_nom = 0.06;
    double D_nom = 9.0;

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(finite(d) && finite(D) && finite(d_min) && finite(d_max) && finite(D_min) &&
              finite(D_max) && finite(d_nom) && finite(D_nom))) {
            throw std::invalid_argument("plant: all parameters must be finite");
        }
        if (!(d_min > 0.0) || !(D_min > 0.0)) {
            throw std::invalid_argument("plant: lower bounds d_min and D_min must be positive");
        }
        if (!(d_min <= d && d <= d_max)) {
            throw std::invalid_argument("plant: d outside [d_min, d_max]");
        }
        if (!(D_min <= D && D <= D_max)) {
            throw std::invalid_argument("plant: D outside [D_min, D_max]");
        }
        if (!(d_min <= d_nom && d_nom <= d_max)) {
            throw std::invalid_argument("plant: d_nom outside [d_min, d_max]");
        }
        if (!(D_min <= D_nom && D_nom <= D_max)) {
            throw std::invalid_argument("plant: D_nom outside [D_min, D_max]");
        }
    }
};

/// Uniform node layout on [0, length].
class Grid {
public:
    Grid(double length, std::size_t n_nodes) : length_(length), n_(n_nodes) {
        if (n_nodes < 3) {
            throw std::invalid_argument("grid: at least 3 nodes are required");
        }
        if (!(length > 0.0) || !std::isfinite(length)) {
            throw std::invalid_argument("grid: length must be positive and finite");
        }
        dx_ = length / static_cast<double>(n_nodes - 1);
        x_.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            x_[i] = static_cast<double>(i) * dx_;
        }
        x_.back() = length;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double dx() const noexcept { return dx_; }
    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] std::span<const double> positions() const noexcept { return x_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return x_[i]; }

private:
    double length_;
    std::size_t n_;
    double dx_ = 0.0;
    std::vector<double> x_;
};

/// Sampled temperature profile at time t.
struct FieldState {
    std::vector<double> u;
    double t = 0.0;

    [[nodiscard]] bool finite() const noexcept {
        return std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); });
    }
};

namespace detail {

inline void require_consistent(const PlantConfig& plant, const Grid& grid) {
    if (std::abs(grid.length() - plant.D) > 1e-12 * plant.D) {
        std::ostringstream os;
        os << "grid length " << grid.length() << " does not match plant length " << plant.D;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace detail

/// du/dt of the method-of-lines system, written into `out`.
///
/// u_x(0,t) = 0 is imposed with the mirror ghost u[-1] = u[1] and the
/// right boundary u_x(D,t) = flux with u[n] = u[n-2] + 2 dx flux.
/// `flux` is the total Neumann value, control plus disturbance.
inline void semi_discrete_rhs(std::span<const double> u, const PlantConfig& plant, const Grid& grid,
                              double flux, std::span<double> out) {
    const std::size_t n = grid.size();
    if (u.size() != n || out.size() != n) {
        throw std::invalid_argument("semi_discrete_rhs: state length does not match grid");
    }
    if (!std::isfinite(flux)) {
        throw std::domain_error("semi_discrete_rhs: non-finite boundary flux");
    }
    const double dx = grid.dx();
    const double k = plant.d / (dx * dx);

    out[0] = k * (2.0 * u[1] - 2.0 * u[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = k * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
    }
    const double ghost = u[n - 2] + 2.0 * dx * flux;
    out[n - 1] = k * (u[n - 2] - 2.0 * u[n - 1] + ghost);
}

inline std::vector<double> semi_discrete_rhs(const FieldState& state, const PlantConfig& plant,
                                             const Grid& grid, double flux) {
    detail::require_consistent(plant, grid);
    if (!state.finite()) {
        throw std::domain_error("semi_discrete_rhs: state contains non-finite values");
    }
    std::vector<double> out(grid.size());
    semi_discrete_rhs(state.u, plant, grid, flux, out);
    return out;
}

/// Forward Euler update u <- u + dt*rhs, t <- t + dt.
inline void step_explicit_euler_in_place(FieldState& state, std::span<const double> rhs, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("step_explicit_euler: dt must be positive and finite");
    }
    if (rhs.size() != state.u.size()) {
        throw std::invalid_argument("step_explicit_euler: rhs length does not match state");
    }
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        state.u[i] += dt * rhs[i];
    }
    state.t += dt;
}

inline FieldState step_explicit_euler(const FieldState& state, std::span<const double> rhs, double dt) {
    FieldState next = state;
    step_explicit_euler_in_place(next, rhs, dt);
    return next;
}

struct CflVerdict {
    bool accepted = false;
    double ratio = 0.0;   ///< d*dt/dx^2
    double max_dt = 0.0;  ///< largest dt with ratio <= 1/2
    std::string message;
};

inline CflVerdict check_cfl(const PlantConfig& plant, const Grid& grid, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("check_cfl: dt must be positive");
    }
    const double dx = grid.dx();
    CflVerdict v;
    v.ratio = plant.d * dt / (dx * dx);
    v.max_dt = 0.5 * dx * dx / plant.d;
    v.accepted = v.ratio <= 0.5;
    std::ostringstream os;
    os << "CFL ratio d*dt/dx^2 = " << v.ratio << (v.accepted ? " <= 0.5" : " > 0.5")
       << " (max admissible dt = " << v.max_dt << ")";
    v.message = os.str();
    return v;
}

/// Trapezoidal quadrature weights on the grid.
inline std::vector<double> trapezoid_weights(const Grid& grid) {
    std::vector<double> w(grid.size(), grid.dx());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

}  // namespace heatflat
