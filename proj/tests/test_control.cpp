#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "heatflat/scenario.hpp"

using namespace heatflat;
using Catch::Approx;

namespace {

PlantConfig paper_bounds(double D_min) {
    PlantConfig p;
    p.D_min = D_min;
    return p;
}

// Unit rod with exact parameters, a constant reference and no disturbance.
ScenarioConfig unit_rod(double lambda1, double lambda2, double lambda3) {
    ScenarioConfig c;
    c.name = "unit-rod";
    c.plant.d = c.plant.d_min = c.plant.d_max = c.plant.d_nom = 0.05;
    c.plant.D = c.plant.D_min = c.plant.D_max = c.plant.D_nom = 1.0;
    c.grid_nodes = 51;
    c.dt = 0.002;
    c.horizon = 200.0;
    c.phases = {ReferenceSpec::constant(1.0, 0.0, 200.0)};
    c.gains = ControllerGains{lambda1, lambda2, lambda3, 1.0};
    c.disturbance = DisturbanceModel::none();
    c.decimation = 50;
    c.snapshot_interval = 0.0;
    return c;
}

std::vector<double> random_cosine_profile(std::mt19937_64& rng, const Grid& g, double mean) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double a[6];
    for (auto& v : a) v = coef(rng);
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = mean + a[0];
        for (int k = 1; k < 6; ++k) v += a[k] * std::cos(k * std::numbers::pi * g[i] / g.length());
        u[i] = v;
    }
    return u;
}

}  // namespace

TEST_CASE("gain conditions", "[control]") {
    const ControllerGains paper{1.0, 10.0, 2.5, 9.0};

    SECTION("reference gains sit on the lambda1 boundary when D_min = 9") {
        const auto v = validate_gains(paper, paper_bounds(9.0), 2.01);
        CHECK_FALSE(v.accepted);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].find("lambda1") != std::string::npos);
        CHECK(v.margin_lambda1 == Approx(0.0).margin(1e-15));
        CHECK(v.margin_lambda2 == Approx(10.0 - 0.06));
        CHECK(v.margin_lambda3 == Approx(2.5 - 2.01));
    }
    SECTION("a smaller D_min only widens the lambda1 gap") {
        // D_nom / D_min = 9/8 > 1, so lambda1 = 1 can never clear it with D_nom = 9.
        const auto v = validate_gains(paper, paper_bounds(8.0), 2.01);
        CHECK_FALSE(v.accepted);
        CHECK(v.margin_lambda1 == Approx(1.0 - 9.0 / 8.0));
    }
    SECTION("lambda1 = 1.2 passes with D_min = 8") {
        const auto v = validate_gains({1.2, 10.0, 2.5, 9.0}, paper_bounds(8.0), 2.01);
        CHECK(v.accepted);
        CHECK(v.violations.empty());
        CHECK(v.margin_lambda1 == Approx(1.2 - 9.0 / 8.0));
    }
    SECTION("lambda3 equal to L is rejected") {
        const auto v = validate_gains({2.0, 10.0, 2.5, 9.0}, paper_bounds(8.0), 2.5);
        CHECK_FALSE(v.accepted);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].find("lambda3") != std::string::npos);
    }
    SECTION("lambda2 below d_max is rejected") {
        auto bounds = paper_bounds(8.0);
        bounds.d_max = 0.05;
        bounds.d_nom = 0.05;
        const auto v = validate_gains({2.0, 0.04, 2.5, 9.0}, bounds, 2.01);
        CHECK_FALSE(v.accepted);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].find("lambda2") != std::string::npos);
    }
    SECTION("every violation is listed") {
        const auto v = validate_gains({0.5, 0.01, 1.0, 9.0}, paper_bounds(9.0), 2.01);
        CHECK(v.violations.size() == 3);
    }
    SECTION("proportional mode ignores lambda2 and lambda3") {
        const auto v = validate_gains({2.0, 0.0, 0.0, 9.0}, paper_bounds(9.0), 100.0);
        CHECK_FALSE(v.robust);
        CHECK(v.accepted);
    }
}

TEST_CASE("control step", "[control]") {
    const ControllerGains g{1.0, 10.0, 2.5, 9.0};

    SECTION("origin is an equilibrium") {
        const auto out = control_step(3.0, 3.0, 0.0, g, {0.0, 0.0}, 0.05);
        CHECK(out.q == 0.0);
        CHECK(out.error == 0.0);
        CHECK(out.next.nu == 0.0);
    }
    SECTION("unit error") {
        const double dt = 0.05;
        const auto out = control_step(1.0, 0.0, 0.2, g, {0.5, 0.0}, dt);
        CHECK(out.q == Approx(-1.0 / 9.0 + 0.5 + 0.2));
        CHECK(out.q == Approx(0.5888888888888889));
        CHECK(out.q_tilde == Approx(-1.0 / 9.0 + 0.5));
        CHECK(out.next.nu == Approx(0.5 - dt * (10.0 + 2.5)));
        CHECK(out.next.last_q == out.q);
    }
    SECTION("negative error drives nu up") {
        const auto out = control_step(0.0, 2.0, 0.0, g, {0.0, 0.0}, 0.1);
        CHECK(out.next.nu == Approx(0.1 * (10.0 * 2.0 + 2.5)));
    }
    SECTION("proportional law") {
        const ControllerGains p{1.0, 0.0, 0.0, 9.0};
        ControllerState s{0.0, 0.0};
        for (double e : {0.7, -0.3, 1e-9, 4.0}) {
            const auto out = control_step(e, 0.0, 0.0, p, s, 0.05);
            CHECK(out.q == -(1.0 / 9.0) * e);
            CHECK(out.next.nu == 0.0);
            s = out.next;
        }
    }
    SECTION("bad inputs") {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(control_step(nan, 0.0, 0.0, g, {}, 0.05), std::domain_error);
        CHECK_THROWS_AS(control_step(0.0, std::numeric_limits<double>::infinity(), 0.0, g, {}, 0.05),
                        std::domain_error);
        CHECK_THROWS_AS(control_step(0.0, 0.0, 0.0, g, {}, 0.0), std::invalid_argument);
    }
    CHECK(signum(0.0) == 0.0);
    CHECK(signum(-0.0) == 0.0);
    CHECK(signum(-3.0) == -1.0);
    CHECK(signum(1e-300) == 1.0);
}

TEST_CASE("disturbance models", "[control]") {
    SECTION("ramp plus sine at t = 0") {
        const auto m = DisturbanceModel::ramp_plus_sine(0.01, 2.0, 1.0, 2.01);
        const auto v = eval_disturbance(m, 0.0);
        CHECK(v.phi == 0.0);
        CHECK(v.rate == Approx(2.01));
        CHECK(disturbance_rate_bound(m) == Approx(2.01));
        CHECK_NOTHROW(validate_disturbance(m));
        const auto w = eval_disturbance(m, std::numbers::pi / 2.0);
        CHECK(w.phi == Approx(0.01 * std::numbers::pi / 2.0 + 2.0));
        CHECK(w.rate == Approx(0.01));
    }
    SECTION("declared L below the rate bound") {
        const auto m = DisturbanceModel::ramp_plus_sine(0.01, 2.0, 1.0, 2.0);
        CHECK_THROWS_AS(validate_disturbance(m), std::invalid_argument);
    }
    SECTION("none") {
        const auto m = DisturbanceModel::none();
        for (double t : {0.0, 1.0, 1e4}) {
            CHECK(eval_disturbance(m, t).phi == 0.0);
            CHECK(eval_disturbance(m, t).rate == 0.0);
        }
        CHECK_NOTHROW(validate_disturbance(m));
    }
    SECTION("pure ramp") {
        const auto m = DisturbanceModel::ramp_plus_sine(0.01, 0.0, 1.0, 0.01);
        for (double t : {0.0, 3.0, 500.0}) CHECK(eval_disturbance(m, t).rate == 0.01);
        CHECK(eval_disturbance(m, 500.0).phi == Approx(5.0));
    }
    SECTION("table") {
        const auto m = DisturbanceModel::table({0.0, 1.0, 3.0}, {0.0, 2.0, 1.0}, 2.0);
        CHECK_NOTHROW(validate_disturbance(m));
        CHECK(eval_disturbance(m, 0.5).phi == Approx(1.0));
        CHECK(eval_disturbance(m, 0.5).rate == Approx(2.0));
        CHECK(eval_disturbance(m, 2.0).phi == Approx(1.5));
        CHECK(eval_disturbance(m, 2.0).rate == Approx(-0.5));
        CHECK(eval_disturbance(m, 10.0).phi == 1.0);
        CHECK(eval_disturbance(m, 10.0).rate == 0.0);
        CHECK(disturbance_rate_bound(m) == Approx(2.0));

        auto low_l = m;
        low_l.lipschitz = 1.5;
        CHECK_THROWS_AS(validate_disturbance(low_l), std::invalid_argument);
        CHECK_THROWS_AS(validate_disturbance(DisturbanceModel::table({0.0, 1.0}, {0.0}, 1.0)),
                        std::invalid_argument);
        CHECK_THROWS_AS(validate_disturbance(DisturbanceModel::table({1.0, 0.0}, {0.0, 0.0}, 1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("proportional loop decays exponentially from random profiles", "[control][property]") {
    const double bound = -0.9 * 0.05 / 2.0;  // -0.9 d / (2 D^2) with D = 1
    std::mt19937_64 rng(7);
    for (int seed = 0; seed < 3; ++seed) {
        auto c = unit_rod(2.0, 0.0, 0.0);
        c.initial.kind = InitialKind::Table;
        c.initial.values = random_cosine_profile(rng, Grid(1.0, c.grid_nodes), 1.0);
        const auto run = run_scenario(c);
        std::vector<double> t;
        std::vector<double> norm;
        for (const auto& row : run.log) {
            t.push_back(row.t);
            norm.push_back(row.err_norm);
        }
        const auto fit = fit_decay_rate(t, norm, 0.5 * c.horizon, c.horizon);
        INFO("seed " << seed << " rate " << fit.rate);
        CHECK(fit.rate <= bound);
        CHECK(fit.r_squared >= 0.99);
    }
}

TEST_CASE("linear loop is scale equivariant", "[control][property]") {
    auto base = unit_rod(2.0, 1.0, 0.0);
    base.phases = {ReferenceSpec::constant(0.0, 0.0, 20.0)};
    base.horizon = 20.0;
    base.decimation = 10;
    std::mt19937_64 rng(3);
    const auto profile = random_cosine_profile(rng, Grid(1.0, base.grid_nodes), 0.0);

    auto one = base;
    one.initial.kind = InitialKind::Table;
    one.initial.values = profile;
    one.nu0 = 0.3;
    const auto a = run_scenario(one);

    for (double c : {2.0, 3.0, 0.1}) {
        auto scaled = one;
        for (auto& v : scaled.initial.values) v *= c;
        scaled.nu0 *= c;
        const auto b = run_scenario(scaled);
        REQUIRE(a.log.size() == b.log.size());
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < a.log.size(); ++i) {
            worst = std::max({worst, std::abs(c * a.log[i].y - b.log[i].y), std::abs(c * a.log[i].q - b.log[i].q),
                              std::abs(c * a.log[i].nu - b.log[i].nu)});
            scale = std::max({scale, std::abs(c * a.log[i].y), std::abs(c * a.log[i].q)});
        }
        INFO("c = " << c);
        CHECK(worst <= 1e-12 * scale);
    }
}

TEST_CASE("emitted control has bounded slew", "[control][property]") {
    // A continuous q gives max|dq| proportional to dt; halving dt halves it.
    auto run_with = [](double dt) {
        auto c = unit_rod(2.0, 1.0, 0.5);
        c.dt = dt;
        c.horizon = 20.0;
        c.phases = {ReferenceSpec::constant(1.0, 0.0, 20.0)};
        c.disturbance = DisturbanceModel::ramp_plus_sine(0.0, 0.2, 1.0, 0.2);
        c.initial.kind = InitialKind::Constant;
        c.initial.value = 0.0;
        return run_scenario(c).summary.max_control_jump;
    };
    const double coarse = run_with(0.002);
    const double fine = run_with(0.001);
    INFO("jumps " << coarse << " " << fine);
    CHECK(coarse / 0.002 == Approx(fine / 0.001).epsilon(0.25));
    CHECK(coarse <= 10.0 * 0.002 * (1.0 + 0.5 + 0.2) * 20.0);
}

TEST_CASE("integrator estimates the disturbance", "[control][property]") {
    auto c = unit_rod(2.0, 1.0, 0.5);
    c.disturbance = DisturbanceModel::ramp_plus_sine(0.0, 0.2, 1.0, 0.2);
    c.initial.kind = InitialKind::Constant;
    c.initial.value = 0.0;
    const auto run = run_scenario(c);
    const auto& ps = run.summary.phases.front();
    INFO("max |nu + phi| " << ps.max_estimation_error);
    CHECK(ps.max_estimation_ratio <= 0.05);
    CHECK(run.summary.sup_phi == Approx(0.2).epsilon(1e-3));
}
