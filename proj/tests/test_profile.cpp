#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "vshock/profile.hpp"

using namespace vshock;

TEST_CASE("scalar quadratic profile matches the closed-form tanh wave") {
    FluxModel m = make_burgers();
    Profile p = solve_profile(m);
    REQUIRE(p.ell == 1);
    CHECK(p.residual <= 1e-8);

    double max_dev = 0.0;
    for (double x = -20.0; x <= 20.0; x += 0.05)
        max_dev = std::max(max_dev,
                           std::abs(p.eval(x)[0] + std::tanh(0.5 * x)));
    CHECK(max_dev <= 1e-8);
    CHECK(p.eta == Catch::Approx(1.0).margin(0.2));
}

TEST_CASE("decoupled pair profile solves each closed-form component") {
    FluxModel m = registry("burgers2x2");
    Profile p = solve_profile(m);
    REQUIRE(p.ell == 2);
    double dev1 = 0.0, dev2 = 0.0;
    for (double x = -8.0; x <= 8.0; x += 0.1) {
        Vec u = p.eval(x);
        dev1 = std::max(dev1, std::abs(u[0] + std::tanh(0.5 * x)));
        dev2 = std::max(dev2, std::abs(u[1] + 2.0 * std::tanh(2.0 * x)));
    }
    CHECK(dev1 <= 1e-6);
    CHECK(dev2 <= 1e-6);
}

TEST_CASE("partially-parabolic reduced model connects its endstates") {
    FluxModel m = registry("slemrod_reduced");
    Profile p = solve_profile(m);
    CHECK(p.residual <= 1e-7);
    double dev = 0.0;
    for (double x = -6.0; x <= 6.0; x += 0.1)
        dev = std::max(dev, std::abs(p.eval(x)[0] - std::tanh(x / std::sqrt(2.0))));
    CHECK(dev <= 1e-5);
    CHECK((p.eval(10.0) - m.u_plus).lpNorm<Eigen::Infinity>() < 1e-4);
    CHECK((p.eval(-10.0) - m.u_minus).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("undercompressive coupled model connects its endstates") {
    FluxModel m = registry("coupled_quadratic");
    Profile p = solve_profile(m);
    CHECK(p.residual <= 1e-7);
    CHECK(p.ell == 1);
    CHECK((p.eval(p.x_inf()) - m.u_plus).lpNorm<Eigen::Infinity>() < 1e-5);
    CHECK((p.eval(-p.x_inf()) - m.u_minus).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("translate family closure: shifted member reproduces shifted values") {
    FluxModel m = make_burgers();
    Profile p = solve_profile(m);
    Vec d = Vec::Constant(1, 0.37);
    Profile q = profile_family(m, p, d);
    for (double x = -5.0; x <= 5.0; x += 0.5)
        CHECK(q.eval(x)[0] == Catch::Approx(p.eval(x - 0.37)[0]).margin(1e-9));
}

TEST_CASE("family derivative of a translate family is minus the slope") {
    FluxModel m = make_burgers();
    Profile p = solve_profile(m);
    Mat D = family_derivative(m, p, 0);
    double dev = 0.0;
    for (int k = 0; k < p.size(); ++k)
        dev = std::max(dev, std::abs(D(0, k) + p.derivative(0, k)));
    CHECK(dev < 1e-6);
}

TEST_CASE("overcompressive family continuation changes the projected mass") {
    FluxModel m = registry("burgers2x2");
    Profile p = solve_profile(m);
    Mat Pi = make_pi(m);
    REQUIRE(Pi.rows() == 2);

    Vec d(2);
    d << 0.2, -0.1;
    Profile q = profile_family(m, p, d);
    // Trapezoid Pi-mass of the difference from the base member.
    Vec mass = Vec::Zero(2);
    for (int k = 0; k + 1 < p.size(); ++k) {
        double h = p.grid[k + 1] - p.grid[k];
        mass += 0.5 * h * (Pi * (q.values.col(k) - p.values.col(k)) +
                           Pi * (q.values.col(k + 1) - p.values.col(k + 1)));
    }
    CHECK((mass - d).lpNorm<Eigen::Infinity>() < 1e-5);
}
