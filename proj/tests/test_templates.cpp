#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "vshock/profile.hpp"
#include "vshock/templates.hpp"

using namespace vshock;

TEST_CASE("cumulative Gaussian normalization and derivatives") {
    CHECK(errfn(-1e8) == Catch::Approx(0.0).margin(1e-15));
    CHECK(errfn(1e8) == Catch::Approx(1.0).margin(1e-15));
    CHECK(errfn(0.0) == Catch::Approx(0.5));
    CHECK(errfn(0.5) == Catch::Approx(0.5 * (1.0 + std::erf(0.5))));

    const double h = 1e-6;
    for (double z : {-1.7, -0.3, 0.0, 0.4, 2.1}) {
        CHECK(errfn_deriv(z) ==
              Catch::Approx((errfn(z + h) - errfn(z - h)) / (2 * h)).margin(1e-8));
        CHECK(errfn_deriv2(z) ==
              Catch::Approx((errfn_deriv(z + h) - errfn_deriv(z - h)) / (2 * h))
                  .margin(1e-6));
    }
}

static TemplateParams burgers_params() {
    return make_template_params(make_burgers(), 1.0, 1);
}

static TemplateParams outgoing_params() {
    // Model with outgoing characteristics on both sides (theta, psi1 active).
    return make_template_params(registry("coupled_quadratic"), 1.0, 1);
}

TEST_CASE("outgoing diffusion template obeys the Lp scaling law") {
    TemplateParams p = outgoing_params();
    auto lp_norm = [&](double t, double q) {
        double acc = 0.0, dx = 0.02;
        for (double x = -20.0 - 2.0 * t; x <= 20.0 + 2.0 * t; x += dx)
            acc += std::pow(theta(x, t, p), q) * dx;
        return std::pow(acc, 1.0 / q);
    };
    for (double q : {1.0, 2.0}) {
        double r = lp_norm(160.0, q) / lp_norm(40.0, q);
        double expected = std::pow(4.0, -0.5 * (1.0 - 1.0 / q));
        CHECK(r == Catch::Approx(expected).epsilon(0.12));
    }
    // sup norm scales like t^{-1/2} directly on the ray
    double s1 = theta(-40.0, 40.0, p), s2 = theta(-160.0, 160.0, p);
    CHECK(s2 / s1 == Catch::Approx(0.5).epsilon(0.05));
}

TEST_CASE("interior and tail templates partition the characteristic cone") {
    TemplateParams p = outgoing_params();
    CHECK(chi(0.0, 10.0, p) == 1.0);
    CHECK(chi(-11.0, 10.0, p) == 0.0);
    CHECK(psi1(-11.0, 10.0, p) == 0.0);
    CHECK(psi2(0.0, 10.0, p) == 0.0);
    CHECK(psi2(-11.0, 10.0, p) > 0.0);
    CHECK(psi_total(3.0, 7.0, p) > 0.0);
}

TEST_CASE("scalar incoming-mode coefficient is one half") {
    TemplateParams p = burgers_params();
    REQUIRE(p.lcoef_minus.size() == 1);
    REQUIRE(p.lcoef_plus.size() == 1);
    CHECK(p.lcoef_minus[0](0, 0) == Catch::Approx(0.5));
    CHECK(p.lcoef_plus[0](0, 0) == Catch::Approx(0.5));

    ExcitedKernel e{p};
    CHECK(e.limit(-3.0)[0] == Catch::Approx(0.5));
    CHECK(e.limit(3.0)[0] == Catch::Approx(0.5));
    Vec u = Vec::Constant(1, 2.0);
    CHECK(e.contract_limit(0.0, u)[0] == Catch::Approx(1.0));
}

TEST_CASE("kernel approaches its limit and is monotone in t at the shock") {
    TemplateParams p = burgers_params();
    ExcitedKernel e{p};
    CHECK(std::abs(e.value(-2.0, 1e6)[0] - e.limit(-2.0)[0]) < 1e-6);
    CHECK(std::abs(e.value(-2.0, 0.01)[0]) < 1e-6);
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        double v = e.value(0.0, t)[0];
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("kernel partial derivatives agree with finite differences") {
    TemplateParams p = burgers_params();
    ExcitedKernel e{p};
    const double h = 1e-5;
    for (double y : {-4.0, -0.5, 0.7, 3.0})
        for (double t : {0.7, 3.0, 11.0}) {
            double dt_fd = (e.value(y, t + h)[0] - e.value(y, t - h)[0]) / (2 * h);
            double dy_fd = (e.value(y + h, t)[0] - e.value(y - h, t)[0]) / (2 * h);
            double dyt_fd = (e.d_y(y, t + h)[0] - e.d_y(y, t - h)[0]) / (2 * h);
            CHECK(e.d_t(y, t)[0] == Catch::Approx(dt_fd).margin(1e-7));
            CHECK(e.d_y(y, t)[0] == Catch::Approx(dy_fd).margin(1e-7));
            CHECK(e.d_yt(y, t)[0] == Catch::Approx(dyt_fd).margin(1e-6));
        }
}

TEST_CASE("kernel derivatives sit under their envelopes on a 40x40 grid") {
    for (int gamma : {0, 1}) {
        TemplateParams p = burgers_params();
        p.gamma = gamma;
        ExcitedKernel e{p};
        double worst = 0.0;
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 40; ++j) {
                double y = -10.0 + 20.0 * i / 39.0;
                double t = 0.25 + 0.5 * j;
                auto env = kernel_envelopes(y, t, p, 1.0);
                auto ratio = [&](double lhs, double rhs) {
                    return rhs > 1e-14 ? lhs / rhs : (lhs > 1e-12 ? 1e18 : 0.0);
                };
                worst = std::max(worst, ratio(std::abs(e.d_t(y, t)[0]), env.e_t));
                worst = std::max(worst, ratio(std::abs(e.d_y(y, t)[0]), env.e_y));
                worst = std::max(worst,
                                 ratio(std::abs(e.value(y, t)[0] - e.limit(y)[0]),
                                       env.e_diff));
                worst =
                    std::max(worst, ratio(std::abs(e.d_yt(y, t)[0]), env.e_yt));
            }
        INFO("gamma = " << gamma);
        CHECK(worst < 5.0);
        CHECK(worst > 0.0);
    }
}

TEST_CASE("decaying Green envelope: positivity, decay, and cross-shock weight") {
    TemplateParams p = burgers_params();
    CHECK(gtilde_envelope(0.0, 1.0, -2.0, p) > 0.0);
    // Spatial decay away from all characteristic rays.
    CHECK(gtilde_envelope(30.0, 1.0, -2.0, p) <
          1e-6 * gtilde_envelope(0.0, 1.0, -2.0, p));
    // Temporal spreading: sup over x decays with t.
    auto sup_x = [&](double t) {
        double s = 0.0;
        for (double x = -30.0; x <= 30.0; x += 0.1)
            s = std::max(s, gtilde_envelope(x, t, -2.0, p));
        return s;
    };
    CHECK(sup_x(64.0) < sup_x(4.0));
}

TEST_CASE("template parameter factory needs masses for multidimensional families") {
    FluxModel m = registry("burgers2x2");
    CHECK_THROWS_AS(make_template_params(m, 1.0, 2), ConfigError);
    Mat masses(2, 2);
    masses.col(0) = Vec((Vec(2) << 2.0, 0.0).finished());
    masses.col(1) = Vec((Vec(2) << 0.0, 4.0).finished());
    TemplateParams p = make_template_params(m, 1.0, 2, masses);
    CHECK(p.ell == 2);
    CHECK(p.incoming_minus.size() == 2);
    CHECK(p.incoming_plus.size() == 2);
}
