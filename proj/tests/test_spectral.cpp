#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "eig_oracle.hpp"
#include "vshock/profile.hpp"
#include "vshock/spectral.hpp"

using namespace vshock;

TEST_CASE("exterior-power machinery reproduces determinants") {
    detail::WedgeBasis wb(2);  // ambient C^4, grade 2
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    CMat M(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) M(i, j) = {gauss(rng), gauss(rng)};

    // Laplace pairing of the two column blocks equals det(M).
    CVec wm = wb.wedge_of(M.leftCols(2));
    CVec wp = wb.wedge_of(M.rightCols(2));
    Cplx pairing = 0.0;
    for (int s = 0; s < wb.size(); ++s)
        pairing += static_cast<double>(wb.pairing_sign(s)) * wm[s] *
                   wp[wb.complement_index(s)];
    CHECK(std::abs(pairing - M.determinant()) < 1e-10 * std::abs(M.determinant()));

    // The induced infinitesimal action is the derivative of the wedge of the
    // flowed columns: compound(A) w(X) = d/dh w((I + hA) X) at h = 0.
    CMat A(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) A(i, j) = {gauss(rng), gauss(rng)};
    const double h = 1e-6;
    CMat I = CMat::Identity(4, 4);
    CVec fd = (wb.wedge_of(CMat((I + h * A) * M.leftCols(2))) -
               wb.wedge_of(CMat((I - h * A) * M.leftCols(2)))) /
              (2.0 * h);
    CVec an = wb.compound(A) * wm;
    CHECK((fd - an).norm() < 1e-6 * (1.0 + an.norm()));
}

static LinearizedSystem planted_system() {
    // L v = v'' + 2 sech^2(x) v has the planted eigenvalue 1 with
    // eigenfunction sech(x).
    LinearizedSystem sys;
    sys.n = 1;
    sys.A_of_x = [](double) { return Mat::Zero(1, 1); };
    sys.B_of_x = [](double) { return Mat::Identity(1, 1); };
    sys.C_of_x = [](double x) {
        double s = 1.0 / std::cosh(x);
        return Mat(Mat::Constant(1, 1, 2.0 * s * s));
    };
    sys.A_minus = Mat::Zero(1, 1);
    sys.A_plus = Mat::Zero(1, 1);
    sys.B_minus = Mat::Identity(1, 1);
    sys.B_plus = Mat::Identity(1, 1);
    sys.x_inf = 18.0;
    return sys;
}

TEST_CASE("winding count isolates a planted eigenvalue") {
    auto sys = planted_system();
    EvansOptions opt;
    opt.lambda_ref = 3.0;  // keep the frame anchor away from the eigenvalue
    Contour circle{[](double s) {
                       return Cplx(1.0, 0.0) +
                              0.25 * std::exp(Cplx(0.0, 2.0 * M_PI * s));
                   },
                   64,
                   "planted-circle"};
    ContourSamples samples;
    CHECK(winding_count(sys, circle, opt, &samples) == 1);

    Contour off{[](double s) {
                    return Cplx(2.5, 0.0) +
                           0.25 * std::exp(Cplx(0.0, 2.0 * M_PI * s));
                },
                64,
                "empty-circle"};
    CHECK(winding_count(sys, off, opt, &samples) == 0);
}

TEST_CASE("discretized eigensolve oracle finds the planted eigenvalue") {
    auto sys = planted_system();
    auto ev = oracle::discretized_eigenvalues(sys, 18.0, 600);
    double best = 1e9, re_max = -1e9;
    for (auto& z : ev) {
        best = std::min(best, std::abs(z - Cplx(1.0, 0.0)));
        re_max = std::max(re_max, z.real());
    }
    CHECK(best < 1e-3);
    CHECK(re_max < 1.0 + 1e-3);  // the planted mode is the top of the spectrum
}

TEST_CASE("scalar shock satisfies the spectral stability condition") {
    FluxModel m = make_burgers();
    Profile p = solve_profile(m);
    auto sys = linearized_coefficients(m, p);
    auto rec = check_condition_D(sys, p.ell);
    CHECK(rec.verdict);
    CHECK(rec.origin_winding == 1);
    CHECK(rec.outer_winding == 0);
    CHECK(rec.essential_spectrum_margin > 0.0);
}

TEST_CASE("winding counts are invariant under domain doubling") {
    auto sys = planted_system();
    EvansOptions opt;
    opt.lambda_ref = 3.0;
    Contour circle{[](double s) {
                       return Cplx(1.0, 0.0) +
                              0.25 * std::exp(Cplx(0.0, 2.0 * M_PI * s));
                   },
                   64,
                   "planted-circle"};
    ContourSamples samples;
    auto doubled = sys;
    doubled.x_inf = 2.0 * sys.x_inf;
    CHECK(winding_count(doubled, circle, opt, &samples) ==
          winding_count(sys, circle, opt, &samples));
}

TEST_CASE("contour subdivision is additive for winding counts") {
    auto sys = planted_system();
    EvansOptions opt;
    opt.lambda_ref = 3.0;
    // Rectangle around the planted eigenvalue, split by the vertical line
    // Re = 1.15 so the eigenvalue sits strictly inside the left piece.
    auto rect = [](double x0, double x1, double y0, double y1) {
        return Contour{[=](double s) -> Cplx {
                           double u = 4.0 * s;
                           if (u < 1.0) return {x0 + (x1 - x0) * u, y0};
                           if (u < 2.0) return {x1, y0 + (y1 - y0) * (u - 1.0)};
                           if (u < 3.0) return {x1 - (x1 - x0) * (u - 2.0), y1};
                           return {x0, y1 - (y1 - y0) * (u - 3.0)};
                       },
                       64, "rect"};
    };
    ContourSamples samples;
    int left = winding_count(sys, rect(0.7, 1.15, -0.3, 0.3), opt, &samples);
    int right = winding_count(sys, rect(1.15, 1.3, -0.3, 0.3), opt, &samples);
    int full = winding_count(sys, rect(0.7, 1.3, -0.3, 0.3), opt, &samples);
    CHECK(left == 1);
    CHECK(right == 0);
    CHECK(left + right == full);
}

TEST_CASE("essential-spectrum contact raises an error") {
    FluxModel m = make_burgers();
    Profile p = solve_profile(m);
    auto sys = linearized_coefficients(m, p);
    // Points on the essential spectrum curve lambda = -ik a - k^2 at the
    // endstates have zero margin.
    std::vector<Cplx> pts = {Cplx(-1.0, -1.0)};  // lambda(-ik a - k^2), k = 1
    CHECK(essential_spectrum_margin(sys, pts) < 1e-6);
}
