#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "vshock/core.hpp"

namespace vshock {

using RealFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integration on a finite interval.
inline double integrate(const RealFn& f, double a, double b, double rel_tol = 1e-8,
                        unsigned max_depth = 12) {
    if (a == b) return 0.0;
    double error = 0.0;
    double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &error);
    if (!std::isfinite(val))
        throw QuadratureFailure("integrate: non-finite result on finite interval");
    return val;
}

/// Integration over [a, +inf) for integrands decaying at infinity.
inline double integrate_to_inf(const RealFn& f, double a, double rel_tol = 1e-8) {
    boost::math::quadrature::exp_sinh<double> quad;
    double error = 0.0, l1 = 0.0;
    double val = quad.integrate([&](double t) { return f(a + t); }, rel_tol, &error, &l1);
    if (!std::isfinite(val))
        throw QuadratureFailure("integrate_to_inf: non-finite result");
    return val;
}

/// Integration over the whole real line, split at user-provided break points
/// (kernel centers); tails handled by exp_sinh.
inline double integrate_real_line(const RealFn& f, std::vector<double> breaks,
                                  double rel_tol = 1e-8) {
    std::sort(breaks.begin(), breaks.end());
    if (breaks.empty()) breaks = {0.0};
    double total = 0.0;
    boost::math::quadrature::exp_sinh<double> quad;
    double err = 0.0, l1 = 0.0;
    total += quad.integrate([&](double t) { return f(breaks.front() - t); }, rel_tol,
                            &err, &l1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        if (breaks[i + 1] > breaks[i])
            total += integrate(f, breaks[i], breaks[i + 1], rel_tol);
    total += quad.integrate([&](double t) { return f(breaks.back() + t); }, rel_tol,
                            &err, &l1);
    if (!std::isfinite(total))
        throw QuadratureFailure("integrate_real_line: non-finite result");
    return total;
}

/// Time integral  int_0^t g(s) ds  for integrands with (integrable)
/// s^{-1/2}-type singularities at s=0 and s=t.  Both ends are removed by the
/// substitution s = sigma^2 (resp. t-s = sigma^2).
inline double integrate_time_slab(const RealFn& g, double t, double rel_tol = 1e-6) {
    if (t <= 0.0) return 0.0;
    double half = 0.5 * t;
    double left = integrate([&](double sig) { return 2.0 * sig * g(sig * sig); }, 0.0,
                            std::sqrt(half), rel_tol);
    double right = integrate([&](double sig) { return 2.0 * sig * g(t - sig * sig); },
                             0.0, std::sqrt(half), rel_tol);
    return left + right;
}

/// Trapezoid rule on tabulated data with arbitrary abscissae.
inline double trapz(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

}  // namespace vshock
