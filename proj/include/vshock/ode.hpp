#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "vshock/core.hpp"

namespace vshock {

// Adaptive Dormand-Prince 5(4) integrator over Eigen vectors (real or
// complex).  Kept deliberately small: the heavy time stepping in this
// project is a dedicated semi-implicit scheme; this integrator serves the
// traveling-wave shooting and the Evans-system propagation.

template <class State>
struct OdeResult {
    State y;
    double x_end = 0.0;   // where integration actually stopped
    bool reached = true;  // false if stopped early by the stop predicate
    long n_steps = 0;
};

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    long max_steps = 2'000'000;
};

template <class State, class Rhs, class Stop>
OdeResult<State> integrate_rk45(Rhs&& rhs, State y, double x0, double x1,
                                const OdeOptions& opt, Stop&& stop) {
    const double dir = (x1 >= x0) ? 1.0 : -1.0;
    double x = x0;
    double h = dir * std::min(std::abs(opt.initial_step), std::abs(x1 - x0));
    OdeResult<State> out{y, x0, true, 0};

    // Dormand-Prince coefficients.
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    State k1 = rhs(x, y);
    while (dir * (x1 - x) > 1e-300) {
        if (std::abs(h) > std::abs(x1 - x)) h = x1 - x;
        if (std::abs(h) < opt.min_step)
            throw StepUnderflow("rk45: step size underflow at x=" + std::to_string(x));
        if (++out.n_steps > opt.max_steps)
            throw StiffIntegration("rk45: max step count exceeded");

        State k2 = rhs(x + c2 * h, (y + h * (a21 * k1)).eval());
        State k3 = rhs(x + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
        State k4 = rhs(x + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
        State k5 = rhs(x + c5 * h,
                       (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
        State k6 = rhs(x + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 +
                                        a65 * k5)).eval());
        State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        State k7 = rhs(x + h, y5);
        State err_v = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double sc = opt.abs_tol +
                    opt.rel_tol * std::max(y.template lpNorm<Eigen::Infinity>(),
                                           y5.template lpNorm<Eigen::Infinity>());
        double err = err_v.template lpNorm<Eigen::Infinity>() / sc;

        if (err <= 1.0) {
            x += h;
            y = y5;
            k1 = k7;  // FSAL
            if (stop(x, y)) {
                out.y = y;
                out.x_end = x;
                out.reached = false;
                return out;
            }
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
    }
    out.y = y;
    out.x_end = x;
    return out;
}

template <class State, class Rhs>
OdeResult<State> integrate_rk45(Rhs&& rhs, State y0, double x0, double x1,
                                const OdeOptions& opt = {}) {
    return integrate_rk45(std::forward<Rhs>(rhs), std::move(y0), x0, x1, opt,
                          [](double, const State&) { return false; });
}

}  // namespace vshock
