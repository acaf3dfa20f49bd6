#pragma once

#include <nlohmann/json.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "vshock/core.hpp"
#include "vshock/model.hpp"
#include "vshock/profile.hpp"
#include "vshock/templates.hpp"

namespace vshock {

// Time evolution of perturbed profiles (divergence-form central fluxes,
// semi-implicit viscosity), phase tracking through the excited-kernel
// functionals, and the bound reports certifying the pointwise decay claims.

struct EvolveControls {
    double T = 100.0;
    double dx = 0.1;
    double cfl = 0.4;        // advective step fraction
    double x_dom = 0.0;      // 0 => a_max * T + 20 / eta
    int snapshots = 150;
    double blowup_factor = 10.0;
};

struct PerturbationField {
    Vec grid;                   // uniform abscissae
    double dx = 0.0, dt = 0.0;
    std::vector<double> times;  // snapshot times (times[0] = 0)
    std::vector<Mat> values;    // n x K perturbation snapshots
    double E0 = 0.0;            // fitted (1+|x|)^{-3/2} amplitude of u0
    double mass_drift = 0.0;    // conservation audit

    int dim() const { return static_cast<int>(values.front().rows()); }
    int size() const { return static_cast<int>(grid.size()); }

    /// Snapshot interpolated linearly in time.
    Mat at_time(double t) const {
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t hi = it - times.begin(), lo = hi - 1;
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        return (1.0 - w) * values[lo] + w * values[hi];
    }
};

namespace detail {

/// Block-tridiagonal solve (Thomas algorithm with n x n blocks).
/// lower[k] u_{k-1} + diag[k] u_k + upper[k] u_{k+1} = rhs_k.
inline void block_thomas(std::vector<Mat>& lower, std::vector<Mat>& diag,
                         std::vector<Mat>& upper, Mat& rhs) {
    const int K = static_cast<int>(diag.size());
    for (int k = 1; k < K; ++k) {
        Mat m = lower[k] * diag[k - 1].partialPivLu().inverse();
        diag[k] -= m * upper[k - 1];
        rhs.col(k) -= m * rhs.col(k - 1);
    }
    rhs.col(K - 1) = diag[K - 1].partialPivLu().solve(rhs.col(K - 1));
    for (int k = K - 2; k >= 0; --k)
        rhs.col(k) = diag[k].partialPivLu().solve(
            Vec(rhs.col(k) - upper[k] * rhs.col(k + 1)));
}

inline std::vector<double> snapshot_times(double dt, double T, int count) {
    std::vector<double> ts = {0.0};
    double t_min = std::max(4.0 * dt, T * 1e-4);
    for (int i = 0; i < count; ++i) {
        double t = t_min * std::pow(T / t_min, static_cast<double>(i) / (count - 1));
        if (t > ts.back() * (1.0 + 1e-12)) ts.push_back(t);
    }
    if (ts.back() < T) ts.push_back(T);
    ts.back() = T;
    return ts;
}

inline double max_speed(const FluxModel& m) {
    auto sm = endstate_spectrum(m, Side::minus);
    auto sp = endstate_spectrum(m, Side::plus);
    return std::max(sm.a.cwiseAbs().maxCoeff(), sp.a.cwiseAbs().maxCoeff());
}

// Shared semi-implicit driver.  `explicit_rhs(U, out)` fills the advective
// (plus any varying-viscosity remainder) term; `half_B(U, k)` returns the
// viscosity block at interface k+1/2 used implicitly (Crank-Nicolson).
template <class ExplicitRhs, class HalfB>
PerturbationField run_imex(const FluxModel& m, const Vec& grid,
                           const Mat& u_init, double T, double dt, int snapshots,
                           double blowup_cap, ExplicitRhs&& explicit_rhs,
                           HalfB&& half_B) {
    const int n = m.n, K = static_cast<int>(grid.size());
    const double dx = grid[1] - grid[0];
    PerturbationField field;
    field.grid = grid;
    field.dx = dx;
    field.dt = dt;
    field.times = snapshot_times(dt, T, snapshots);
    field.values.reserve(field.times.size());
    field.values.push_back(u_init);

    Mat u = u_init, rhs_prev;
    bool have_prev = false;
    const double mass0 = u.sum() * dx;
    std::size_t next_snap = 1;
    const long n_steps = static_cast<long>(std::ceil(T / dt));
    const double dt_eff = T / n_steps;

    Mat expl(n, K), visc_u(n, K), rhs(n, K);
    std::vector<Mat> lower(K), diag(K), upper(K);
    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt_eff;
        explicit_rhs(u, expl);
        // Implicit viscous blocks at the current state.
        std::vector<Mat> Bh(K - 1);
        for (int k = 0; k + 1 < K; ++k) Bh[k] = half_B(u, k);
        auto apply_visc = [&](const Mat& v, Mat& out) {
            for (int k = 0; k < K; ++k) {
                Vec flux_r = (k + 1 < K)
                                 ? Vec(Bh[k] * (v.col(k + 1) - v.col(k)))
                                 : Vec(Vec::Zero(n));
                Vec flux_l = (k > 0)
                                 ? Vec(Bh[k - 1] * (v.col(k) - v.col(k - 1)))
                                 : Vec(Vec::Zero(n));
                out.col(k) = (flux_r - flux_l) / (dx * dx);
            }
        };
        apply_visc(u, visc_u);

        Mat adv = have_prev ? Mat(1.5 * expl - 0.5 * rhs_prev) : expl;
        rhs = u + dt_eff * adv + (0.5 * dt_eff) * visc_u;
        rhs_prev = expl;
        have_prev = true;

        const double c = 0.5 * dt_eff / (dx * dx);
        for (int k = 0; k < K; ++k) {
            Mat bl = (k > 0) ? Bh[k - 1] : Mat::Zero(n, n);
            Mat br = (k + 1 < K) ? Bh[k] : Mat::Zero(n, n);
            diag[k] = Mat::Identity(n, n) + c * (bl + br);
            lower[k] = (k > 0) ? Mat(-c * bl) : Mat::Zero(n, n);
            upper[k] = (k + 1 < K) ? Mat(-c * br) : Mat::Zero(n, n);
        }
        block_thomas(lower, diag, upper, rhs);
        u = rhs;

        double sup = u.cwiseAbs().maxCoeff();
        if (!std::isfinite(sup) || sup > blowup_cap)
            throw BlowUp("evolution exceeded amplitude cap at t = " +
                         std::to_string(t + dt_eff));

        double t_new = (step + 1) * dt_eff;
        while (next_snap < field.times.size() &&
               t_new + 0.5 * dt_eff >= field.times[next_snap]) {
            field.times[next_snap] = t_new;
            field.values.push_back(u);
            ++next_snap;
        }
    }
    field.times.resize(field.values.size());
    field.mass_drift = std::abs(u.sum() * dx - mass0);
    return field;
}

inline Vec uniform_grid(double X, double dx, int* K_out) {
    int K = static_cast<int>(std::ceil(2.0 * X / dx)) + 1;
    Vec g(K);
    for (int k = 0; k < K; ++k) g[k] = -X + k * dx;
    *K_out = K;
    return g;
}

}  // namespace detail

/// Nonlinear evolution of the perturbation u = u_tilde - u_bar: divergence
/// central fluxes evaluated in perturbation form (u = 0 is exactly
/// stationary), viscosity semi-implicit, homogeneous Neumann far fields.
inline PerturbationField evolve_nonlinear(const FluxModel& m, const Profile& profile,
                                          const std::function<Vec(double)>& u0,
                                          const EvolveControls& ctl = {}) {
    const int n = m.n;
    const double a_max = detail::max_speed(m);
    const double X = ctl.x_dom > 0 ? ctl.x_dom
                                   : a_max * ctl.T + 20.0 / std::max(profile.eta, 0.1);
    int K = 0;
    Vec grid = detail::uniform_grid(X, ctl.dx, &K);
    const double dx = grid[1] - grid[0];
    const double dt = ctl.cfl * dx / std::max(a_max, 1e-8);

    Mat ubar(n, K), u_init(n, K);
    for (int k = 0; k < K; ++k) {
        ubar.col(k) = profile.eval(grid[k]);
        u_init.col(k) = u0(grid[k]);
    }
    double E0 = 0.0;
    for (int k = 0; k < K; ++k)
        E0 = std::max(E0, u_init.col(k).lpNorm<Eigen::Infinity>() *
                              std::pow(1.0 + std::abs(grid[k]), 1.5));
    const double cap =
        ctl.blowup_factor * std::max(E0, u_init.cwiseAbs().maxCoeff());

    // Base-profile fluxes, subtracted so the profile itself is an exact
    // discrete steady state.
    Mat fbar(n, K), ubar_visc(n, K);
    for (int k = 0; k < K; ++k) fbar.col(k) = m.f(ubar.col(k));
    auto half_B_at = [&](const Mat& u, int k) {
        Vec mid = 0.5 * (ubar.col(k) + u.col(k) + ubar.col(k + 1) + u.col(k + 1));
        return m.B(mid);
    };
    {
        for (int k = 0; k < K; ++k) {
            Vec fr = (k + 1 < K)
                         ? Vec(m.B(Vec(0.5 * (ubar.col(k) + ubar.col(k + 1)))) *
                               (ubar.col(k + 1) - ubar.col(k)))
                         : Vec(Vec::Zero(n));
            Vec fl = (k > 0)
                         ? Vec(m.B(Vec(0.5 * (ubar.col(k - 1) + ubar.col(k)))) *
                               (ubar.col(k - 1) - ubar.col(k)))
                         : Vec(Vec::Zero(n));
            ubar_visc.col(k) = (fr + fl) / (dx * dx);
        }
    }

    auto explicit_rhs = [&](const Mat& u, Mat& out) {
        // Advective part: central flux differences of f(ubar+u) - f(ubar).
        Mat fw(n, K);
        for (int k = 0; k < K; ++k) fw.col(k) = m.f(Vec(ubar.col(k) + u.col(k)));
        for (int k = 0; k < K; ++k) {
            Vec hr = (k + 1 < K) ? Vec(0.5 * (fw.col(k) + fw.col(k + 1) -
                                              fbar.col(k) - fbar.col(k + 1)))
                                 : Vec(fw.col(k) - fbar.col(k));
            Vec hl = (k > 0) ? Vec(0.5 * (fw.col(k - 1) + fw.col(k) -
                                          fbar.col(k - 1) - fbar.col(k)))
                             : Vec(fw.col(k) - fbar.col(k));
            out.col(k) = -(hr - hl) / dx;
        }
        // Varying-viscosity remainder: full viscous term of ubar+u minus the
        // base-profile viscous term minus the implicit linear part.
        if (!m.constant_viscosity()) {
            for (int k = 0; k < K; ++k) {
                Vec w_k = ubar.col(k) + u.col(k);
                Vec fr = Vec::Zero(n), fl = Vec::Zero(n);
                if (k + 1 < K) {
                    Vec w_r = ubar.col(k + 1) + u.col(k + 1);
                    fr = m.B(Vec(0.5 * (w_k + w_r))) * (w_r - w_k) -
                         half_B_at(u, k) * (u.col(k + 1) - u.col(k));
                }
                if (k > 0) {
                    Vec w_l = ubar.col(k - 1) + u.col(k - 1);
                    fl = m.B(Vec(0.5 * (w_l + w_k))) * (w_l - w_k) -
                         half_B_at(u, k - 1) * (u.col(k - 1) - u.col(k));
                }
                out.col(k) += (fr + fl) / (dx * dx) - ubar_visc.col(k);
            }
        }
    };

    auto field = detail::run_imex(m, grid, u_init, ctl.T, dt, ctl.snapshots, cap,
                                  explicit_rhs, half_B_at);
    field.E0 = E0;
    return field;
}

/// Linearized evolution v_t = (B(x) v_x)_x - (A(x) v)_x about the profile.
inline PerturbationField evolve_linearized(const FluxModel& m, const Profile& profile,
                                           const std::function<Vec(double)>& v0,
                                           const EvolveControls& ctl = {}) {
    const int n = m.n;
    const double a_max = detail::max_speed(m);
    const double X = ctl.x_dom > 0 ? ctl.x_dom
                                   : a_max * ctl.T + 20.0 / std::max(profile.eta, 0.1);
    int K = 0;
    Vec grid = detail::uniform_grid(X, ctl.dx, &K);
    const double dx = grid[1] - grid[0];
    const double dt = ctl.cfl * dx / std::max(a_max, 1e-8);

    std::vector<Mat> A_half(K - 1), B_half(K - 1);
    for (int k = 0; k + 1 < K; ++k) {
        double xm = 0.5 * (grid[k] + grid[k + 1]);
        Vec ub = profile.eval(xm), dub = profile.eval_deriv(xm);
        A_half[k] = m.jacobian(ub) - m.viscosity_derivative_matrix(ub, dub);
        B_half[k] = m.B(ub);
    }
    Mat v_init(n, K);
    for (int k = 0; k < K; ++k) v_init.col(k) = v0(grid[k]);
    double E0 = v_init.cwiseAbs().maxCoeff();
    const double cap = ctl.blowup_factor * std::max(E0, 1e-12);

    auto explicit_rhs = [&](const Mat& v, Mat& out) {
        for (int k = 0; k < K; ++k) {
            Vec hr = (k + 1 < K)
                         ? Vec(A_half[k] * Vec(0.5 * (v.col(k) + v.col(k + 1))))
                         : Vec(A_half[K - 2] * v.col(k));
            Vec hl = (k > 0)
                         ? Vec(A_half[k - 1] * Vec(0.5 * (v.col(k - 1) + v.col(k))))
                         : Vec(A_half[0] * v.col(k));
            out.col(k) = -(hr - hl) / dx;
        }
    };
    auto half_B = [&](const Mat&, int k) { return B_half[k]; };

    auto field = detail::run_imex(m, grid, v_init, ctl.T, dt, ctl.snapshots, cap,
                                  explicit_rhs, half_B);
    field.E0 = E0;
    return field;
}

// ---------------------------------------------------------------------------
// Green-function column probe against the decaying envelope.

struct GreenProbeReport {
    double y0 = 0.0, T = 0.0;
    std::vector<double> widths;
    std::vector<double> fitted_C;   // E-subtracted remainder constants
    double refinement_change = 0.0; // relative change across width halving
    double raw_growth = 0.0;        // growth of raw-column/envelope ratio
    bool subtracted_pass = false;
    bool raw_fails = false;

    nlohmann::json to_json() const {
        return {{"y0", y0},           {"T", T},
                {"widths", widths},   {"fitted_C", fitted_C},
                {"refinement_change", refinement_change},
                {"raw_growth", raw_growth},
                {"subtracted_pass", subtracted_pass},
                {"raw_fails", raw_fails}};
    }
};

/// Evolves narrow-Gaussian linearized columns at y0, subtracts the excited
/// part E(x,t;y0) = sum_j (dubar/ddelta_j)(x) e_j(y0,t), and fits the
/// remainder against the decaying Green envelope.
inline GreenProbeReport green_probe(const FluxModel& m, const Profile& profile,
                                    const TemplateParams& params, double y0,
                                    const std::vector<double>& widths, double T,
                                    EvolveControls ctl = {}) {
    ctl.T = T;
    GreenProbeReport rep;
    rep.y0 = y0;
    rep.T = T;
    rep.widths = widths;
    ExcitedKernel kernel{params};

    // Family derivatives at delta = 0 (translate family: -ubar').
    std::vector<std::function<Vec(double)>> dfam;
    for (int j = 0; j < profile.ell; ++j) {
        if (profile.ell == 1)
            dfam.push_back([&profile](double x) { return Vec(-profile.eval_deriv(x)); });
        else {
            Mat D = family_derivative(m, profile, j);
            auto grid = profile.grid;
            dfam.push_back([D, grid](double x) {
                int lo = static_cast<int>(std::upper_bound(grid.data(),
                                                           grid.data() + grid.size(),
                                                           x) - grid.data()) - 1;
                lo = std::clamp(lo, 0, static_cast<int>(grid.size()) - 2);
                double w = (x - grid[lo]) / (grid[lo + 1] - grid[lo]);
                return Vec((1 - w) * D.col(lo) + w * D.col(lo + 1));
            });
        }
    }
    Vec dir = Vec::Zero(m.n);
    dir[0] = 1.0;  // probe direction (first component)

    double raw_ratio_early = 0.0, raw_ratio_late = 0.0;
    for (double width : widths) {
        auto v0 = [&](double x) {
            double g = std::exp(-sq(x - y0) / (2.0 * width * width)) /
                       (width * std::sqrt(2.0 * M_PI));
            return Vec(g * dir);
        };
        auto field = evolve_linearized(m, profile, v0, ctl);
        double C = 0.0;
        for (std::size_t j = 0; j < field.times.size(); ++j) {
            double t = field.times[j];
            if (t < 1.0) continue;
            Vec e_here = kernel.contract(y0, t, dir);
            double env_sup = 0.0, raw_sup = 0.0;
            for (int k = 0; k < field.size(); ++k) {
                double x = field.grid[k];
                Vec E = Vec::Zero(m.n);
                for (int q = 0; q < profile.ell; ++q) E += dfam[q](x) * e_here[q];
                Vec rem = field.values[j].col(k) - E;
                double env = gtilde_envelope(x, t, y0, params);
                env_sup = std::max(env_sup, env);
                raw_sup = std::max(raw_sup,
                                   field.values[j].col(k).lpNorm<Eigen::Infinity>());
                if (env > 1e-8)
                    C = std::max(C, rem.lpNorm<Eigen::Infinity>() / env);
            }
            if (width == widths.front() && env_sup > 0) {
                double r = raw_sup / env_sup;
                if (t <= T / 4 && r > raw_ratio_early) raw_ratio_early = r;
                if (t >= T / 2) raw_ratio_late = std::max(raw_ratio_late, r);
            }
        }
        rep.fitted_C.push_back(C);
    }
    if (rep.fitted_C.size() >= 2 && rep.fitted_C.front() > 0)
        rep.refinement_change = std::abs(rep.fitted_C[1] - rep.fitted_C[0]) /
                                rep.fitted_C[0];
    rep.subtracted_pass = rep.refinement_change <= 0.10 &&
                          std::isfinite(rep.fitted_C.front());
    rep.raw_growth = raw_ratio_early > 0 ? raw_ratio_late / raw_ratio_early : 0.0;
    rep.raw_fails = rep.raw_growth > 2.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Phase tracking.

struct ShockTrack {
    std::vector<double> times;
    std::vector<Vec> delta;      // ell components per time
    std::vector<Vec> delta_dot;
    std::vector<double> delta_fit;  // scalar least-squares fit (ell = 1)
    Vec delta_infinity;
    Vec delta_star;              // overcompressive centering point
    Vec masses;                  // outgoing-field masses
    int iterations = 0;
    double fixed_point_residual = 0.0;

    nlohmann::json to_json() const {
        auto unpack = [](const std::vector<Vec>& v) {
            nlohmann::json arr = nlohmann::json::array();
            for (const Vec& x : v)
                arr.push_back(std::vector<double>(x.data(), x.data() + x.size()));
            return arr;
        };
        nlohmann::json j = {{"times", times},
                            {"delta", unpack(delta)},
                            {"delta_dot", unpack(delta_dot)},
                            {"delta_fit", delta_fit},
                            {"iterations", iterations},
                            {"fixed_point_residual", fixed_point_residual}};
        if (delta_infinity.size())
            j["delta_infinity"] = std::vector<double>(
                delta_infinity.data(), delta_infinity.data() + delta_infinity.size());
        if (delta_star.size())
            j["delta_star"] = std::vector<double>(
                delta_star.data(), delta_star.data() + delta_star.size());
        if (masses.size())
            j["masses"] = std::vector<double>(masses.data(),
                                              masses.data() + masses.size());
        return j;
    }
};

namespace detail {

/// Nonuniform central difference of a sampled scalar path.
inline std::vector<double> time_derivative(const std::vector<double>& t,
                                           const std::vector<double>& f) {
    const std::size_t N = t.size();
    std::vector<double> d(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (i == 0)
            d[i] = (f[1] - f[0]) / (t[1] - t[0]);
        else if (i + 1 == N)
            d[i] = (f[i] - f[i - 1]) / (t[i] - t[i - 1]);
        else {
            double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
            d[i] = (f[i + 1] * h1 * h1 - f[i - 1] * h2 * h2 +
                    f[i] * (h2 * h2 - h1 * h1)) /
                   (h1 * h2 * (h1 + h2));
        }
    }
    return d;
}

/// Quadratic nonlinearity of the flux/viscosity expansion about a base
/// state: everything beyond the linearization.
inline Vec q_nonlinear(const FluxModel& m, const Vec& base, const Vec& dbase,
                       const Vec& u, const Vec& du) {
    Vec q = -(m.f(Vec(base + u)) - m.f(base) - m.jacobian(base) * u);
    if (!m.constant_viscosity()) {
        Mat dB = m.B(Vec(base + u)) - m.B(base);
        q += dB * dbase - m.viscosity_derivative_matrix(base, dbase) * u;
        q += dB * du;
    }
    return q;
}

}  // namespace detail

/// Functional phase tracking for translate families (ell = 1): the excited
/// kernel applied to the initial data plus the quadratic feedback, resolved
/// by whole-trajectory fixed-point iteration; cross-validated by the
/// least-squares fit delta_fit.
inline ShockTrack track_phase(const PerturbationField& field,
                              const ExcitedKernel& kernel, const FluxModel& m,
                              const Profile& profile) {
    const int K = field.size();
    const double dx = field.dx;
    const std::size_t NT = field.times.size();

    ShockTrack track;
    track.times = field.times;

    // Linear part: integral of e(y,t) against the initial data.
    const Mat& u0 = field.values.front();
    std::vector<double> lin(NT, 0.0);
    for (std::size_t j = 1; j < NT; ++j) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k)
            acc += kernel.contract(field.grid[k], field.times[j],
                                   Vec(u0.col(k)))[0];
        lin[j] = acc * dx;
    }

    std::vector<double> delta(NT, 0.0), ddot(NT, 0.0);
    for (std::size_t j = 0; j < NT; ++j) delta[j] = lin[j];
    ddot = detail::time_derivative(field.times, delta);

    // Midpoint source samples in s avoid the kernel-derivative singularity
    // at s = t while reusing the stored snapshots.
    struct SourceSlice {
        double s, weight;
        Mat n_of_y;  // Q + delta_dot * u at the slice (n x K)
    };
    auto build_sources = [&](const std::vector<double>& del,
                             const std::vector<double>& dd) {
        std::vector<SourceSlice> slices;
        for (std::size_t i = 0; i + 1 < NT; ++i) {
            SourceSlice sl;
            sl.s = 0.5 * (field.times[i] + field.times[i + 1]);
            sl.weight = field.times[i + 1] - field.times[i];
            double del_s = 0.5 * (del[i] + del[i + 1]);
            double dd_s = 0.5 * (dd[i] + dd[i + 1]);
            Mat u_raw = 0.5 * (field.values[i] + field.values[i + 1]);
            sl.n_of_y.resize(field.dim(), K);
            for (int k = 0; k < K; ++k) {
                double x = field.grid[k];
                Vec base = profile.eval(x - del_s);
                Vec dbase = profile.eval_deriv(x - del_s);
                Vec w = profile.eval(x) + u_raw.col(k);
                int km = std::max(k - 1, 0), kp = std::min(k + 1, K - 1);
                Vec w_x = (Vec(profile.eval(field.grid[kp]) + u_raw.col(kp)) -
                           Vec(profile.eval(field.grid[km]) + u_raw.col(km))) /
                          (field.grid[kp] - field.grid[km]);
                Vec uc = w - base;
                Vec duc = w_x - dbase;
                sl.n_of_y.col(k) =
                    detail::q_nonlinear(m, base, dbase, uc, duc) + dd_s * uc;
            }
            slices.push_back(sl);
        }
        return slices;
    };

    double resid = 0.0;
    int it = 0;
    for (; it < 25; ++it) {
        auto slices = build_sources(delta, ddot);
        std::vector<double> delta_new(NT, 0.0);
        for (std::size_t j = 1; j < NT; ++j) {
            double t = field.times[j];
            double acc = 0.0;
            for (const auto& sl : slices) {
                if (sl.s >= t) break;
                double inner = 0.0;
                for (int k = 0; k < K; ++k)
                    inner += kernel.contract(field.grid[k], t - sl.s,
                                             Vec(sl.n_of_y.col(k)), 1, 0)[0];
                acc += sl.weight * inner * dx;
            }
            delta_new[j] = lin[j] - acc;
        }
        resid = 0.0;
        double scale = 1e-300;
        for (std::size_t j = 0; j < NT; ++j) {
            resid = std::max(resid, std::abs(delta_new[j] - delta[j]));
            scale = std::max(scale, std::abs(delta_new[j]));
        }
        delta = delta_new;
        ddot = detail::time_derivative(field.times, delta);
        if (resid / scale < 1e-8) break;
        if (it == 24)
            throw FixedPointDivergence(
                "phase tracking fixed point stalled; relative residual " +
                std::to_string(resid / scale));
    }
    track.iterations = it + 1;
    track.fixed_point_residual = resid;
    for (std::size_t j = 0; j < NT; ++j) {
        track.delta.push_back(Vec::Constant(1, delta[j]));
        track.delta_dot.push_back(Vec::Constant(1, ddot[j]));
    }

    // Least-squares translate fit via the projection condition
    // g(d) = <w - ubar(. - d), ubar'(. - d)> = 0.
    double d_fit = 0.0;
    for (std::size_t j = 0; j < NT; ++j) {
        auto g = [&](double d) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                double x = field.grid[k];
                Vec diff = profile.eval(x) + field.values[j].col(k) -
                           profile.eval(x - d);
                acc += diff.dot(profile.eval_deriv(x - d));
            }
            return acc * dx;
        };
        for (int newton = 0; newton < 30; ++newton) {
            double g0 = g(d_fit);
            double h = 1e-6 * (1.0 + std::abs(d_fit));
            double gp = (g(d_fit + h) - g(d_fit - h)) / (2 * h);
            if (std::abs(gp) < 1e-14) break;
            double step = g0 / gp;
            d_fit -= step;
            if (std::abs(step) < 1e-12 * (1.0 + std::abs(d_fit))) break;
        }
        track.delta_fit.push_back(d_fit);
    }
    return track;
}

/// Mass-predicted asymptotic state: solves the conservation relation for the
/// family coordinates and the outgoing-field masses.
inline std::pair<Vec, Vec> asymptotic_location(const FluxModel& m,
                                               const PerturbationField& field,
                                               Mat mass_columns = Mat()) {
    auto sm = endstate_spectrum(m, Side::minus);
    auto sp = endstate_spectrum(m, Side::plus);
    if (mass_columns.size() == 0) mass_columns = m.u_minus - m.u_plus;
    const int ell = static_cast<int>(mass_columns.cols());

    std::vector<Vec> outgoing;
    for (int j = 0; j < m.n; ++j) {
        if (sm.a[j] < 0) outgoing.push_back(sm.r.col(j));
        if (sp.a[j] > 0) outgoing.push_back(sp.r.col(j));
    }
    Mat sys(m.n, ell + static_cast<int>(outgoing.size()));
    sys.leftCols(ell) = mass_columns;
    for (std::size_t j = 0; j < outgoing.size(); ++j)
        sys.col(ell + static_cast<int>(j)) = outgoing[j];
    Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
    if (rank < m.n)
        throw RankDeficient("conservation-of-mass system rank " +
                            std::to_string(rank) + " < n");

    Vec data = Vec::Zero(m.n);
    const Mat& u0 = field.values.front();
    for (int k = 0; k < field.size(); ++k) data += u0.col(k) * field.dx;
    Vec sol = svd.solve(data);
    return {sol.head(ell), sol.tail(sol.size() - ell)};
}

/// Overcompressive tracking: centers about the mass-predicted asymptotic
/// family member and evaluates the kernel functional with centering-error
/// sources S and R, enforcing the outgoing-mode orthogonality relations.
inline ShockTrack track_phase_oc(const PerturbationField& field,
                                 const FluxModel& m, const Profile& profile,
                                 double eta_for_params = 0.0) {
    const int K = field.size(), n = m.n, ell = profile.ell;
    const double dx = field.dx;
    const std::size_t NT = field.times.size();
    double eta = eta_for_params > 0 ? eta_for_params : profile.eta;

    // Family chart at the base profile: first derivatives, their masses, and
    // second derivatives for the quadratic expansion of d(ubar)/d(delta).
    const double h = 1e-3;
    std::vector<Mat> F(ell);            // n x (K+1 profile grid) derivatives
    std::vector<std::vector<Mat>> H(ell, std::vector<Mat>(ell));
    std::vector<Profile> plus(ell), minus(ell);
    for (int j = 0; j < ell; ++j) {
        Vec dp = Vec::Zero(ell), dm = Vec::Zero(ell);
        dp[j] = h;
        dm[j] = -h;
        plus[j] = profile_family(m, profile, dp);
        minus[j] = profile_family(m, profile, dm);
        F[j] = (plus[j].values - minus[j].values) / (2 * h);
    }
    for (int j = 0; j < ell; ++j)
        for (int q = 0; q < ell; ++q) {
            if (j == q) {
                H[j][q] = (plus[j].values - 2.0 * profile.values + minus[j].values) /
                          (h * h);
            } else {
                Vec d(ell);
                d.setZero();
                d[j] = h;
                d[q] = h;
                Profile pq = profile_family(m, profile, d);
                d[q] = -h;
                Profile pm = profile_family(m, profile, d);
                d[j] = -h;
                Profile mm = profile_family(m, profile, d);
                d[q] = h;
                Profile mp = profile_family(m, profile, d);
                H[j][q] = (pq.values - pm.values - mp.values + mm.values) /
                          (4 * h * h);
            }
        }
    Mat mass_cols(n, ell);
    for (int j = 0; j < ell; ++j) {
        Vec acc = Vec::Zero(n);
        for (int k = 0; k + 1 < profile.size(); ++k) {
            double hk = profile.grid[k + 1] - profile.grid[k];
            acc += 0.5 * hk * (F[j].col(k) + F[j].col(k + 1));
        }
        mass_cols.col(j) = acc;
    }

    auto [delta_star, masses] = asymptotic_location(m, field, mass_cols);
    Profile star = profile_family(m, profile, delta_star);
    TemplateParams params = make_template_params(m, eta, ell, mass_cols);
    ExcitedKernel kernel{params};
    Mat Pi = make_pi(m);

    // Interpolators from the profile grid to the evolution grid.
    auto sample = [&](const Mat& cols, double x) {
        const Vec& g = profile.grid;
        if (x <= g[0]) return Vec(cols.col(0));
        if (x >= g[g.size() - 1]) return Vec(cols.col(g.size() - 1));
        int lo = static_cast<int>(std::upper_bound(g.data(), g.data() + g.size(),
                                                   x) - g.data()) - 1;
        double w = (x - g[lo]) / (g[lo + 1] - g[lo]);
        return Vec((1 - w) * cols.col(lo) + w * cols.col(lo + 1));
    };

    // Initial data centered about the delta_star member.
    Mat u0s(n, K);
    for (int k = 0; k < K; ++k) {
        double x = field.grid[k];
        u0s.col(k) = profile.eval(x) + field.values.front().col(k) - star.eval(x);
    }
    // Orthogonality audit: the kernel limit must annihilate the centered data.
    {
        Vec z = Vec::Zero(ell);
        for (int k = 0; k < K; ++k)
            z += kernel.contract_limit(field.grid[k], Vec(u0s.col(k))) * dx;
        double data_scale = u0s.cwiseAbs().maxCoeff() + 1e-300;
        if (z.lpNorm<Eigen::Infinity>() > 1e-4 + 1e-2 * data_scale)
            throw OrthogonalityViolation(
                "excited-kernel limit does not annihilate the centered data: " +
                std::to_string(z.lpNorm<Eigen::Infinity>()));
    }

    ShockTrack track;
    track.times = field.times;
    track.delta_star = delta_star;
    track.masses = masses;

    // Linear part with the limit subtracted.
    std::vector<Vec> lin(NT, Vec::Zero(ell));
    for (std::size_t j = 1; j < NT; ++j) {
        Vec acc = Vec::Zero(ell);
        for (int k = 0; k < K; ++k) {
            double y = field.grid[k];
            acc += (kernel.contract(y, field.times[j], Vec(u0s.col(k))) -
                    kernel.contract_limit(y, Vec(u0s.col(k)))) * dx;
        }
        lin[j] = acc;
    }

    std::vector<Vec> delta(NT, delta_star), ddot(NT, Vec::Zero(ell));
    for (std::size_t j = 0; j < NT; ++j) delta[j] = delta_star + lin[j];
    auto differentiate = [&](const std::vector<Vec>& del) {
        std::vector<Vec> out(NT, Vec::Zero(ell));
        for (int c = 0; c < ell; ++c) {
            std::vector<double> comp(NT);
            for (std::size_t j = 0; j < NT; ++j) comp[j] = del[j][c];
            auto d = detail::time_derivative(field.times, comp);
            for (std::size_t j = 0; j < NT; ++j) out[j][c] = d[j];
        }
        return out;
    };
    ddot = differentiate(delta);

    double resid = 0.0;
    int it = 0;
    for (; it < 25; ++it) {
        // Source slices at snapshot midpoints.
        struct Slice {
            double s, weight;
            Mat qr;  // Q + R (n x K)
            Mat ss;  // S (n x K)
        };
        std::vector<Slice> slices;
        for (std::size_t i = 0; i + 1 < NT; ++i) {
            Slice sl;
            sl.s = 0.5 * (field.times[i] + field.times[i + 1]);
            sl.weight = field.times[i + 1] - field.times[i];
            Vec del_s = 0.5 * (delta[i] + delta[i + 1]);
            Vec dd_s = 0.5 * (ddot[i] + ddot[i + 1]);
            Vec dgap = del_s - delta_star;
            Mat u_raw = 0.5 * (field.values[i] + field.values[i + 1]);
            sl.qr.resize(n, K);
            sl.ss.resize(n, K);
            for (int k = 0; k < K; ++k) {
                double x = field.grid[k];
                Vec base = star.eval(x);
                Vec dbase = star.eval_deriv(x);
                // Reconstructed current-family member and primitive u.
                Vec cur = base;
                for (int j2 = 0; j2 < ell; ++j2)
                    cur += sample(F[j2], x) * dgap[j2];
                Vec w = profile.eval(x) + u_raw.col(k);
                Vec u_prim = w - cur;
                int km = std::max(k - 1, 0), kp = std::min(k + 1, K - 1);
                Vec w_x = (Vec(profile.eval(field.grid[kp]) + u_raw.col(kp)) -
                           Vec(profile.eval(field.grid[km]) + u_raw.col(km))) /
                          (field.grid[kp] - field.grid[km]);
                Vec u_prim_x = w_x - dbase;  // first-order in the gap
                Vec q = detail::q_nonlinear(m, base, dbase, u_prim, u_prim_x);
                // R: coefficient differences between the star and current
                // members applied to (u, u_x).
                Mat A_star = m.jacobian(base) -
                             m.viscosity_derivative_matrix(base, dbase);
                Mat A_cur = m.jacobian(cur) -
                            m.viscosity_derivative_matrix(cur, dbase);
                Vec r = (A_star - A_cur) * u_prim +
                        (m.B(base) - m.B(cur)) * u_prim_x;
                sl.qr.col(k) = q + r;
                // S: ddot against the chart curvature.
                Vec s_val = Vec::Zero(n);
                for (int j2 = 0; j2 < ell; ++j2)
                    for (int q2 = 0; q2 < ell; ++q2)
                        s_val += dd_s[j2] * sample(H[j2][q2], x) * dgap[q2];
                sl.ss.col(k) = s_val;
            }
            slices.push_back(sl);
        }

        // Per-slice orthogonality of S against the chart rows.
        for (const auto& sl : slices) {
            Vec pim = Vec::Zero(Pi.rows());
            for (int k = 0; k < K; ++k) pim += Pi * sl.ss.col(k) * dx;
            double s_scale = sl.ss.cwiseAbs().maxCoeff() * K * dx + 1e-300;
            if (pim.lpNorm<Eigen::Infinity>() > 1e-6 + 1e-2 * s_scale)
                throw OrthogonalityViolation(
                    "chart-projected centering error is nonzero at s = " +
                    std::to_string(sl.s));
        }

        std::vector<Vec> delta_new(NT, delta_star);
        for (std::size_t j = 1; j < NT; ++j) {
            double t = field.times[j];
            Vec acc = delta_star + lin[j];
            for (const auto& sl : slices) {
                if (sl.s >= t) break;
                Vec inner_s = Vec::Zero(ell), inner_qr = Vec::Zero(ell);
                for (int k = 0; k < K; ++k) {
                    double y = field.grid[k];
                    inner_s += (kernel.contract(y, t - sl.s, Vec(sl.ss.col(k))) -
                                kernel.contract_limit(y, Vec(sl.ss.col(k))));
                    inner_qr +=
                        kernel.contract(y, t - sl.s, Vec(sl.qr.col(k)), 1, 0);
                }
                acc += sl.weight * dx * (inner_s - inner_qr);
            }
            delta_new[j] = acc;
        }
        resid = 0.0;
        double scale = 1e-300;
        for (std::size_t j = 0; j < NT; ++j) {
            resid = std::max(resid,
                             (delta_new[j] - delta[j]).lpNorm<Eigen::Infinity>());
            scale = std::max(scale, delta_new[j].lpNorm<Eigen::Infinity>());
        }
        delta = delta_new;
        ddot = differentiate(delta);
        if (resid / scale < 1e-8) break;
        if (it == 24)
            throw FixedPointDivergence(
                "overcompressive tracking fixed point stalled");
    }
    track.iterations = it + 1;
    track.fixed_point_residual = resid;
    track.delta = delta;
    track.delta_dot = ddot;
    track.delta_infinity = delta_star;
    return track;
}

// ---------------------------------------------------------------------------
// Bound reports.

struct BoundReport {
    std::vector<double> times;
    std::vector<double> sup_ratio;    // |u_centered| / (theta+psi1+psi2)
    std::vector<double> ddot_ratio;   // |delta_dot| (1+t)
    std::vector<double> dconv_ratio;  // |delta - delta_inf| (1+t)^{1/2}
    std::vector<double> zeta;         // running sup
    std::array<double, 3> lp_slopes{};  // p = 1, 2, inf
    bool slopes_defined = false;
    double deriv_ratio = 0.0;  // smoothing-estimate constant at tau = 1

    nlohmann::json to_json() const {
        return {{"times", times},
                {"sup_ratio", sup_ratio},
                {"ddot_ratio", ddot_ratio},
                {"dconv_ratio", dconv_ratio},
                {"zeta", zeta},
                {"lp_slopes", {{"p1", lp_slopes[0]},
                               {"p2", lp_slopes[1]},
                               {"pinf", lp_slopes[2]}}},
                {"slopes_defined", slopes_defined},
                {"deriv_ratio", deriv_ratio}};
    }
};

/// Lp norms and slope fit of the centered perturbation over a time window.
inline BoundReport bound_report(const PerturbationField& field,
                                const ShockTrack& track, const FluxModel& m,
                                const Profile& profile, const TemplateParams& p,
                                double slope_t_min = 10.0) {
    (void)m;
    BoundReport rep;
    const int K = field.size();
    const double dx = field.dx;
    Vec dinf = track.delta_infinity.size() ? track.delta_infinity
                                           : track.delta.back();

    std::vector<double> log_t, log_l1, log_l2, log_linf;
    std::vector<double> sup_u_over_psi(field.times.size(), 0.0);
    std::vector<double> sup_ux_over_psi(field.times.size(), 0.0);
    double zeta_run = 0.0;
    for (std::size_t j = 0; j < field.times.size(); ++j) {
        double t = field.times[j];
        double d = track.delta[j][0];
        double l1 = 0.0, l2 = 0.0, linf = 0.0, ratio = 0.0, ratio_x = 0.0;
        Vec prev_uc;
        for (int k = 0; k < K; ++k) {
            double x = field.grid[k];
            Vec uc = profile.eval(x) + field.values[j].col(k) -
                     profile.eval(x - d);
            double a = uc.lpNorm<Eigen::Infinity>();
            l1 += a * dx;
            l2 += a * a * dx;
            linf = std::max(linf, a);
            double w = psi_total(x, t, p);
            if (w > 1e-12) {
                ratio = std::max(ratio, a / w);
                if (k > 0) {
                    double ax = (uc - prev_uc).lpNorm<Eigen::Infinity>() / dx;
                    ratio_x = std::max(ratio_x, ax / w);
                }
            }
            prev_uc = uc;
        }
        l2 = std::sqrt(l2);
        rep.times.push_back(t);
        rep.sup_ratio.push_back(ratio);
        sup_u_over_psi[j] = ratio;
        sup_ux_over_psi[j] = ratio_x;
        double ddr = track.delta_dot[j].lpNorm<Eigen::Infinity>() * (1.0 + t);
        rep.ddot_ratio.push_back(ddr);
        rep.dconv_ratio.push_back(
            (track.delta[j] - dinf).lpNorm<Eigen::Infinity>() *
            std::sqrt(1.0 + t));
        zeta_run = std::max(zeta_run, ratio + ddr);
        rep.zeta.push_back(zeta_run);
        if (t >= slope_t_min && linf > 0) {
            log_t.push_back(std::log(1.0 + t));
            log_l1.push_back(std::log(l1));
            log_l2.push_back(std::log(l2));
            log_linf.push_back(std::log(linf));
        }
    }

    auto slope = [&](const std::vector<double>& y) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < log_t.size(); ++i) mx += log_t[i], my += y[i];
        mx /= log_t.size();
        my /= y.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < log_t.size(); ++i) {
            num += (log_t[i] - mx) * (y[i] - my);
            den += sq(log_t[i] - mx);
        }
        return num / den;
    };
    if (log_t.size() >= 3) {
        rep.lp_slopes = {slope(log_l1), slope(log_l2), slope(log_linf)};
        rep.slopes_defined = true;
    }

    // Smoothing check: sup |u_x|/psi at t against tau^{-1/2} sup |u|/psi at
    // t - tau, tau = 1.
    const double tau = 1.0;
    double c = 0.0;
    for (std::size_t j = 0; j < field.times.size(); ++j) {
        double t = field.times[j];
        if (t < tau + 1e-9) continue;
        // locate t - tau
        double prev_ratio = 0.0;
        for (std::size_t i = 0; i + 1 < field.times.size(); ++i)
            if (field.times[i] <= t - tau && field.times[i + 1] >= t - tau) {
                prev_ratio = std::max(sup_u_over_psi[i], sup_u_over_psi[i + 1]);
                break;
            }
        if (prev_ratio > 0)
            c = std::max(c, sup_ux_over_psi[j] /
                                (std::pow(tau, -0.5) * prev_ratio));
    }
    rep.deriv_ratio = c;
    return rep;
}

}  // namespace vshock
