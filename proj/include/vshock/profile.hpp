#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "vshock/core.hpp"
#include "vshock/model.hpp"
#include "vshock/ode.hpp"

namespace vshock {

// Traveling-wave profiles: solutions of the once-integrated connection ODE
//     B(u) u' = f(u) - f(u_-),
// computed by shooting from the unstable subspace at the left end and refined
// by collocation with projection boundary conditions.

struct Profile {
    Vec grid;        // strictly increasing abscissae, clustered near x = 0
    Mat values;      // n x (K+1)
    Mat derivative;  // n x (K+1), exact ODE slope at the nodes
    double eta = 0.0;
    double residual = 0.0;
    int ell = 1;
    Vec u_minus, u_plus;

    int size() const { return static_cast<int>(grid.size()); }
    int dim() const { return static_cast<int>(values.rows()); }
    double x_inf() const { return grid[grid.size() - 1]; }

    /// Cubic Hermite evaluation; clamps to the endstates outside the grid.
    Vec eval(double x) const { return hermite(x, false); }
    Vec eval_deriv(double x) const { return hermite(x, true); }

  private:
    Vec hermite(double x, bool deriv) const {
        const int K = size() - 1;
        if (x <= grid[0]) return deriv ? Vec::Zero(dim()) : u_minus;
        if (x >= grid[K]) return deriv ? Vec::Zero(dim()) : u_plus;
        int lo = static_cast<int>(std::upper_bound(grid.data(), grid.data() + K + 1, x) -
                                  grid.data()) - 1;
        lo = std::clamp(lo, 0, K - 1);
        const double h = grid[lo + 1] - grid[lo];
        const double s = (x - grid[lo]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        if (!deriv)
            return h00 * values.col(lo) + h * h10 * derivative.col(lo) +
                   h01 * values.col(lo + 1) + h * h11 * derivative.col(lo + 1);
        const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
        const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
        return d00 * values.col(lo) + d10 * derivative.col(lo) +
               d01 * values.col(lo + 1) + d11 * derivative.col(lo + 1);
    }
};

struct ProfileOptions {
    double x_inf = 0.0;          // 0 => choose from endstate decay rates
    int grid_points = 400;       // K (number of intervals, forced even)
    double tol_profile = 1e-8;   // accepted collocation residual
    double tol_tail = 1e-8;
    double cluster_fraction = 0.6;  // share of points in |x| <= 10/eta
    int max_newton = 60;
};

/// Right-hand side of the connection ODE, u' = B(u)^{-1}(f(u) - f(u_-)).
inline Vec traveling_wave_rhs(const FluxModel& m, const Vec& u) {
    Mat Bu = m.B(u);
    Eigen::FullPivLU<Mat> lu(Bu);
    if (!lu.isInvertible())
        throw SingularViscosity("B(u) is singular at a profile state");
    return lu.solve(m.f(u) - m.f(m.u_minus));
}

/// Jacobian of the connection field at an arbitrary state.
inline Mat traveling_wave_jacobian(const FluxModel& m, const Vec& u) {
    Vec rhs = traveling_wave_rhs(m, u);
    Mat core = m.jacobian(u) - m.viscosity_derivative_matrix(u, rhs);
    return m.B(u).fullPivLu().solve(core);
}

namespace detail {

struct RestPoint {
    Vec lambda;       // real eigenvalues of the connection-field Jacobian
    Mat right;        // columns
    Mat left;         // rows, biorthonormal
    std::vector<int> unstable, stable;  // indices by eigenvalue sign
};

inline RestPoint rest_point(const FluxModel& m, const Vec& u) {
    Mat J = traveling_wave_jacobian(m, u);
    Eigen::EigenSolver<Mat> es(J);
    const double scale = std::max(J.norm(), 1.0);
    RestPoint rp;
    rp.lambda.resize(m.n);
    rp.right.resize(m.n, m.n);
    std::vector<int> order(m.n);
    for (int i = 0; i < m.n; ++i) {
        if (std::abs(es.eigenvalues()[i].imag()) > 1e-8 * scale)
            throw NonTransverse("complex traveling-wave eigenvalues at an endstate");
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return es.eigenvalues()[i].real() < es.eigenvalues()[j].real();
    });
    for (int j = 0; j < m.n; ++j) {
        rp.lambda[j] = es.eigenvalues()[order[j]].real();
        rp.right.col(j) = es.eigenvectors().col(order[j]).real();
        if (std::abs(rp.lambda[j]) < 1e-10 * scale)
            throw NoConnection("endstate is not hyperbolic for the connection ODE");
    }
    rp.left = rp.right.inverse();
    for (int j = 0; j < m.n; ++j)
        (rp.lambda[j] > 0 ? rp.unstable : rp.stable).push_back(j);
    return rp;
}

inline Vec sinh_grid_point(double s, double X, double mu) {
    return Vec::Constant(1, X * std::sinh(mu * s) / std::sinh(mu));
}

inline Vec build_grid(double X, int K, double eta_est, double cluster_fraction) {
    // Choose the sinh stretching so that roughly `cluster_fraction` of the
    // points land in |x| <= 10/eta (where every later quadrature concentrates).
    double target = std::min(10.0 / eta_est, 0.5 * X);
    double mu_lo = 1e-3, mu_hi = 30.0;
    auto frac_at = [&](double mu) {
        return std::sinh(mu * cluster_fraction) / std::sinh(mu);  // x(s*)/X
    };
    double want = target / X;
    double mu = mu_lo;
    if (frac_at(mu_lo) > want) {
        for (int it = 0; it < 80; ++it) {
            mu = 0.5 * (mu_lo + mu_hi);
            (frac_at(mu) > want ? mu_lo : mu_hi) = mu;
        }
    }
    Vec g(K + 1);
    for (int k = 0; k <= K; ++k) {
        double s = -1.0 + 2.0 * k / K;
        g[k] = X * std::sinh(mu * s) / std::sinh(mu);
    }
    g[K / 2] = 0.0;
    return g;
}

// Shooting initial guess: leave u_- along the unstable subspace and record
// the trajectory; falls back to a componentwise tanh ramp on failure.
inline Mat shooting_guess(const FluxModel& m, const Vec& grid, const RestPoint& rm) {
    const int n = m.n, K = static_cast<int>(grid.size()) - 1;
    const Vec du = m.u_plus - m.u_minus;
    const double scale = std::max(du.norm(), 1.0);

    Mat U(n, static_cast<int>(rm.unstable.size()));
    for (int j = 0; j < U.cols(); ++j) U.col(j) = rm.right.col(rm.unstable[j]);
    Vec d = U * (U.colPivHouseholderQr().solve(du));
    if (d.norm() < 1e-12 * scale) d = U.col(0);
    d.normalize();

    Mat guess(n, K + 1);
    Vec u = m.u_minus + (1e-7 * scale) * d;
    guess.col(0) = u;
    OdeOptions opt;
    opt.rel_tol = 1e-10;
    bool diverged = false;
    for (int k = 0; k < K; ++k) {
        if (!diverged) {
            try {
                auto res = integrate_rk45<Vec>(
                    [&](double, const Vec& y) { return traveling_wave_rhs(m, y); }, u,
                    grid[k], grid[k + 1], opt, [&](double, const Vec& y) {
                        return (y - m.u_minus).norm() > 4.0 * scale;
                    });
                u = res.y;
                diverged = !res.reached;
            } catch (const Error&) {
                diverged = true;
            }
        }
        guess.col(k + 1) = diverged ? m.u_plus : u;
    }
    // If the shot never left u_- or ran away, use a tanh ramp instead.
    double mismatch = (guess.col(K) - m.u_plus).norm();
    if (mismatch > 0.75 * scale) {
        double eta0 = rm.lambda[rm.unstable.front()];
        for (int k = 0; k <= K; ++k)
            guess.col(k) =
                m.u_minus + 0.5 * (1.0 + std::tanh(0.5 * eta0 * grid[k])) * du;
    }
    return guess;
}

struct PhaseCondition {
    int component = 0;
    double value = 0.0;  // required value of u_component at x = 0
};

// One collocation Newton solve.  `mass_constraints`, when present, replaces
// the pointwise phase conditions by Pi-weighted mass coordinates relative to
// a base profile (overcompressive family chart).
struct MassConstraint {
    Mat pi;          // ell x n
    Mat base;        // n x (K+1) reference values
    Vec target;      // required Pi-mass offsets
};

inline bool collocation_solve(const FluxModel& m, const Vec& grid,
                              const RestPoint& rm, const RestPoint& rp, Mat& u,
                              const std::vector<PhaseCondition>& phases,
                              const std::optional<MassConstraint>& mass,
                              const ProfileOptions& opt, double* final_residual) {
    const int n = m.n, K = static_cast<int>(grid.size()) - 1;
    const int n_left = static_cast<int>(rm.stable.size());
    const int n_right = static_cast<int>(rp.unstable.size());
    const int n_phase = mass ? static_cast<int>(mass->target.size())
                             : static_cast<int>(phases.size());
    const int n_eq = K * n + n_left + n_right + n_phase;
    const int n_var = (K + 1) * n;
    const Vec f_minus = m.f(m.u_minus);
    const double scale = std::max((m.u_plus - m.u_minus).norm(), 1.0);

    Vec weights;  // trapezoid weights for mass constraints
    if (mass) {
        weights = Vec::Zero(K + 1);
        for (int k = 0; k < K; ++k) {
            double h = grid[k + 1] - grid[k];
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
    }

    auto assemble = [&](const Mat& z, Vec& F) {
        F.setZero(n_eq);
        int row = 0;
        for (int k = 0; k < K; ++k, row += n) {
            double h = grid[k + 1] - grid[k];
            Vec um = 0.5 * (z.col(k) + z.col(k + 1));
            Vec dz = (z.col(k + 1) - z.col(k)) / h;
            F.segment(row, n) = m.B(um) * dz - (m.f(um) - f_minus);
        }
        for (int i = 0; i < n_left; ++i)
            F[row++] = rm.left.row(rm.stable[i]).dot(z.col(0) - m.u_minus);
        for (int i = 0; i < n_right; ++i)
            F[row++] = rp.left.row(rp.unstable[i]).dot(z.col(K) - m.u_plus);
        if (mass) {
            Vec acc = Vec::Zero(mass->target.size());
            for (int k = 0; k <= K; ++k)
                acc += weights[k] * (mass->pi * (z.col(k) - mass->base.col(k)));
            F.segment(row, n_phase) = acc - mass->target;
        } else {
            for (const auto& ph : phases)
                F[row++] = z(ph.component, K / 2) - ph.value;
        }
    };

    auto jacobian = [&](const Mat& z, Mat& J) {
        J.setZero(n_eq, n_var);
        int row = 0;
        for (int k = 0; k < K; ++k, row += n) {
            double h = grid[k + 1] - grid[k];
            Vec um = 0.5 * (z.col(k) + z.col(k + 1));
            Vec dz = (z.col(k + 1) - z.col(k)) / h;
            Mat Bm = m.B(um), dfm = m.jacobian(um);
            Mat dBm = m.viscosity_derivative_matrix(um, dz);
            J.block(row, k * n, n, n) = 0.5 * dBm - Bm / h - 0.5 * dfm;
            J.block(row, (k + 1) * n, n, n) = 0.5 * dBm + Bm / h - 0.5 * dfm;
        }
        for (int i = 0; i < n_left; ++i)
            J.block(row++, 0, 1, n) = rm.left.row(rm.stable[i]);
        for (int i = 0; i < n_right; ++i)
            J.block(row++, K * n, 1, n) = rp.left.row(rp.unstable[i]);
        if (mass) {
            for (int k = 0; k <= K; ++k)
                J.block(row, k * n, n_phase, n) = weights[k] * mass->pi;
        } else {
            for (const auto& ph : phases) J(row++, (K / 2) * n + ph.component) = 1.0;
        }
    };

    Vec F(n_eq);
    Mat J(n_eq, n_var);
    assemble(u, F);
    double fnorm = F.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_newton; ++it) {
        if (fnorm < 1e-12 * scale) break;
        jacobian(u, J);
        Vec step = J.colPivHouseholderQr().solve(-F);
        double damping = 1.0;
        Mat u_new;
        Vec F_new(n_eq);
        double fnorm_new = fnorm;
        for (int half = 0; half < 10; ++half) {
            u_new = u;
            for (int k = 0; k <= K; ++k)
                u_new.col(k) += damping * step.segment(k * n, n);
            assemble(u_new, F_new);
            fnorm_new = F_new.lpNorm<Eigen::Infinity>();
            if (fnorm_new < fnorm || fnorm < 1e-12 * scale) break;
            damping *= 0.5;
        }
        if (fnorm_new >= fnorm && fnorm > 1e-10 * scale) return false;
        u = u_new;
        F = F_new;
        fnorm = fnorm_new;
    }
    if (final_residual) {
        // ODE residual at interval midpoints (the quadrature-free check).
        double r = 0.0;
        for (int k = 0; k < K; ++k) {
            double h = grid[k + 1] - grid[k];
            Vec um = 0.5 * (u.col(k) + u.col(k + 1));
            Vec dz = (u.col(k + 1) - u.col(k)) / h;
            r = std::max(r,
                         (m.B(um) * dz - (m.f(um) - f_minus)).lpNorm<Eigen::Infinity>());
        }
        *final_residual = r;
    }
    return fnorm < 1e-8 * scale;
}

inline double fit_decay_rate(const FluxModel& m, const Vec& grid, const Mat& u) {
    const int K = static_cast<int>(grid.size()) - 1;
    const double scale = std::max((m.u_plus - m.u_minus).norm(), 1.0);
    double eta = 0.0;
    int sides = 0;
    for (int side = 0; side < 2; ++side) {
        std::vector<double> xs, ls;
        for (int k = 0; k <= K; ++k) {
            double x = grid[k];
            if ((side == 0 && x >= -1.0) || (side == 1 && x <= 1.0)) continue;
            double amp = (u.col(k) - (side == 0 ? m.u_minus : m.u_plus)).norm();
            if (amp < 1e-9 * scale || amp > 5e-2 * scale) continue;
            xs.push_back(std::abs(x));
            ls.push_back(std::log(amp));
        }
        if (xs.size() < 4) continue;
        double mx = 0, ml = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], ml += ls[i];
        mx /= xs.size();
        ml /= ls.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            num += (xs[i] - mx) * (ls[i] - ml);
            den += sq(xs[i] - mx);
        }
        double rate = -num / den;
        if (rate > 0) {
            eta = (sides == 0) ? rate : std::min(eta, rate);
            ++sides;
        }
    }
    if (sides == 0) {
        auto rm = rest_point(m, m.u_minus);
        eta = rm.lambda[rm.unstable.front()];
    }
    return eta;
}

}  // namespace detail

inline int connection_indices(const FluxModel& m, const Profile& p);

/// Solves the connection BVP; the returned profile is phase-normalized so the
/// component of largest endstate variation hits the midpoint at x = 0.
inline Profile solve_profile(const FluxModel& m, const ProfileOptions& opt = {}) {
    auto rm = detail::rest_point(m, m.u_minus);
    auto rp = detail::rest_point(m, m.u_plus);
    const int dim_wu = static_cast<int>(rm.unstable.size());
    const int dim_ws = static_cast<int>(rp.stable.size());
    const int ell = std::max(dim_wu + dim_ws - m.n, 1);

    double rate_m = rm.lambda[rm.unstable.front()];
    double rate_p = -rp.lambda[rp.stable.back()];
    double X = opt.x_inf > 0.0
                   ? opt.x_inf
                   : std::clamp(std::max(25.0 / rate_m, 25.0 / rate_p), 10.0, 200.0);
    int K = opt.grid_points + (opt.grid_points % 2);
    Vec grid = detail::build_grid(X, K, std::min(rate_m, rate_p),
                                  opt.cluster_fraction);

    // Phase conditions: midpoint normalization on the ell most-varying
    // components.
    Vec du = (m.u_plus - m.u_minus).cwiseAbs();
    std::vector<int> comp_order(m.n);
    for (int i = 0; i < m.n; ++i) comp_order[i] = i;
    std::sort(comp_order.begin(), comp_order.end(),
              [&](int a, int b) { return du[a] > du[b]; });
    std::vector<detail::PhaseCondition> phases;
    for (int j = 0; j < ell && j < m.n; ++j)
        phases.push_back({comp_order[j],
                          0.5 * (m.u_minus[comp_order[j]] + m.u_plus[comp_order[j]])});

    Mat u = detail::shooting_guess(m, grid, rm);
    // Roughly align the shot with the midpoint normalization before Newton.
    {
        int c = phases.front().component;
        double target = phases.front().value;
        int best = K / 2;
        double bd = std::abs(u(c, best) - target);
        for (int k = 0; k <= K; ++k)
            if (std::abs(u(c, k) - target) < bd) bd = std::abs(u(c, k) - target), best = k;
        double shift = grid[best];
        if (std::abs(shift) > 1e-12) {
            Mat shifted(m.n, K + 1);
            for (int k = 0; k <= K; ++k) {
                double xq = grid[k] + shift;
                if (xq <= grid[0]) shifted.col(k) = m.u_minus;
                else if (xq >= grid[K]) shifted.col(k) = m.u_plus;
                else {
                    int lo = static_cast<int>(std::upper_bound(grid.data(),
                                                               grid.data() + K + 1, xq) -
                                              grid.data()) - 1;
                    double w = (xq - grid[lo]) / (grid[lo + 1] - grid[lo]);
                    shifted.col(k) = (1 - w) * u.col(lo) + w * u.col(lo + 1);
                }
            }
            u = shifted;
        }
    }

    double residual = 0.0;
    bool ok = detail::collocation_solve(m, grid, rm, rp, u, phases, std::nullopt, opt,
                                        &residual);
    if (!ok || residual > opt.tol_profile) {
        // Retry once from the tanh ramp.
        Vec dvec = m.u_plus - m.u_minus;
        double eta0 = std::min(rate_m, rate_p);
        for (int k = 0; k <= K; ++k)
            u.col(k) = m.u_minus + 0.5 * (1.0 + std::tanh(0.5 * eta0 * grid[k])) * dvec;
        ok = detail::collocation_solve(m, grid, rm, rp, u, phases, std::nullopt, opt,
                                       &residual);
        if (!ok || residual > opt.tol_profile)
            throw NoConnection("profile solve failed; best residual " +
                               std::to_string(residual));
    }

    Profile p;
    p.grid = grid;
    p.values = u;
    p.u_minus = m.u_minus;
    p.u_plus = m.u_plus;
    p.derivative.resize(m.n, K + 1);
    for (int k = 0; k <= K; ++k) p.derivative.col(k) = traveling_wave_rhs(m, u.col(k));
    p.residual = residual;
    p.eta = detail::fit_decay_rate(m, grid, u);
    if ((u.col(0) - m.u_minus).norm() > opt.tol_tail ||
        (u.col(K) - m.u_plus).norm() > opt.tol_tail)
        throw NoConnection("profile tails exceed tol_tail");
    p.ell = connection_indices(m, p);
    return p;
}

/// Connection-manifold dimension with a transversality rank test: the
/// unstable frame continued along the profile must meet the stable subspace
/// at u_+ with rank deficiency exactly ell.
inline int connection_indices(const FluxModel& m, const Profile& p) {
    auto rm = detail::rest_point(m, m.u_minus);
    auto rp = detail::rest_point(m, m.u_plus);
    const int dim_wu = static_cast<int>(rm.unstable.size());
    const int dim_ws = static_cast<int>(rp.stable.size());
    const int ell = std::max(dim_wu + dim_ws - m.n, 1);

    Mat W(m.n, dim_wu);
    for (int j = 0; j < dim_wu; ++j) W.col(j) = rm.right.col(rm.unstable[j]);
    using Flat = Eigen::VectorXd;
    auto flatten = [&](const Mat& M) { return Flat(Eigen::Map<const Flat>(M.data(), M.size())); };
    auto unflatten = [&](const Flat& v) {
        return Mat(Eigen::Map<const Mat>(v.data(), m.n, dim_wu));
    };
    OdeOptions oo;
    oo.rel_tol = 1e-9;
    Flat w = flatten(W);
    const int K = p.size() - 1;
    const int chunk = std::max(K / 64, 1);
    for (int k = 0; k < K; k += chunk) {
        int k2 = std::min(k + chunk, K);
        auto res = integrate_rk45<Flat>(
            [&](double x, const Flat& y) {
                Mat J = traveling_wave_jacobian(m, p.eval(x));
                return flatten(Mat(J * unflatten(y)));
            },
            w, p.grid[k], p.grid[k2], oo);
        Mat Q = Eigen::HouseholderQR<Mat>(unflatten(res.y))
                    .householderQ() * Mat::Identity(m.n, dim_wu);
        w = flatten(Q);
    }
    Mat combined(m.n, dim_wu + dim_ws);
    combined.leftCols(dim_wu) = unflatten(w);
    for (int j = 0; j < dim_ws; ++j) {
        Vec s = rp.right.col(rp.stable[j]);
        combined.col(dim_wu + j) = s / s.norm();
    }
    Eigen::JacobiSVD<Mat> svd(combined);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-6 * svd.singularValues()[0]) ++rank;
    int deficiency = dim_wu + dim_ws - rank;
    if (deficiency != ell)
        throw NonTransverse("rank deficiency " + std::to_string(deficiency) +
                            " does not match expected ell " + std::to_string(ell));
    return ell;
}

/// Pi matrix for the overcompressive family chart: rows form an orthonormal
/// basis of the complement of the outgoing characteristic modes.
inline Mat make_pi(const FluxModel& m) {
    auto sm = endstate_spectrum(m, Side::minus);
    auto sp = endstate_spectrum(m, Side::plus);
    std::vector<Vec> outgoing;
    for (int j = 0; j < m.n; ++j) {
        if (sm.a[j] < 0) outgoing.push_back(sm.r.col(j));
        if (sp.a[j] > 0) outgoing.push_back(sp.r.col(j));
    }
    if (outgoing.empty()) return Mat::Identity(m.n, m.n);
    Mat O(m.n, static_cast<int>(outgoing.size()));
    for (int j = 0; j < O.cols(); ++j) O.col(j) = outgoing[j];
    Eigen::JacobiSVD<Mat> svd(O, Eigen::ComputeFullU);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
    Mat Pi = svd.matrixU().rightCols(m.n - rank).transpose();
    return Pi;
}

/// Member of the local profile family: translates for Lax/undercompressive
/// kinds, Pi-mass continuation for overcompressive ones.
inline Profile profile_family(const FluxModel& m, const Profile& base,
                              const Vec& delta, const ProfileOptions& opt = {}) {
    auto sm = endstate_spectrum(m, Side::minus);
    auto sp = endstate_spectrum(m, Side::plus);
    auto cls = classify(sm, sp, base.ell);
    if (delta.lpNorm<Eigen::Infinity>() == 0.0) return base;

    if (cls.kind != ShockKind::Overcompressive) {
        Profile q = base;
        for (int k = 0; k < q.size(); ++k) {
            q.values.col(k) = base.eval(q.grid[k] - delta[0]);
            q.derivative.col(k) = traveling_wave_rhs(m, q.values.col(k));
        }
        return q;
    }

    detail::MassConstraint mass;
    mass.pi = make_pi(m);
    if (mass.pi.rows() != base.ell)
        throw ContinuationFailed("Pi chart dimension does not match ell");
    mass.base = base.values;
    mass.target = delta;
    auto rm = detail::rest_point(m, m.u_minus);
    auto rp = detail::rest_point(m, m.u_plus);
    Mat u = base.values;
    double residual = 0.0;
    if (!detail::collocation_solve(m, base.grid, rm, rp, u, {}, mass, opt, &residual) ||
        residual > opt.tol_profile)
        throw ContinuationFailed("overcompressive family continuation failed");
    Profile q = base;
    q.values = u;
    for (int k = 0; k < q.size(); ++k)
        q.derivative.col(k) = traveling_wave_rhs(m, u.col(k));
    q.residual = residual;
    return q;
}

/// Central-difference derivative of the family with respect to delta_j.
inline Mat family_derivative(const FluxModel& m, const Profile& base, int j,
                             double h = 1e-4, const ProfileOptions& opt = {}) {
    Vec dp = Vec::Zero(base.ell), dm = Vec::Zero(base.ell);
    dp[j] = h;
    dm[j] = -h;
    Profile pp = profile_family(m, base, dp, opt);
    Profile pm = profile_family(m, base, dm, opt);
    return (pp.values - pm.values) / (2.0 * h);
}

}  // namespace vshock
