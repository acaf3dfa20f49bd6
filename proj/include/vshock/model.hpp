#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vshock/core.hpp"

namespace vshock {

// A conservation-law system  u_t + f(u)_x = (B(u) u_x)_x  together with the
// endstates of a standing shock (speed normalized to zero).

struct FluxModel {
    int n = 1;
    std::string name;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> df;  // optional; finite differences if absent
    std::function<Mat(const Vec&)> B;
    // dB(u)(v, w): directional derivative of B at u in direction v, applied to w.
    // Optional; finite differences if absent.
    std::function<Vec(const Vec&, const Vec&, const Vec&)> dB;
    Vec u_minus, u_plus;
    double speed = 0.0;

    static double fd_step(const Vec& u) {
        return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + u.norm());
    }

    /// Jacobian of f: analytic when supplied, central differences otherwise.
    Mat jacobian(const Vec& u) const {
        if (df) return df(u);
        const double h = fd_step(u);
        Mat J(n, n);
        for (int i = 0; i < n; ++i) {
            Vec up = u, dn = u;
            up[i] += h;
            dn[i] -= h;
            J.col(i) = (f(up) - f(dn)) / (2.0 * h);
        }
        return J;
    }

    /// dB(u)(v, w) as a vector; finite differences over B when dB is absent.
    Vec viscosity_derivative(const Vec& u, const Vec& v, const Vec& w) const {
        if (dB) return dB(u, v, w);
        const double h = fd_step(u) / std::max(v.norm(), 1e-300);
        return ((B(u + h * v) - B(u - h * v)) / (2.0 * h)) * w;
    }

    /// Matrix M with M v = dB(u)(v, w).
    Mat viscosity_derivative_matrix(const Vec& u, const Vec& w) const {
        Mat M(n, n);
        for (int i = 0; i < n; ++i)
            M.col(i) = viscosity_derivative(u, Vec::Unit(n, i), w);
        return M;
    }

    /// True when B does not depend on the state (sampled at the endstates
    /// and their midpoint).
    bool constant_viscosity() const {
        Mat b0 = B(u_minus);
        Vec mid = 0.5 * (u_minus + u_plus);
        return (B(u_plus) - b0).cwiseAbs().maxCoeff() < 1e-13 &&
               (B(mid) - b0).cwiseAbs().maxCoeff() < 1e-13;
    }

    double rankine_hugoniot_residual() const {
        return (f(u_minus) - f(u_plus)).lpNorm<Eigen::Infinity>();
    }
};

enum class Side { minus, plus };

inline const char* to_string(Side s) { return s == Side::minus ? "minus" : "plus"; }

struct EndstateSpectrum {
    Side side = Side::minus;
    Vec a;     // eigenvalues of df(u_side), strictly increasing
    Mat r;     // right eigenvectors (columns)
    Mat l;     // left eigenvectors (rows), normalized l_j r_k = delta_jk
    Vec beta;  // beta_j = l_j B(u_side) r_j
};

struct AssumptionReport {
    bool h1 = false, h2 = false, h3 = false;
    double theta = 0.0;  // fitted H3 constant
    std::vector<std::string> notes;
    bool all() const { return h1 && h2 && h3; }
};

enum class ShockKind { Lax, Undercompressive, Overcompressive, Mixed };

inline const char* to_string(ShockKind k) {
    switch (k) {
        case ShockKind::Lax: return "Lax";
        case ShockKind::Undercompressive: return "undercompressive";
        case ShockKind::Overcompressive: return "overcompressive";
        default: return "mixed";
    }
}

struct ShockClassification {
    int i_minus = 0;  // characteristics incoming from the left (a_j^- > 0)
    int i_plus = 0;   // incoming from the right (a_j^+ < 0)
    int i = 0;
    int ell = 1;
    ShockKind kind = ShockKind::Lax;
    int gamma = 0;  // 1 for undercompressive/mixed, 0 otherwise
};

inline constexpr double kEigTol = 1e-10;

/// Eigenstructure of df(u_side) with biorthonormal left/right pairs and the
/// diagonal diffusion coefficients beta_j.
inline EndstateSpectrum endstate_spectrum(const FluxModel& m, Side side) {
    const Vec& u = (side == Side::minus) ? m.u_minus : m.u_plus;
    Mat A = m.jacobian(u);
    Eigen::EigenSolver<Mat> es(A);
    const double scale = std::max(A.norm(), 1.0);

    std::vector<int> order(m.n);
    for (int i = 0; i < m.n; ++i) {
        if (std::abs(es.eigenvalues()[i].imag()) > 1e-8 * scale)
            throw NonRealSpectrum("complex eigenvalue of df(u_" +
                                  std::string(to_string(side)) + ")");
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return es.eigenvalues()[i].real() < es.eigenvalues()[j].real();
    });

    EndstateSpectrum sp;
    sp.side = side;
    sp.a.resize(m.n);
    sp.r.resize(m.n, m.n);
    for (int j = 0; j < m.n; ++j) {
        sp.a[j] = es.eigenvalues()[order[j]].real();
        sp.r.col(j) = es.eigenvectors().col(order[j]).real();
        if (std::abs(sp.a[j]) < kEigTol)
            throw ZeroCharacteristic("zero characteristic speed at u_" +
                                     std::string(to_string(side)));
    }
    for (int j = 0; j + 1 < m.n; ++j)
        if (sp.a[j + 1] - sp.a[j] < kEigTol)
            throw NonRealSpectrum("repeated characteristic speeds at u_" +
                                  std::string(to_string(side)));

    sp.l = sp.r.inverse();  // rows biorthonormal to columns of r
    Mat Bu = m.B(u);
    sp.beta.resize(m.n);
    for (int j = 0; j < m.n; ++j) sp.beta[j] = sp.l.row(j) * Bu * sp.r.col(j);
    return sp;
}

/// Checks hypotheses (H1)-(H3) at the given probe states; failures are
/// reported, never thrown.
inline AssumptionReport check_assumptions(const FluxModel& m,
                                          const std::vector<Vec>& probes) {
    AssumptionReport rep;
    rep.h1 = true;
    for (const Vec& u : probes) {
        Eigen::EigenSolver<Mat> es(m.B(u));
        for (int i = 0; i < m.n; ++i)
            if (es.eigenvalues()[i].real() <= 0.0) {
                rep.h1 = false;
                rep.notes.push_back("(H1) fails: Re sigma(B) <= 0 at a probe state");
            }
    }

    rep.h2 = true;
    for (Side side : {Side::minus, Side::plus}) {
        try {
            (void)endstate_spectrum(m, side);
        } catch (const Error& e) {
            rep.h2 = false;
            rep.notes.push_back(std::string("(H2) fails: ") + e.what());
        }
    }

    // (H3): sample k on a two-sided log grid and fit the largest theta with
    // max Re sigma(-ik df - k^2 B) <= -theta k^2 at both endstates.
    rep.theta = std::numeric_limits<double>::infinity();
    rep.h3 = true;
    for (const Vec* u : {&m.u_minus, &m.u_plus}) {
        CMat A = m.jacobian(*u).cast<Cplx>();
        CMat Bu = m.B(*u).cast<Cplx>();
        for (int j = -10; j <= 10; ++j) {
            for (double sgn : {-1.0, 1.0}) {
                double k = sgn * std::ldexp(1.0, j);
                CMat S = Cplx(0.0, -k) * A - (k * k) * Bu;
                Eigen::ComplexEigenSolver<CMat> es(S);
                double re_max = -std::numeric_limits<double>::infinity();
                for (int i = 0; i < m.n; ++i)
                    re_max = std::max(re_max, es.eigenvalues()[i].real());
                rep.theta = std::min(rep.theta, -re_max / (k * k));
            }
        }
    }
    if (!(rep.theta > 1e-8)) {
        rep.h3 = false;
        rep.notes.push_back("(H3) fails: no positive theta fits the symbol bound");
    }
    return rep;
}

/// Classification by the incoming-characteristic count i relative to n,
/// with purity requiring ell = max(i - n, 1).
inline ShockClassification classify(const EndstateSpectrum& sm,
                                    const EndstateSpectrum& sp, int ell) {
    ShockClassification c;
    const int n = static_cast<int>(sm.a.size());
    c.i_minus = static_cast<int>(std::count_if(sm.a.begin(), sm.a.end(),
                                               [](double a) { return a > 0.0; }));
    c.i_plus = static_cast<int>(std::count_if(sp.a.begin(), sp.a.end(),
                                              [](double a) { return a < 0.0; }));
    c.i = c.i_minus + c.i_plus;
    c.ell = ell;
    const int excess = c.i - n;
    if (excess > 1 && ell > excess)
        throw InconsistentEll("ell=" + std::to_string(ell) +
                              " exceeds i-n=" + std::to_string(excess));
    ShockKind ideal = excess < 1   ? ShockKind::Undercompressive
                      : excess == 1 ? ShockKind::Lax
                                    : ShockKind::Overcompressive;
    c.kind = (ell == std::max(excess, 1)) ? ideal : ShockKind::Mixed;
    c.gamma = (c.kind == ShockKind::Undercompressive || c.kind == ShockKind::Mixed)
                  ? 1
                  : 0;
    return c;
}

// ---------------------------------------------------------------------------
// Built-in model registry.

inline FluxModel make_burgers() {
    FluxModel m;
    m.n = 1;
    m.name = "burgers";
    m.f = [](const Vec& u) { return Vec::Constant(1, 0.5 * u[0] * u[0]); };
    m.df = [](const Vec& u) { return Mat::Constant(1, 1, u[0]); };
    m.B = [](const Vec&) { return Mat::Identity(1, 1); };
    m.u_minus = Vec::Constant(1, 1.0);
    m.u_plus = Vec::Constant(1, -1.0);
    return m;
}

/// Two decoupled Burgers fields; as a system, a pure overcompressive shock
/// with ell = 2 (both component shocks translate independently).
inline FluxModel make_burgers2x2() {
    FluxModel m;
    m.n = 2;
    m.name = "burgers2x2";
    m.f = [](const Vec& u) {
        Vec out(2);
        out << 0.5 * u[0] * u[0], 0.5 * u[1] * u[1];
        return out;
    };
    m.df = [](const Vec& u) {
        Mat J = Mat::Zero(2, 2);
        J(0, 0) = u[0];
        J(1, 1) = u[1];
        return J;
    };
    m.B = [](const Vec&) {
        Mat b = Mat::Zero(2, 2);
        b(0, 0) = 1.0;
        b(1, 1) = 0.5;
        return b;
    };
    m.u_minus = (Vec(2) << 1.0, 2.0).finished();
    m.u_plus = (Vec(2) << -1.0, -2.0).finished();
    return m;
}

/// Coupled 2x2 quadratic flux admitting an undercompressive connection.
/// Toolkit-selected parameters: f(u,v) = (u^2/2 + v^2/2, -uv), B = I,
/// endstates (+-1, 0).  On the invariant line v = 0 the profile is the
/// Burgers tanh; the transverse characteristic -u changes sign between the
/// endstates, so exactly one characteristic enters on each side (i - n = 0).
inline FluxModel make_coupled_quadratic() {
    FluxModel m;
    m.n = 2;
    m.name = "coupled_quadratic";
    m.f = [](const Vec& u) {
        Vec out(2);
        out << 0.5 * (u[0] * u[0] + u[1] * u[1]), -u[0] * u[1];
        return out;
    };
    m.df = [](const Vec& u) {
        Mat J(2, 2);
        J << u[0], u[1], -u[1], -u[0];
        return J;
    };
    m.B = [](const Vec&) { return Mat::Identity(2, 2); };
    m.u_minus = (Vec(2) << 1.0, 0.0).finished();
    m.u_plus = (Vec(2) << -1.0, 0.0).finished();
    return m;
}

/// 2x2 diagonal-viscosity reduction of a van der Waals-type phase boundary:
/// state (v, u), flux (-u, p(v)) with the nonmonotone stress p(v) = v - v^3,
/// and diagonal strictly parabolic viscosity.  The standing connection
/// between the two hyperbolic branches (v = -+1) is undercompressive; its
/// v-component is the classical tanh kink.
inline FluxModel make_slemrod_reduced() {
    FluxModel m;
    m.n = 2;
    m.name = "slemrod_reduced";
    m.f = [](const Vec& w) {
        Vec out(2);
        out << -w[1], w[0] - w[0] * w[0] * w[0];
        return out;
    };
    m.df = [](const Vec& w) {
        Mat J(2, 2);
        J << 0.0, -1.0, 1.0 - 3.0 * w[0] * w[0], 0.0;
        return J;
    };
    m.B = [](const Vec&) {
        Mat b = Mat::Zero(2, 2);
        b(0, 0) = 0.8;
        b(1, 1) = 1.25;
        return b;
    };
    m.u_minus = (Vec(2) << -1.0, 0.0).finished();
    m.u_plus = (Vec(2) << 1.0, 0.0).finished();
    return m;
}

/// Custom model assembled from polynomial components.  Each entry of `terms`
/// holds, per flux component, a list of (coefficient, multi-exponent) pairs;
/// `b_terms` does the same per viscosity matrix entry (row-major).
struct PolynomialTerm {
    double coef = 0.0;
    std::vector<int> powers;  // one exponent per state component
};

inline FluxModel make_polynomial_model(int n,
                                       std::vector<std::vector<PolynomialTerm>> terms,
                                       std::vector<std::vector<PolynomialTerm>> b_terms,
                                       Vec u_minus, Vec u_plus,
                                       std::string name = "custom") {
    auto eval_poly = [](const std::vector<PolynomialTerm>& ts, const Vec& u) {
        double s = 0.0;
        for (const auto& t : ts) {
            double p = t.coef;
            for (int i = 0; i < static_cast<int>(t.powers.size()); ++i)
                p *= std::pow(u[i], t.powers[i]);
            s += p;
        }
        return s;
    };
    FluxModel m;
    m.n = n;
    m.name = std::move(name);
    m.f = [terms, eval_poly, n](const Vec& u) {
        Vec out(n);
        for (int i = 0; i < n; ++i) out[i] = eval_poly(terms[i], u);
        return out;
    };
    m.B = [b_terms, eval_poly, n](const Vec& u) {
        Mat b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = eval_poly(b_terms[i * n + j], u);
        return b;
    };
    m.u_minus = std::move(u_minus);
    m.u_plus = std::move(u_plus);
    return m;
}

inline FluxModel registry(const std::string& name) {
    if (name == "burgers") return make_burgers();
    if (name == "burgers2x2") return make_burgers2x2();
    if (name == "coupled_quadratic") return make_coupled_quadratic();
    if (name == "slemrod_reduced") return make_slemrod_reduced();
    throw ConfigError("unknown model '" + name + "'");
}

}  // namespace vshock
