#pragma once

#include <nlohmann/json.hpp>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <list>
#include <memory>
#include <ostream>
#include <vector>

#include "vshock/core.hpp"
#include "vshock/model.hpp"
#include "vshock/ode.hpp"
#include "vshock/profile.hpp"

namespace vshock {

// Evans-function machinery: the linearized eigenvalue problem
//     lambda v + (A(x) v)' = (B(x) v')' + C(x) v
// is written as a first-order 2n-system and its n-dimensional stable/unstable
// bundles are propagated through exterior-power (compound-matrix)
// coordinates, which preserves analyticity in lambda.  D(lambda) is the
// Wronskian pairing of the two bundles at x = 0; only its zero locations and
// multiplicities are contractual (the absolute scale is normalized).

struct LinearizedSystem {
    int n = 1;
    std::function<Mat(double)> A_of_x, B_of_x;
    std::function<Mat(double)> C_of_x;  // optional zeroth-order term; may be null
    Mat A_minus, A_plus, B_minus, B_plus;
    double x_inf = 25.0;

    Mat C_at(double x) const {
        return C_of_x ? C_of_x(x) : Mat::Zero(n, n);
    }
};

/// Coefficients of the linearization about the profile:
/// A(x) = df(u(x)) - dB(u(x))(., u'(x)), B(x) = B(u(x)).
inline LinearizedSystem linearized_coefficients(const FluxModel& m,
                                                const Profile& profile) {
    auto prof = std::make_shared<Profile>(profile);
    auto model = std::make_shared<FluxModel>(m);
    LinearizedSystem sys;
    sys.n = m.n;
    sys.x_inf = profile.x_inf();
    sys.A_of_x = [model, prof](double x) {
        Vec u = prof->eval(x), du = prof->eval_deriv(x);
        return Mat(model->jacobian(u) - model->viscosity_derivative_matrix(u, du));
    };
    sys.B_of_x = [model, prof](double x) { return model->B(prof->eval(x)); };
    sys.A_minus = m.jacobian(m.u_minus);
    sys.A_plus = m.jacobian(m.u_plus);
    sys.B_minus = m.B(m.u_minus);
    sys.B_plus = m.B(m.u_plus);
    return sys;
}

struct EvansOptions {
    double lambda_ref = 1.0;   // real anchor for the analytic frame choice
    int chunks = 32;           // renormalization intervals per half-line
    double splitting_gap = 1e-8;
    double rel_tol = 1e-9;
};

namespace detail {

// Lexicographic n-subsets of {0,...,2n-1} and the induced action of a matrix
// on the n-th exterior power.
struct WedgeBasis {
    int n2, n;  // ambient dimension 2n and wedge grade n
    std::vector<std::vector<int>> subsets;
    std::vector<int> index_of_mask;  // bitmask -> subset index (or -1)

    explicit WedgeBasis(int n_) : n2(2 * n_), n(n_) {
        index_of_mask.assign(1 << n2, -1);
        std::vector<int> cur;
        build(0, cur);
    }
    void build(int start, std::vector<int>& cur) {
        if (static_cast<int>(cur.size()) == n) {
            int mask = 0;
            for (int i : cur) mask |= 1 << i;
            index_of_mask[mask] = static_cast<int>(subsets.size());
            subsets.push_back(cur);
            return;
        }
        for (int i = start; i < n2; ++i) {
            cur.push_back(i);
            build(i + 1, cur);
            cur.pop_back();
        }
    }
    int size() const { return static_cast<int>(subsets.size()); }

    /// Induced matrix of M on the wedge: d/dx(w_1^...^w_n) = sum_i
    /// w_1^...^(M w_i)^...^w_n.
    CMat compound(const CMat& M) const {
        const int N = size();
        CMat CM = CMat::Zero(N, N);
        for (int col = 0; col < N; ++col) {
            const auto& T = subsets[col];
            int mask = 0;
            for (int i : T) mask |= 1 << i;
            for (int p = 0; p < n; ++p) {
                for (int r = 0; r < n2; ++r) {
                    Cplx entry = M(r, T[p]);
                    if (entry == Cplx(0, 0)) continue;
                    if (r == T[p]) {
                        CM(col, col) += entry;
                        continue;
                    }
                    if (mask & (1 << r)) continue;  // repeated factor
                    int new_mask = (mask & ~(1 << T[p])) | (1 << r);
                    // Sign: moves of r past the other retained indices.
                    int sign = 1;
                    for (int q = 0; q < n; ++q) {
                        if (q == p) continue;
                        int e = T[q];
                        bool between = (T[p] < e && e < r) || (r < e && e < T[p]);
                        if (between) sign = -sign;
                    }
                    CM(index_of_mask[new_mask], col) +=
                        static_cast<double>(sign) * entry;
                }
            }
        }
        return CM;
    }

    /// Wedge coordinates (maximal minors) of a 2n x n matrix of columns.
    CVec wedge_of(const CMat& cols) const {
        CVec w(size());
        CMat minor(n, n);
        for (int s = 0; s < size(); ++s) {
            for (int i = 0; i < n; ++i) minor.row(i) = cols.row(subsets[s][i]);
            w[s] = minor.determinant();
        }
        return w;
    }

    /// Signature of the permutation (S, complement of S) of {0,...,2n-1}.
    int pairing_sign(int s) const {
        const auto& S = subsets[s];
        std::vector<int> perm(S);
        int mask = 0;
        for (int i : S) mask |= 1 << i;
        for (int i = 0; i < n2; ++i)
            if (!(mask & (1 << i))) perm.push_back(i);
        int inv = 0;
        for (std::size_t i = 0; i < perm.size(); ++i)
            for (std::size_t j = i + 1; j < perm.size(); ++j)
                if (perm[i] > perm[j]) ++inv;
        return (inv % 2 == 0) ? 1 : -1;
    }
    int complement_index(int s) const {
        int mask = 0;
        for (int i : subsets[s]) mask |= 1 << i;
        return index_of_mask[~mask & ((1 << n2) - 1)];
    }
};

/// First-order coefficient matrix of the eigenvalue ODE in the variables
/// (v, B v' - A v).
inline CMat evans_matrix(const LinearizedSystem& sys, double x, Cplx lambda) {
    const int n = sys.n;
    Mat A = sys.A_of_x(x), B = sys.B_of_x(x), C = sys.C_at(x);
    Mat Binv = B.fullPivLu().inverse();
    CMat M = CMat::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = (Binv * A).cast<Cplx>();
    M.topRightCorner(n, n) = Binv.cast<Cplx>();
    M.bottomLeftCorner(n, n) =
        lambda * CMat::Identity(n, n) - C.cast<Cplx>();
    return M;
}

inline CMat evans_matrix_endstate(const Mat& A, const Mat& B, int n, Cplx lambda) {
    Mat Binv = B.fullPivLu().inverse();
    CMat M = CMat::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = (Binv * A).cast<Cplx>();
    M.topRightCorner(n, n) = Binv.cast<Cplx>();
    M.bottomLeftCorner(n, n) = lambda * CMat::Identity(n, n);
    return M;
}

/// Spectral projector onto the n eigenvalues of largest (want_unstable) or
/// smallest real part; analytic in lambda away from group collisions.
inline CMat group_projector(const CMat& M, int n, bool want_unstable,
                            double gap_tol) {
    Eigen::ComplexEigenSolver<CMat> es(M);
    const int n2 = 2 * n;
    std::vector<int> order(n2);
    for (int i = 0; i < n2; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return es.eigenvalues()[i].real() > es.eigenvalues()[j].real();
    });
    double gap = es.eigenvalues()[order[n - 1]].real() -
                 es.eigenvalues()[order[n]].real();
    if (gap < gap_tol)
        throw EssentialSpectrum(
            "consistent splitting fails: stable/unstable gap " +
            std::to_string(gap));
    CMat V = es.eigenvectors();
    CMat W = V.inverse();
    CMat P = CMat::Zero(n2, n2);
    for (int i = 0; i < n; ++i) {
        int k = want_unstable ? order[i] : order[n2 - 1 - i];
        P += V.col(k) * W.row(k);
    }
    return P;
}

struct Frame {
    std::vector<int> ref_cols_minus, ref_cols_plus;
};

/// Reference columns chosen once at a real anchor lambda; selecting the same
/// columns of the lambda-dependent projector yields an analytic frame.
inline Frame reference_frame(const LinearizedSystem& sys,
                             const EvansOptions& opt) {
    Frame fr;
    auto pick = [&](const Mat& A, const Mat& B, bool unstable) {
        CMat M = evans_matrix_endstate(A, B, sys.n, Cplx(opt.lambda_ref, 0.0));
        CMat P = group_projector(M, sys.n, unstable, opt.splitting_gap);
        Eigen::ColPivHouseholderQR<CMat> qr(P);
        std::vector<int> cols(sys.n);
        for (int i = 0; i < sys.n; ++i)
            cols[i] = qr.colsPermutation().indices()[i];
        return cols;
    };
    fr.ref_cols_minus = pick(sys.A_minus, sys.B_minus, true);
    fr.ref_cols_plus = pick(sys.A_plus, sys.B_plus, false);
    return fr;
}

inline CVec propagate_wedge(const LinearizedSystem& sys, const WedgeBasis& wb,
                            Cplx lambda, bool from_left,
                            const std::vector<int>& ref_cols,
                            const EvansOptions& opt) {
    const double X = sys.x_inf;
    CMat M_end = evans_matrix_endstate(from_left ? sys.A_minus : sys.A_plus,
                                       from_left ? sys.B_minus : sys.B_plus,
                                       sys.n, lambda);
    CMat P = group_projector(M_end, sys.n, from_left, opt.splitting_gap);
    CMat basis(2 * sys.n, sys.n);
    for (int i = 0; i < sys.n; ++i) basis.col(i) = P.col(ref_cols[i]);
    CVec w = wb.wedge_of(basis);
    double nw = w.norm();
    if (nw < 1e-300)
        throw EssentialSpectrum("degenerate subspace frame at lambda");
    w /= nw;

    OdeOptions oo;
    oo.rel_tol = opt.rel_tol;
    oo.abs_tol = 1e-13;
    double x0 = from_left ? -X : X;
    double step = (0.0 - x0) / opt.chunks;
    for (int c = 0; c < opt.chunks; ++c) {
        double xa = x0 + c * step, xb = x0 + (c + 1) * step;
        auto res = integrate_rk45<CVec>(
            [&](double x, const CVec& y) {
                return CVec(wb.compound(evans_matrix(sys, x, lambda)) * y);
            },
            w, xa, xb, oo);
        w = res.y;
        double norm = w.norm();
        if (!(norm > 0) || !std::isfinite(norm))
            throw StiffIntegration("Evans propagation lost the bundle");
        w /= norm;  // real positive rescale: winding numbers unaffected
    }
    return w;
}

}  // namespace detail

/// Evans function D(lambda), normalized by real-positive rescaling.
inline Cplx evans_evaluate(const LinearizedSystem& sys, Cplx lambda,
                           const EvansOptions& opt = {}) {
    detail::WedgeBasis wb(sys.n);
    detail::Frame fr = detail::reference_frame(sys, opt);
    CVec wm = detail::propagate_wedge(sys, wb, lambda, true, fr.ref_cols_minus, opt);
    CVec wp = detail::propagate_wedge(sys, wb, lambda, false, fr.ref_cols_plus, opt);
    Cplx D(0, 0);
    for (int s = 0; s < wb.size(); ++s)
        D += static_cast<double>(wb.pairing_sign(s)) * wm[s] *
             wp[wb.complement_index(s)];
    return D;
}

// ---------------------------------------------------------------------------
// Contours and winding counts.

struct Contour {
    std::function<Cplx(double)> gamma;  // closed curve on [0,1]
    int initial_samples = 64;
    std::string name;
};

inline Contour origin_circle(double r0 = 1e-2) {
    return {[r0](double t) {
                return r0 * Cplx(std::cos(2 * M_PI * t), std::sin(2 * M_PI * t));
            },
            64, "origin_circle"};
}

/// Boundary of {Re >= 0, r0 <= |lambda| <= R}: right half-circle, imaginary
/// segments, and a rightward indentation around the origin.
inline Contour d_shaped_contour(double r0 = 1e-2, double R = 8.0) {
    return {[r0, R](double t) -> Cplx {
                if (t < 0.5) {  // big arc from -iR through +R to +iR
                    double phi = -M_PI / 2 + 2 * M_PI * t;
                    return R * Cplx(std::cos(phi), std::sin(phi));
                } else if (t < 0.7) {  // +iR down to +i r0
                    double s = (t - 0.5) / 0.2;
                    return Cplx(0.0, R + s * (r0 - R));
                } else if (t < 0.8) {  // indent: +i r0 through +r0 to -i r0
                    double s = (t - 0.7) / 0.1;
                    double phi = M_PI / 2 - M_PI * s;
                    return r0 * Cplx(std::cos(phi), std::sin(phi));
                }
                double s = (t - 0.8) / 0.2;  // -i r0 down to -iR
                return Cplx(0.0, -r0 + s * (r0 - R));
            },
            256, "outer_d_contour"};
}

struct ContourSamples {
    std::vector<double> params;
    std::vector<Cplx> lambda, D;
};

/// Winding number of D along the contour, refined adaptively until adjacent
/// phase increments fall below pi/2 (capped at 2^14 samples).
inline int winding_count(const LinearizedSystem& sys, const Contour& contour,
                         const EvansOptions& opt = {},
                         ContourSamples* out = nullptr) {
    struct Node {
        double t;
        Cplx lambda, D;
    };
    auto make = [&](double t) {
        Cplx lam = contour.gamma(t);
        Cplx D = evans_evaluate(sys, lam, opt);
        if (!std::isfinite(std::abs(D)) || std::abs(D) == 0.0)
            throw PhaseJump("winding_count: vanishing or non-finite D on contour");
        return Node{t, lam, D};
    };
    std::list<Node> nodes;
    for (int i = 0; i <= contour.initial_samples; ++i)
        nodes.push_back(make(static_cast<double>(i) / contour.initial_samples));

    const int cap = 1 << 14;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = nodes.begin(); std::next(it) != nodes.end(); ++it) {
            auto nx = std::next(it);
            double dphi = std::arg(nx->D / it->D);
            if (std::abs(dphi) >= M_PI / 2) {
                if (static_cast<int>(nodes.size()) >= cap)
                    throw PhaseJump(
                        "winding_count: phase increment >= pi/2 at sample cap");
                nodes.insert(nx, make(0.5 * (it->t + nx->t)));
                changed = true;
            }
        }
    }
    double total = 0.0;
    for (auto it = nodes.begin(); std::next(it) != nodes.end(); ++it)
        total += std::arg(std::next(it)->D / it->D);
    double w = total / (2 * M_PI);
    int wi = static_cast<int>(std::lround(w));
    if (std::abs(w - wi) > 0.05)
        throw PhaseJump("winding_count: non-integer winding " + std::to_string(w));
    if (out) {
        for (const auto& nd : nodes) {
            out->params.push_back(nd.t);
            out->lambda.push_back(nd.lambda);
            out->D.push_back(nd.D);
        }
    }
    return wi;
}

/// Minimal distance from the sampled contour to the endstate dispersion
/// curves lambda(k) = spec(-ik A - k^2 B).
inline double essential_spectrum_margin(const LinearizedSystem& sys,
                                        const std::vector<Cplx>& contour_pts) {
    double margin = INFINITY;
    for (int j = -10; j <= 10; ++j) {
        for (double sgn : {-1.0, 1.0}) {
            double k = sgn * std::pow(2.0, j);
            for (int side = 0; side < 2; ++side) {
                const Mat& A = side ? sys.A_plus : sys.A_minus;
                const Mat& B = side ? sys.B_plus : sys.B_minus;
                CMat S = Cplx(0, -k) * A.cast<Cplx>() - (k * k) * B.cast<Cplx>();
                Eigen::ComplexEigenSolver<CMat> es(S);
                for (int i = 0; i < sys.n; ++i)
                    for (const Cplx& lam : contour_pts)
                        margin = std::min(margin,
                                          std::abs(lam - es.eigenvalues()[i]));
            }
        }
    }
    return margin;
}

struct EvansRecord {
    ContourSamples outer, inner;
    int outer_winding = 0;
    int origin_winding = 0;
    int ell_expected = 1;
    double essential_spectrum_margin = 0.0;
    bool verdict = false;
    std::string detail;

    nlohmann::json to_json() const {
        auto pack = [](const ContourSamples& s) {
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t i = 0; i < s.lambda.size(); ++i)
                arr.push_back({{"re_lambda", s.lambda[i].real()},
                               {"im_lambda", s.lambda[i].imag()},
                               {"re_D", s.D[i].real()},
                               {"im_D", s.D[i].imag()}});
            return arr;
        };
        return {{"outer_samples", pack(outer)},
                {"inner_samples", pack(inner)},
                {"outer_winding", outer_winding},
                {"origin_winding", origin_winding},
                {"ell_expected", ell_expected},
                {"essential_spectrum_margin", essential_spectrum_margin},
                {"verdict", verdict},
                {"detail", detail}};
    }

    void write_csv(std::ostream& os) const {
        os << "re_lambda,im_lambda,re_D,im_D\n";
        auto dump = [&os](const ContourSamples& s) {
            for (std::size_t i = 0; i < s.lambda.size(); ++i)
                os << s.lambda[i].real() << ',' << s.lambda[i].imag() << ','
                   << s.D[i].real() << ',' << s.D[i].imag() << '\n';
        };
        dump(outer);
        dump(inner);
    }
};

/// Stability condition: no zeroes of D inside the outer D-shaped contour and
/// exactly ell zeroes (the family modes) inside the origin circle.
inline EvansRecord check_condition_D(const LinearizedSystem& sys, int ell,
                                     double r0 = 1e-2, double R = 8.0,
                                     const EvansOptions& opt = {}) {
    EvansRecord rec;
    rec.ell_expected = ell;
    rec.outer_winding = winding_count(sys, d_shaped_contour(r0, R), opt, &rec.outer);
    rec.origin_winding = winding_count(sys, origin_circle(r0), opt, &rec.inner);
    std::vector<Cplx> pts = rec.outer.lambda;
    pts.insert(pts.end(), rec.inner.lambda.begin(), rec.inner.lambda.end());
    rec.essential_spectrum_margin = essential_spectrum_margin(sys, pts);
    rec.verdict = (rec.outer_winding == 0) && (rec.origin_winding == ell);
    if (!rec.verdict) {
        rec.detail = "outer winding " + std::to_string(rec.outer_winding) +
                     ", origin multiplicity " + std::to_string(rec.origin_winding) +
                     " != " + std::to_string(ell);
    }
    return rec;
}

}  // namespace vshock
