#pragma once

// Independent spectral oracle: dense finite-difference discretization of the
// linearized operator L v = (B(x) v')' - (A(x) v)' + C(x) v on [-X, X] with
// Neumann ends, eigenvalues via LAPACK dgeev.

#include <lapacke.h>

#include <complex>
#include <vector>

#include "vshock/spectral.hpp"

namespace vshock::oracle {

inline std::vector<std::complex<double>> discretized_eigenvalues(
    const LinearizedSystem& sys, double X, int points) {
    const int n = sys.n, K = points, N = n * K;
    const double dx = 2.0 * X / (K - 1);
    std::vector<double> L(static_cast<std::size_t>(N) * N, 0.0);
    auto at = [&](int row, int col) -> double& {
        // column-major for LAPACK
        return L[static_cast<std::size_t>(col) * N + row];
    };
    auto x_of = [&](int k) { return -X + k * dx; };

    for (int k = 0; k < K; ++k) {
        int km = std::max(k - 1, 0), kp = std::min(k + 1, K - 1);
        Mat B_l = sys.B_of_x(0.5 * (x_of(k) + x_of(km)));
        Mat B_r = sys.B_of_x(0.5 * (x_of(k) + x_of(kp)));
        Mat A_l = sys.A_of_x(x_of(km)), A_r = sys.A_of_x(x_of(kp));
        Mat C = sys.C_at(x_of(k));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                // (B v')' with Neumann one-sided collapse at the ends
                if (kp != k) {
                    at(k * n + i, kp * n + j) += B_r(i, j) / (dx * dx);
                    at(k * n + i, k * n + j) -= B_r(i, j) / (dx * dx);
                }
                if (km != k) {
                    at(k * n + i, km * n + j) += B_l(i, j) / (dx * dx);
                    at(k * n + i, k * n + j) -= B_l(i, j) / (dx * dx);
                }
                // -(A v)' central
                at(k * n + i, kp * n + j) -= A_r(i, j) / (2.0 * dx);
                at(k * n + i, km * n + j) += A_l(i, j) / (2.0 * dx);
                at(k * n + i, k * n + j) += C(i, j);
            }
    }

    std::vector<double> wr(N), wi(N);
    int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', N, L.data(), N,
                             wr.data(), wi.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw Error("dgeev failed with info " + std::to_string(info));
    std::vector<std::complex<double>> ev(N);
    for (int i = 0; i < N; ++i) ev[i] = {wr[i], wi[i]};
    return ev;
}

}  // namespace vshock::oracle
