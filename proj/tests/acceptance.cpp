// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "eig_oracle.hpp"
#include "vshock/evolve.hpp"
#include "vshock/lemmas.hpp"
#include "vshock/profile.hpp"
#include "vshock/spectral.hpp"
#include "vshock/templates.hpp"

using namespace vshock;

namespace {

bool g_all = true;

double now_s() {
    using clock = std::chrono::steady_clock;
    static auto t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail, double secs) {
    std::printf("criterion %2d: %s  (%.1fs)  %s\n", id, pass ? "PASS" : "FAIL",
                secs, detail.c_str());
    std::fflush(stdout);
    g_all = g_all && pass;
}

template <class Fn>
void criterion(int id, Fn&& fn) {
    double t0 = now_s();
    try {
        auto [pass, detail] = fn();
        report(id, pass, detail, now_s() - t0);
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what(), now_s() - t0);
    }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

}  // namespace

int main() {
    FluxModel burgers = make_burgers();
    Profile prof = solve_profile(burgers);
    TemplateParams tp = make_template_params(burgers, prof.eta, 1);

    // 1. Exact interaction identities on random draws.
    criterion(1, [&]() -> std::pair<bool, std::string> {
        std::mt19937_64 rng(0);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            double x = 4.0 * uni(rng), y = 4.0 * uni(rng);
            double t = 0.1 + 4.0 * std::abs(uni(rng));
            double s = (0.05 + 0.9 * std::abs(uni(rng))) * t;
            double M1 = 0.5 + 2.0 * std::abs(uni(rng));
            double M2 = 0.5 + 2.0 * std::abs(uni(rng));
            double a = 2.0 * uni(rng), b = 2.0 * uni(rng), c = 2.0 * uni(rng);
            if (std::abs(b) < 1e-3) b = 1e-3;
            double lhs_scale =
                1.0 + std::abs(interaction1_lhs(x, y, s, t, M1, M2, a, b));
            worst = std::max(worst, interaction1_residual(x, y, s, t, M1, M2, a,
                                                          b) / lhs_scale);
            double lhs2 =
                1.0 + std::abs(interaction2_lhs(x, y, s, t, M1, M2, a, b, c));
            worst = std::max(worst, interaction2_residual(x, y, s, t, M1, M2, a,
                                                          b, c) / lhs2);
        }
        return {worst <= 1e-10, fmt("max relative residual %.2e", worst)};
    });

    // 2. Truncated Gaussian convolution inequality sweep.
    criterion(2, [&]() -> std::pair<bool, std::string> {
        auto f = [](double y) { return std::pow(1.0 + std::abs(y), -1.5); };
        int violations = 0, cases = 0;
        for (double a : {0.25, 1.0, 4.0})
            for (double z : {1.0, 2.0, 4.0, 8.0, 16.0}) {
                ++cases;
                if (!hz_bound_check(f, a, z, 2.0, 0.2).verdict) ++violations;
            }
        return {violations == 0,
                fmt("%g violations in %g cases", violations, cases)};
    });

    // 3. Scalar profile against the closed form.
    criterion(3, [&]() -> std::pair<bool, std::string> {
        double dev = 0.0;
        for (double x = -20.0; x <= 20.0; x += 0.01)
            dev = std::max(dev, std::abs(prof.eval(x)[0] + std::tanh(0.5 * x)));
        bool ok = dev <= 1e-8 && std::abs(prof.eta - 1.0) <= 0.2;
        return {ok, fmt("max deviation %.2e, eta %.3f", dev, prof.eta)};
    });

    // 4. Stability condition with an independent eigensolve oracle.
    criterion(4, [&]() -> std::pair<bool, std::string> {
        auto sys = linearized_coefficients(burgers, prof);
        auto rec = check_condition_D(sys, prof.ell);
        auto ev = oracle::discretized_eigenvalues(sys, prof.x_inf(), 2000);
        double re_max = -1e300;
        for (auto& z : ev) re_max = std::max(re_max, z.real());
        bool ok = rec.origin_winding == 1 && rec.outer_winding == 0 &&
                  re_max <= 1e-3;
        return {ok, fmt("origin %g, outer %g, oracle max Re %.2e",
                        rec.origin_winding, rec.outer_winding, re_max)};
    });

    // 5. Convolution-estimate certification with refinement-stable constants.
    criterion(5, [&]() -> std::pair<bool, std::string> {
        bool ok = true;
        double worst_ratio = 0.0, worst_c = 0.0;
        auto absorb = [&](const QuadratureCheck& qc) {
            ok = ok && qc.verdict && std::isfinite(qc.fitted_C) &&
                 qc.refinement_ratio <= 1.1;
            worst_ratio = std::max(worst_ratio, qc.refinement_ratio);
            worst_c = std::max(worst_c, qc.fitted_C);
        };
        absorb(linear_convolution_check(tp));
        for (int gamma : {0, 1}) {
            TemplateParams pg = tp;
            pg.gamma = gamma;
            absorb(nonlinear_convolution_check(pg));
        }
        absorb(auxiliary_convolution_check(tp));
        return {ok, fmt("worst refinement ratio %.3f, largest C %.3g",
                        worst_ratio, worst_c)};
    });

    // Shared desk-scale run for criteria 6-9.
    const double E0 = 0.01, T_run = 1000.0;
    PerturbationField field;
    ShockTrack track;
    BoundReport rep;
    bool run_ok = false;
    std::string run_err;
    try {
        EvolveControls ctl;
        ctl.T = T_run;
        ctl.dx = 0.25;
        auto u0 = [&](double x) {
            return Vec(Vec::Constant(1, E0 * std::exp(-0.5 * sq(x / 2.0))));
        };
        field = evolve_nonlinear(burgers, prof, u0, ctl);
        track = track_phase(field, ExcitedKernel{tp}, burgers, prof);
        rep = bound_report(field, track, burgers, prof, tp);
        run_ok = true;
    } catch (const std::exception& e) {
        run_err = e.what();
    }

    // 6. Lp decay slopes at desk scale.
    criterion(6, [&]() -> std::pair<bool, std::string> {
        if (!run_ok) return {false, "shared run failed: " + run_err};
        if (!rep.slopes_defined) return {false, "slopes undefined"};
        double s1 = rep.lp_slopes[0], s2 = rep.lp_slopes[1],
               si = rep.lp_slopes[2];
        bool ok = std::abs(si + 0.5) <= 0.1 && std::abs(s2 + 0.25) <= 0.1 &&
                  std::abs(s1 - 0.0) <= 0.1;
        return {ok, fmt("slopes p=1: %.3f, p=2: %.3f, p=inf: %.3f", s1, s2, si)};
    });

    // 7. Weighted pointwise template ratio stable under horizon doubling.
    criterion(7, [&]() -> std::pair<bool, std::string> {
        if (!run_ok) return {false, "shared run failed: " + run_err};
        double sup_half = 0.0, sup_full = 0.0;
        for (std::size_t j = 0; j < rep.times.size(); ++j) {
            if (rep.times[j] <= 500.0)
                sup_half = std::max(sup_half, rep.sup_ratio[j]);
            sup_full = std::max(sup_full, rep.sup_ratio[j]);
        }
        bool ok = std::isfinite(sup_full) && sup_full > 0.0 &&
                  sup_full <= 1.10 * sup_half;
        return {ok, fmt("sup ratio %.3g at T=500 vs %.3g at T=1000", sup_half,
                        sup_full)};
    });

    // 8. Phase convergence rate and asymptotic-shift agreement.
    criterion(8, [&]() -> std::pair<bool, std::string> {
        if (!run_ok) return {false, "shared run failed: " + run_err};
        auto [dinf, masses] = asymptotic_location(burgers, field);
        (void)masses;
        double ceil_half = 0.0, ceil_full = 0.0;
        for (std::size_t j = 0; j < track.times.size(); ++j) {
            double t = track.times[j];
            if (t < 10.0) continue;
            double v = std::abs(track.delta[j][0] - dinf[0]) * std::sqrt(1.0 + t);
            if (t <= 500.0) ceil_half = std::max(ceil_half, v);
            ceil_full = std::max(ceil_full, v);
        }
        double fit_gap = std::abs(dinf[0] - track.delta_fit.back());
        bool ok = std::isfinite(ceil_full) && ceil_full <= 1.10 * ceil_half &&
                  fit_gap <= 0.05 * E0;
        return {ok, fmt("ceiling %.3g -> %.3g, |dinf - dfit(T)| = %.2e",
                        ceil_half, ceil_full, fit_gap)};
    });

    // 9. Functional vs least-squares tracking agreement.
    criterion(9, [&]() -> std::pair<bool, std::string> {
        if (!run_ok) return {false, "shared run failed: " + run_err};
        double gap = 0.0;
        for (std::size_t j = 0; j < track.times.size(); ++j)
            gap = std::max(gap,
                           std::abs(track.delta[j][0] - track.delta_fit[j]));
        double tol = 0.05 * E0 + 10.0 * E0 * E0;
        return {gap <= tol, fmt("max gap %.2e vs tolerance %.2e", gap, tol)};
    });

    // 10. Green-function column probe.
    criterion(10, [&]() -> std::pair<bool, std::string> {
        EvolveControls ctl;
        ctl.dx = 0.1;
        ctl.x_dom = 140.0;
        auto probe = green_probe(burgers, prof, tp, -5.0, {1.0, 0.5}, 100.0, ctl);
        bool ok = probe.subtracted_pass && probe.raw_fails;
        return {ok, fmt("C change %.3f, raw-ratio growth %.2f",
                        probe.refinement_change, probe.raw_growth)};
    });

    return g_all ? 0 : 1;
}
