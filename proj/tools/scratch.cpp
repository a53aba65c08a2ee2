// Development scratch pad, phase 2: applications, oscillating family, 2D.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "wkam/kernel.hpp"
#include "wkam/mather.hpp"
#include "wkam/model.hpp"
#include "wkam/stationary.hpp"

using namespace wkam;

static double S_exact(double x) {
    x = x - std::floor(x);
    const double y = x <= 0.5 ? x : 1.0 - x;
    return 2.0 / M_PI * (1.0 - std::cos(M_PI * y));
}

int main() {
    using clock = std::chrono::steady_clock;
    auto tic = clock::now();
    auto toc = [&](const char* what) {
        const double dt = std::chrono::duration<double>(clock::now() - tic).count();
        std::printf("  [%-30s %6.2f s]\n", what, dt);
        tic = clock::now();
    };

    // ---------- app2 ----------
    {
        const int n = 256;
        PeriodicGrid g(1, n);
        ContactModel m = make_app2_paper();
        m.momentum_box = 4.0;
        SolverConfig cfg;
        cfg.tol = 1e-6;

        MonotonicityProfile prof = monotonicity_profile(m, 2.0, 0.01);
        std::printf("app2 profile R=2 lam=0.01: delta=%.6f kappa=%.6f ratio=%.5f (>=0.9608?)\n",
                    prof.delta, prof.kappa, prof.ratio);

        SchemeCriticalValue ch = scheme_critical_value(m, g, cfg);
        std::printf("app2 c_h=%.8f spread=%.1e iters=%ld\n", ch.c, ch.spread, ch.iterations);
        toc("app2 c_h");

        CriticalValueOptions copts;
        copts.lo_tau = 1.0 / 32.0;
        copts.lo_time = 64.0;
        SolverConfig ccfg = cfg;
        ccfg.tol = 1e-7;
        CriticalValueEstimate est = critical_value(m, g, ccfg, copts);
        std::printf("app2 critical: c=%.6f c_lo=%.6f gap=%.2e\n", est.c, est.c_lo, est.gap);
        toc("app2 critical_value");

        for (double lam : {0.1, 0.05, 0.025}) {
            SandwichReport sr = sandwich_check(m, g, lam, 2.0, ch.c, cfg);
            std::printf("  sandwich lam=%.3f width=%.5f ordered=%d worst=%.2e\n", lam,
                        sr.width, int(sr.ordered), sr.worst_violation);
        }
        toc("app2 sandwich x3");

        std::vector<double> lams;
        for (int k = 3; k <= 7; ++k) lams.push_back(std::pow(2.0, -k));
        SolverConfig swcfg = cfg;
        swcfg.tol = 1e-5;
        SweepReport rep = lambda_sweep(m, g, ch.c, lams, swcfg);
        std::printf("app2 sweep gaps:");
        for (double gp : rep.sup_gaps) std::printf(" %.2e", gp);
        std::printf(" non_cauchy=%d\n", int(rep.non_cauchy));
        RoleReport rr = verify_viscosity_role(m, rep.solutions.back(), lams.back(), ch.c,
                                              ViscosityRole::Solution, 0.02,
                                              ResidualScheme::LaxFriedrichs, swcfg);
        std::printf("  limit LF role pass=%d worst=%.2e\n", int(rr.passed), rr.worst_value);
        toc("app2 sweep");
    }

    // ---------- app1 routes ----------
    {
        const int n = 256;
        PeriodicGrid g(1, n);
        ContactModel m = make_app1_cubic();
        m.momentum_box = 4.0;
        SolverConfig cfg;
        cfg.tol = 1e-5;

        SchemeCriticalValue ch = scheme_critical_value(m, g, cfg);
        std::printf("app1 c_h=%.8f\n", ch.c);

        std::vector<double> lams;
        for (int k = 3; k <= 8; ++k) lams.push_back(std::pow(2.0, -k));
        SweepReport rep = lambda_sweep(m, g, ch.c, lams, cfg);
        const GridFunction& u_sweep = rep.solutions.back();
        std::printf("app1 sweep gaps:");
        for (double gp : rep.sup_gaps) std::printf(" %.2e", gp);
        std::printf("\n");
        toc("app1 sweep");

        // kernel route: pendulum barrier (same G), c = 1 analytic
        ContactModel mk = make_pendulum();
        mk.momentum_box = 5.0;
        const double tau = 1.0 / 64.0;
        const int rad = int(4.0 * tau * n + 1e-9);
        LagrangianTable L = legendre_transform(mk, g, 4.0, 2 * rad + 1, 201);
        BarrierBundle bb = build_barrier_bundle(L, 1.0, tau, 32.0, 16.0, 32.0, 1e-4);
        std::printf("app1 aubry nodes=%zu tol=%.2e\n", bb.aubry.nodes.size(), bb.aubry_tol);
        auto verts = enumerate_mather_vertices(L, ClosednessBasis::HatNodes, 1e-9, 3);
        std::vector<std::vector<double>> projected;
        for (auto& v : verts) projected.push_back(project_measure(v.measure));
        GridFunction weight(g, 1.0);  // f_u(x,0) = 1 for the cubic model
        GridFunction u_wrep = weighted_representation(bb.h, projected, weight);
        double gap_ab = sup_norm_diff(u_sweep, u_wrep);

        // breve route: discounted sweep of (G - c)
        ContactModel br = breve_transform(m, 1.0);
        SchemeCriticalValue chb = scheme_critical_value(br, g, cfg);
        SweepReport repb = lambda_sweep(br, g, chb.c, lams, cfg);
        double gap_ac = sup_norm_diff(u_sweep, repb.solutions.back());
        double gap_bc = sup_norm_diff(u_wrep, repb.solutions.back());
        double range = 0;
        for (std::size_t i = 0; i < u_sweep.size(); ++i) range = std::max(range, u_sweep[i]);
        std::printf("app1 routes: range=%.4f gaps ab=%.4f ac=%.4f bc=%.4f (3%%=%.4f)\n", range,
                    gap_ab, gap_ac, gap_bc, 0.03 * range);
        toc("app1 routes");
    }

    // ---------- oscillating ----------
    {
        const int n = 512;
        PeriodicGrid g(1, n);
        ContactModel dw = make_double_well();
        dw.momentum_box = 5.0;
        const double tau = 1.0 / 64.0;
        const int rad = int(4.0 * tau * n + 1e-9);
        LagrangianTable L = legendre_transform(dw, g, 4.0, 2 * rad + 1, 201);
        BarrierBundle bb = build_barrier_bundle(L, 1.0, tau, 32.0, 16.0, 32.0, 1e-4);
        std::printf("dwell aubry nodes: %zu (expect near 0 and 0.5)\n", bb.aubry.nodes.size());
        GridFunction f(g), gg(g);
        for (int i = 0; i < n; ++i) {
            f[i] = bb.h.at(0, i);
            gg[i] = bb.h.at(n / 2, i);
        }
        const double fg = sup_norm_diff(f, gg);
        std::printf("sup|f-g| = %.5f (expect 2/pi = %.5f)\n", fg, 2 / M_PI);
        toc("oscillating targets");

        ContactModel osc = build_oscillating(dw, f, gg);
        osc.momentum_box = 4.0;
        SolverConfig cfg;
        cfg.tol = 1e-5;
        SchemeCriticalValue ch = scheme_critical_value(osc, g, cfg);
        std::printf("osc c_h=%.8f\n", ch.c);
        std::vector<double> lams;
        for (int m2 : {4, 5, 8, 9, 16, 17, 32, 33, 64, 65, 84, 85})
            lams.push_back(1.0 / m2);
        GridFunction uf(g), ug(g);
        for (double lam : lams) {
            SolverConfig rcfg = cfg;
            rcfg.tol = 1e-5 * lam;
            SolveResult r = solve_stationary(osc, g, lam, ch.c, rcfg);
            const bool fb = (long(std::floor(1 / lam + 1e-9)) % 2 == 0);
            const GridFunction& target = fb ? f : gg;
            const double err = sup_norm_diff(r.u, target);
            std::printf("  lam=1/%.0f branch=%s err=%.4f (allow %.4f) iters=%ld\n", 1 / lam,
                        fb ? "f" : "g", err, lam + 0.02, r.iterations);
            if (fb) uf = r.u;
            else ug = r.u;
        }
        std::printf("  candidate separation=%.4f >= %.4f?\n", sup_norm_diff(uf, ug), 0.9 * fg);
        toc("oscillating branches");
    }

    // ---------- 2D ----------
    {
        PeriodicGrid g(2, 32);
        ContactModel m = make_pendulum_2d();
        m.momentum_box = 4.0;
        SolverConfig cfg;
        cfg.tol = 1e-6;
        SchemeCriticalValue ch = scheme_critical_value(m, g, cfg);
        std::printf("2d c_h=%.8f (expect ~2) iters=%ld\n", ch.c, ch.iterations);
        toc("2d c_h");

        CriticalValueOptions copts;
        copts.lo_tau = 1.0 / 16.0;
        copts.lo_time = 32.0;
        copts.p_samples = 41;
        SolverConfig ccfg = cfg;
        ccfg.tol = 1e-7;
        CriticalValueEstimate est = critical_value(m, g, ccfg, copts);
        std::printf("2d critical: c=%.5f c_lo=%.5f gap=%.2e\n", est.c, est.c_lo, est.gap);
        toc("2d critical_value");

        std::vector<double> lams;
        for (int k = 3; k <= 10; ++k) lams.push_back(std::pow(2.0, -k));
        SolverConfig swcfg = cfg;
        swcfg.tol = 1e-5;
        SweepReport rep = lambda_sweep(m, g, ch.c, lams, swcfg);
        std::printf("2d sweep gaps:");
        for (double gp : rep.sup_gaps) std::printf(" %.2e", gp);
        std::printf(" non_cauchy=%d\n", int(rep.non_cauchy));
        toc("2d sweep");

        // comparison order check on random pairs
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        PeriodicGrid g1(1, 32);
        ContactModel mp = make_pendulum();
        int okc = 0;
        for (int t = 0; t < 100; ++t) {
            GridFunction a(g1), b(g1);
            for (int i = 0; i < 32; ++i) {
                const double x = i / 32.0;
                a[i] = 0.3 * std::sin(2 * M_PI * x + unif(rng)) + 0.2 * unif(rng);
                b[i] = a[i] + 0.05 + 0.3 * std::abs(unif(rng));
            }
            SolverConfig ccfg2;
            ccfg2.tol = 1e-6;
            if (comparison_order_check(mp, a, b, 0.5, 1.0, 200, ccfg2, 1e-9)) ++okc;
        }
        std::printf("comparison order: %d/100\n", okc);
        toc("comparison 100 pairs");
    }

    // ---------- Lax-Oleinik stationarity (criterion 12) ----------
    {
        const int n = 256;
        PeriodicGrid g(1, n);
        ContactModel mk = make_pendulum();
        mk.momentum_box = 5.0;
        const double tau = 1.0 / 64.0;
        const int rad = int(4.0 * tau * n + 1e-9);
        LagrangianTable L = legendre_transform(mk, g, 4.0, 2 * rad + 1, 201);
        BarrierBundle bb = build_barrier_bundle(L, 1.0, tau, 32.0, 16.0, 32.0, 1e-4);
        GridFunction u0 = uni_const_limit(bb.h, bb.aubry);
        auto seq = lax_oleinik_evolve(u0, L, 1.0, tau, 100);
        double drift = 0;
        for (auto& uk : seq) drift = std::max(drift, sup_norm_diff(uk, u0));
        std::printf("LO stationarity over 100 steps: %.2e\n", drift);
        GridFunction cst(g, 0.0);
        auto seq2 = lax_oleinik_evolve(cst, L, 1.0, tau, 100);
        double worst_dec = 0;
        for (std::size_t k = 1; k < seq2.size(); ++k)
            for (int i = 0; i < n; ++i)
                worst_dec = std::min(worst_dec, seq2[k][i] - seq2[k - 1][i]);
        std::printf("LO constant nondecreasing: worst step %.2e  U100(0.5)=%.4f\n", worst_dec,
                    seq2.back()[n / 2]);
        toc("LO evolve");
    }
    return 0;
}
