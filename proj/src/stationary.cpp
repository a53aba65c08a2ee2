#include "wkam/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/parallel.hpp"

namespace wkam {

namespace {

std::vector<Vec2> coarse_x_samples(const PeriodicGrid& grid, int per_axis) {
    std::vector<Vec2> pts;
    const int n = std::min(per_axis, grid.n_per_axis());
    if (grid.dim() == 1) {
        for (int i = 0; i < n; ++i) pts.push_back({double(i) / n, 0.0});
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) pts.push_back({double(i) / n, double(j) / n});
    }
    return pts;
}

double min_u_derivative_sample(const ContactModel& model, const PeriodicGrid& grid,
                               double lambda, double u_range) {
    const auto xs = coarse_x_samples(grid, 16);
    const double box = model.momentum_box;
    double lo = std::numeric_limits<double>::infinity();
    const int np = grid.dim() == 1 ? 17 : 9;
    for (const Vec2& x : xs)
        for (int i = 0; i < np; ++i) {
            const double p1 = -box + 2.0 * box * i / (np - 1);
            const int np2 = grid.dim() == 2 ? np : 1;
            for (int j = 0; j < np2; ++j) {
                const Vec2 p{p1, grid.dim() == 2 ? -box + 2.0 * box * j / (np - 1) : 0.0};
                for (int k = 0; k <= 4; ++k) {
                    const double u = -u_range + 2.0 * u_range * k / 4.0;
                    lo = std::min(lo, model.u_derivative(x, p, u, lambda));
                }
            }
        }
    return lo;
}

double max_u_derivative_sample(const ContactModel& model, const PeriodicGrid& grid,
                               double lambda, double u_range) {
    const auto xs = coarse_x_samples(grid, 16);
    const double box = model.momentum_box;
    double hi = 0.0;
    const int np = grid.dim() == 1 ? 17 : 9;
    for (const Vec2& x : xs)
        for (int i = 0; i < np; ++i) {
            const double p1 = -box + 2.0 * box * i / (np - 1);
            const int np2 = grid.dim() == 2 ? np : 1;
            for (int j = 0; j < np2; ++j) {
                const Vec2 p{p1, grid.dim() == 2 ? -box + 2.0 * box * j / (np - 1) : 0.0};
                for (int k = 0; k <= 4; ++k) {
                    const double u = -u_range + 2.0 * u_range * k / 4.0;
                    hi = std::max(hi, model.u_derivative(x, p, u, lambda));
                }
            }
        }
    return hi;
}

// One-sided and central slopes per axis, one pass.
struct SlopeWork {
    std::vector<double> pm1, pp1, pm2, pp2;  // one-sided slopes per axis
    std::vector<double> pc1, pc2;            // central slopes per axis
    void resize(std::size_t n, int dim) {
        pm1.assign(n, 0.0);
        pp1.assign(n, 0.0);
        pc1.assign(n, 0.0);
        if (dim == 2) {
            pm2.assign(n, 0.0);
            pp2.assign(n, 0.0);
            pc2.assign(n, 0.0);
        }
    }
};

void assemble_slopes(const GridFunction& u, SlopeWork& w) {
    const PeriodicGrid& g = u.grid;
    const double h = g.spacing();
    const double invh = 1.0 / h;
    w.resize(g.node_count(), g.dim());
    const int nn = g.n_per_axis();
    if (g.dim() == 1) {
        for (int i = 0; i < nn; ++i) {
            const double um = u[(i + nn - 1) % nn];
            const double up = u[(i + 1) % nn];
            w.pm1[i] = (u[i] - um) * invh;
            w.pp1[i] = (up - u[i]) * invh;
            w.pc1[i] = 0.5 * (w.pm1[i] + w.pp1[i]);
        }
        return;
    }
    for (int i = 0; i < nn; ++i) {
        const int im = (i + nn - 1) % nn, ip = (i + 1) % nn;
        for (int j = 0; j < nn; ++j) {
            const int jm = (j + nn - 1) % nn, jp = (j + 1) % nn;
            const std::size_t id = std::size_t(i) * nn + j;
            const double u1m = u[std::size_t(im) * nn + j], u1p = u[std::size_t(ip) * nn + j];
            const double u2m = u[std::size_t(i) * nn + jm], u2p = u[std::size_t(i) * nn + jp];
            w.pm1[id] = (u[id] - u1m) * invh;
            w.pp1[id] = (u1p - u[id]) * invh;
            w.pc1[id] = 0.5 * (w.pm1[id] + w.pp1[id]);
            w.pm2[id] = (u[id] - u2m) * invh;
            w.pp2[id] = (u2p - u[id]) * invh;
            w.pc2[id] = 0.5 * (w.pm2[id] + w.pp2[id]);
        }
    }
}

// Shared residual engine for the marching solvers: Lax-Friedrichs central
// value with either a global constant dissipation or the per-node local bound.
struct ResidualEngine {
    const PeriodicGrid& grid;
    BoundBatchEval H;
    SpeedBatchEval speed;  // may be empty; then only global mode works
    bool local = false;
    double sigma_global = 0;
    double sigma_floor = 0;
    std::optional<double> clamp;

    SlopeWork w;
    std::vector<double> sig1, sig2;
    GridFunction Hval;

    ResidualEngine(const ContactModel& model, const PeriodicGrid& g, const SolverConfig& cfg,
                   double lambda)
        : grid(g), H(model.bind(g)), Hval(g) {
        if (cfg.dissipation == Dissipation::Local && model.native_speed_factory) {
            speed = model.native_speed_factory(g);
            if (speed) local = true;
        }
        const double measured = estimate_sigma(model, g, lambda);
        sigma_global = cfg.sigma > 0 ? std::max(cfg.sigma, measured) : measured;
        sigma_floor = cfg.sigma_floor_frac * sigma_global;
        clamp = cfg.clamp;
        const std::size_t n = g.node_count();
        sig1.assign(n, sigma_global);
        sig2.assign(n, grid.dim() == 2 ? sigma_global : 0.0);
    }

    // When set, the u-argument fed to H is this array instead of the iterate
    // (the slopes still come from the iterate); used to evaluate the frozen
    // operator G(x,Du) along an evolution.
    const double* u_override = nullptr;

    // Fills r with the residual of H^lambda(x,Du,u) = c and returns the max
    // per-node dissipation coefficient (for the CFL step).
    double compute(const GridFunction& u, double lambda, double c, GridFunction& r) {
        const std::size_t n = grid.node_count();
        assemble_slopes(u, w);
        const bool two = grid.dim() == 2;
        H(w.pc1.data(), two ? w.pc2.data() : nullptr,
          u_override ? u_override : u.values.data(), lambda, Hval.values.data(), n);
        double sig_max = 0;
        if (local) {
            speed(w.pm1.data(), w.pp1.data(), two ? w.pm2.data() : nullptr,
                  two ? w.pp2.data() : nullptr, u.values.data(), lambda, sig1.data(),
                  sig2.data(), n);
            // uncapped above: the bound must track whatever slopes the iterate
            // visits, or monotonicity fails on transients; the CFL step adapts
            for (std::size_t i = 0; i < n; ++i) {
                sig1[i] = std::max(sigma_floor, 1.1 * sig1[i]);
                if (two) sig2[i] = std::max(sigma_floor, 1.1 * sig2[i]);
                sig_max = std::max(sig_max, sig1[i] + (two ? sig2[i] : 0.0));
            }
        } else {
            sig_max = sigma_global * grid.dim();
        }
        const double* s1 = local ? sig1.data() : nullptr;
        const double* s2 = local ? sig2.data() : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            const double g1 = (local ? s1[i] : sigma_global) * (w.pp1[i] - w.pm1[i]);
            const double g2 = two ? (local ? s2[i] : sigma_global) * (w.pp2[i] - w.pm2[i]) : 0.0;
            const double core = clamp ? std::min(Hval[i] - c, *clamp) : Hval[i] - c;
            r[i] = core - 0.5 * (g1 + g2);
        }
        return sig_max;
    }
};

}  // namespace

double estimate_sigma(const ContactModel& model, const PeriodicGrid& grid, double lambda) {
    const auto xs = coarse_x_samples(grid, 16);
    const double box = model.momentum_box;
    const int np = grid.dim() == 1 ? 81 : 21;
    const double dp = 2.0 * box / (np - 1);
    const double step = 1e-5 * std::max(1.0, box);
    double m = 0.0;
    for (const Vec2& x : xs)
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < (grid.dim() == 2 ? np : 1); ++j) {
                const Vec2 p{-box + i * dp, grid.dim() == 2 ? -box + j * dp : 0.0};
                for (double uval : {0.0, 1.0, -1.0}) {
                    for (int axis = 0; axis < grid.dim(); ++axis) {
                        Vec2 pa = p, pb = p;
                        pa[axis] += step;
                        pb[axis] -= step;
                        const double d = (model.eval(x, pa, uval, lambda) -
                                          model.eval(x, pb, uval, lambda)) /
                                         (2.0 * step);
                        m = std::max(m, std::abs(d));
                    }
                }
            }
    return 1.1 * m;
}

GridFunction lf_residual(const ContactModel& model, const GridFunction& u, double lambda,
                         double c, const SolverConfig& cfg) {
    if (cfg.sigma <= 0) throw PreconditionError("lf_residual: sigma must be set in config");
    const PeriodicGrid& g = u.grid;
    const std::size_t n = g.node_count();
    SlopeWork w;
    assemble_slopes(u, w);
    GridFunction r(g);
    BoundBatchEval H = model.bind(g);
    const bool two = g.dim() == 2;
    H(w.pc1.data(), two ? w.pc2.data() : nullptr, u.values.data(), lambda,
      r.values.data(), n);
    const double half_sigma = 0.5 * cfg.sigma;
    for (std::size_t i = 0; i < n; ++i) {
        const double diss = (w.pp1[i] - w.pm1[i]) + (two ? w.pp2[i] - w.pm2[i] : 0.0);
        const double core = cfg.clamp ? std::min(r[i] - c, *cfg.clamp) : r[i] - c;
        r[i] = core - half_sigma * diss;
    }
    return r;
}

GridFunction godunov_residual(const ContactModel& model, const GridFunction& u,
                              double lambda, double c, int segment_samples) {
    const PeriodicGrid& g = u.grid;
    const std::size_t n = g.node_count();
    const int ns = std::max(3, segment_samples);
    GridFunction r(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Vec2 x = g.node_coords(i);
            const double ui = u[i];
            double pm[2] = {0, 0}, pp[2] = {0, 0};
            for (int axis = 0; axis < g.dim(); ++axis) {
                auto [a, b] = upwind_pair(u, i, axis);
                pm[axis] = a;
                pp[axis] = b;
            }
            if (g.dim() == 1) {
                const double a = std::min(pm[0], pp[0]), b = std::max(pm[0], pp[0]);
                const bool take_min = pm[0] <= pp[0];
                double best = take_min ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
                for (int k = 0; k < ns; ++k) {
                    const double q = a + (b - a) * k / (ns - 1);
                    const double v = model.eval(x, {q, 0.0}, ui, lambda);
                    best = take_min ? std::min(best, v) : std::max(best, v);
                }
                r[i] = best - c;
            } else {
                const double a1 = std::min(pm[0], pp[0]), b1 = std::max(pm[0], pp[0]);
                const double a2 = std::min(pm[1], pp[1]), b2 = std::max(pm[1], pp[1]);
                const bool min1 = pm[0] <= pp[0], min2 = pm[1] <= pp[1];
                double ext1 = min1 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
                for (int k1 = 0; k1 < ns; ++k1) {
                    const double q1 = a1 + (b1 - a1) * k1 / (ns - 1);
                    double ext2 = min2 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
                    for (int k2 = 0; k2 < ns; ++k2) {
                        const double q2 = a2 + (b2 - a2) * k2 / (ns - 1);
                        const double v = model.eval(x, {q1, q2}, ui, lambda);
                        ext2 = min2 ? std::min(ext2, v) : std::max(ext2, v);
                    }
                    ext1 = min1 ? std::min(ext1, ext2) : std::max(ext1, ext2);
                }
                r[i] = ext1 - c;
            }
        }
    });
    return r;
}

SolveResult solve_stationary(const ContactModel& model, const PeriodicGrid& grid,
                             double lambda, double c, const SolverConfig& cfg,
                             const GridFunction* u_init) {
    double u_range = 2.0 + std::abs(c);
    if (u_init) {
        double m = 0;
        for (double v : u_init->values) m = std::max(m, std::abs(v));
        u_range = std::max(u_range, 1.2 * m);
    }
    const double hu_min = min_u_derivative_sample(model, grid, lambda, u_range);
    if (!(hu_min > 0))
        throw PreconditionError("solve_stationary: model is not strictly increasing in u "
                                "at lambda=" + std::to_string(lambda));
    const double hu_max = max_u_derivative_sample(model, grid, lambda, u_range);

    const bool raised = cfg.sigma > 0 && cfg.sigma < estimate_sigma(model, grid, lambda);
    ResidualEngine eng(model, grid, cfg, lambda);

    const double h = grid.spacing();
    const std::size_t n = grid.node_count();

    GridFunction u = u_init ? *u_init : GridFunction(grid, 0.0);
    if (u.grid != grid) throw InputError("solve_stationary: u_init grid mismatch");

    GridFunction r(grid);
    std::vector<double> history;

    long iter = 0;
    double res = std::numeric_limits<double>::infinity();
    double sig_last = eng.sigma_global * grid.dim();
    for (; iter < cfg.max_iter; ++iter) {
        sig_last = eng.compute(u, lambda, c, r);
        const double dtau = cfg.cfl * h / (sig_last + h * hu_max);
        res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            res = std::max(res, std::abs(r[i]));
            u[i] -= dtau * r[i];
        }
        if (history.size() >= 64) history.erase(history.begin());
        history.push_back(res);
        if (res <= cfg.tol) break;
    }
    if (res > cfg.tol)
        throw SolveError("solve_stationary: max_iter=" + std::to_string(cfg.max_iter) +
                             " exceeded with residual " + std::to_string(res),
                         history);
    u.validate_finite("solve_stationary");
    const double dtau = cfg.cfl * h / (sig_last + h * hu_max);
    return SolveResult{std::move(u),      iter + 1, res, eng.local ? sig_last : eng.sigma_global,
                       dtau,     raised,  eng.local};
}

SchemeCriticalValue scheme_critical_value(const ContactModel& model,
                                          const PeriodicGrid& grid,
                                          const SolverConfig& cfg, double spread_tol,
                                          long max_iter) {
    // Normalized evolution of the frozen operator: iterate
    //   u <- u - dtau (R(u) - mean R(u))
    // with R the same discretization used by the solver, evaluated at u-slot
    // zero so only G(x,Du) enters. Once R(u) settles to a constant vector,
    // that constant is the additive eigenvalue of the discrete scheme.
    ResidualEngine eng(model, grid, cfg, 1.0);
    const std::size_t n = grid.node_count();
    const double h = grid.spacing();
    std::vector<double> zeros(n, 0.0);
    eng.u_override = zeros.data();
    GridFunction u(grid, 0.0), r(grid);
    SchemeCriticalValue out;
    for (long iter = 0; iter < max_iter; ++iter) {
        const double sig = eng.compute(u, 1.0, 0.0, r);
        const double dtau = cfg.cfl * h / sig;
        double lo = r[0], hi = r[0], mean = 0;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, r[i]);
            hi = std::max(hi, r[i]);
            mean += r[i];
        }
        mean /= double(n);
        out.c = mean;
        out.spread = hi - lo;
        out.iterations = iter + 1;
        if (out.spread <= spread_tol) break;
        for (std::size_t i = 0; i < n; ++i) u[i] -= dtau * (r[i] - mean);
    }
    return out;
}

RoleReport verify_viscosity_role(const ContactModel& model, const GridFunction& u,
                                 double lambda, double c, ViscosityRole role, double tol,
                                 ResidualScheme scheme, const SolverConfig& cfg) {
    GridFunction r(u.grid);
    if (scheme == ResidualScheme::Godunov) {
        // pointwise consistency instrument for sharp (kernel-built) functions
        r = godunov_residual(model, u, lambda, c);
    } else {
        // the marching scheme's own residual (honors cfg.dissipation), the
        // right instrument for solver-produced functions
        ResidualEngine eng(model, u.grid, cfg, lambda);
        eng.compute(u, lambda, c, r);
    }
    RoleReport rep;
    rep.max_residual = -std::numeric_limits<double>::infinity();
    rep.min_residual = std::numeric_limits<double>::infinity();
    std::size_t argmax = 0, argmin = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > rep.max_residual) {
            rep.max_residual = r[i];
            argmax = i;
        }
        if (r[i] < rep.min_residual) {
            rep.min_residual = r[i];
            argmin = i;
        }
    }
    const bool sub_ok = rep.max_residual <= tol;
    const bool super_ok = rep.min_residual >= -tol;
    switch (role) {
        case ViscosityRole::Sub:
            rep.passed = sub_ok;
            rep.worst_node = argmax;
            rep.worst_value = rep.max_residual;
            break;
        case ViscosityRole::Super:
            rep.passed = super_ok;
            rep.worst_node = argmin;
            rep.worst_value = rep.min_residual;
            break;
        case ViscosityRole::Solution:
            rep.passed = sub_ok && super_ok;
            if (rep.max_residual - tol >= -tol - rep.min_residual) {
                rep.worst_node = argmax;
                rep.worst_value = rep.max_residual;
            } else {
                rep.worst_node = argmin;
                rep.worst_value = rep.min_residual;
            }
            break;
    }
    return rep;
}

std::optional<std::size_t> verify_constant_subsolution(const ContactModel& model,
                                                       const PeriodicGrid& grid, double c,
                                                       double tol) {
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        const double v = model.frozen(grid.node_coords(i), {0.0, 0.0});
        if (v > worst) {
            worst = v;
            worst_i = i;
        }
    }
    if (worst > c + tol) return worst_i;
    return std::nullopt;
}

namespace {

ContactModel frozen_discounted(const ContactModel& src) {
    auto s = std::make_shared<ContactModel>(src);
    ContactModel m;
    m.kind = ModelKind::Discounted;
    m.dim = src.dim;
    m.momentum_box = src.momentum_box;
    m.budget = src.budget;
    m.native = [s](const Vec2& x, const Vec2& p, double u, double lam) {
        return lam * u + s->eval(x, p, 0.0, 1.0);
    };
    m.native_batch_factory = [s](const PeriodicGrid& g) -> BoundBatchEval {
        BoundBatchEval inner = s->bind(g);
        auto zeros = std::make_shared<std::vector<double>>(g.node_count(), 0.0);
        return [inner, zeros](const double* p1, const double* p2, const double* u,
                              double lam, double* out, std::size_t n) {
            inner(p1, p2, zeros->data(), 1.0, out, n);
            for (std::size_t i = 0; i < n; ++i) out[i] += lam * u[i];
        };
    };
    m.native_speed_factory = src.native_speed_factory;
    return m;
}

double mean_of(const GridFunction& u) {
    double s = 0;
    for (double v : u.values) s += v;
    return s / double(u.size());
}

}  // namespace

CriticalValueEstimate critical_value(const ContactModel& model, const PeriodicGrid& grid,
                                     const SolverConfig& cfg,
                                     const CriticalValueOptions& opts) {
    if (opts.lambda_schedule.size() < 2)
        throw InputError("critical_value: need at least two lambdas");
    for (std::size_t i = 1; i < opts.lambda_schedule.size(); ++i)
        if (!(opts.lambda_schedule[i] < opts.lambda_schedule[i - 1]))
            throw InputError("critical_value: schedule must be strictly decreasing");

    const ContactModel disc = frozen_discounted(model);
    CriticalValueEstimate est;
    GridFunction u(grid, 0.0);
    double c_prev = 0;
    bool have_prev = false;
    for (const double lam : opts.lambda_schedule) {
        if (have_prev) {
            // mean shift: lambda*u tracks -c, so rescale the mean before solving
            const double shift = -c_prev;
            for (auto& v : u.values) v += shift * (1.0 / lam - 1.0 / est.table.back().lambda);
        }
        SolveResult r = solve_stationary(disc, grid, lam, 0.0, cfg, &u);
        u = r.u;
        const double c_lam = -lam * mean_of(u);
        est.table.push_back({lam, c_lam, r.final_residual, r.iterations});
        c_prev = c_lam;
        have_prev = true;
    }
    const auto& t = est.table;
    const double l1 = t[t.size() - 2].lambda, c1 = t[t.size() - 2].c_lambda;
    const double l2 = t[t.size() - 1].lambda, c2 = t[t.size() - 1].c_lambda;
    est.c = c2 + l2 * (c2 - c1) / (l1 - l2);

    // cross-check: long-time Lax-Oleinik average slope at c = 0
    const double h = grid.spacing();
    double vbox = opts.velocity_box > 0 ? opts.velocity_box : model.momentum_box;
    const int rad = std::max(1, int(std::floor(vbox * opts.lo_tau / h + 1e-9)));
    vbox = rad * h / opts.lo_tau;
    const int vs = opts.v_samples > 0 ? opts.v_samples : 2 * rad + 1;
    const LagrangianTable L =
        legendre_transform(model, grid, vbox, vs, opts.p_samples);
    const ActionKernel KT = action_h_t(L, 0.0, opts.lo_tau, opts.lo_time);
    const ActionKernel K2T = minplus_compose(KT, KT);
    double acc = 0;
    for (std::size_t x = 0; x < KT.n(); ++x) {
        double uT = minplus::kBig, u2T = minplus::kBig;
        for (std::size_t y = 0; y < KT.n(); ++y) {
            uT = std::min(uT, KT.at(y, x));
            u2T = std::min(u2T, K2T.at(y, x));
        }
        acc += (uT - u2T) / opts.lo_time;
    }
    est.c_lo = acc / double(KT.n());
    est.gap = std::abs(est.c - est.c_lo);
    if (est.gap > 5.0 * opts.scheme_tol)
        throw ModelError("critical_value: estimator disagreement " + std::to_string(est.gap) +
                         " exceeds 5 x scheme tolerance");
    return est;
}

SweepReport lambda_sweep(const ContactModel& model, const PeriodicGrid& grid, double c,
                         const std::vector<double>& lambdas, const SolverConfig& cfg) {
    if (lambdas.empty()) throw InputError("lambda_sweep: empty schedule");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] < lambdas[i - 1]))
            throw InputError("lambda_sweep: schedule must be strictly decreasing");

    SweepReport rep;
    rep.lambdas = lambdas;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lam = lambdas[k];
        model.prepare(lam);
        SolverConfig run = cfg;
        run.tol = cfg.tol * lam;  // keeps the solution error lambda-uniform
        GridFunction init(grid, 0.0);
        // Oscillating families alternate targets between consecutive lambdas,
        // so extrapolating across them hurts; plain warm starts only.
        const bool extrapolate = model.kind != ModelKind::Oscillating;
        if (k == 1 || (k >= 2 && !extrapolate)) {
            init = rep.solutions[k - 1];
        } else if (k >= 2) {
            // linear extrapolation in lambda of the two previous solutions
            const double a =
                (lam - lambdas[k - 1]) / (lambdas[k - 2] - lambdas[k - 1]);
            init = rep.solutions[k - 1];
            for (std::size_t i = 0; i < init.size(); ++i)
                init[i] += a * (rep.solutions[k - 2][i] - rep.solutions[k - 1][i]);
        }
        const GridFunction* ip = k == 0 ? nullptr : &init;
        SolveResult r = solve_stationary(model, grid, lam, c, run, ip);
        rep.solutions.push_back(std::move(r.u));
        rep.residuals.push_back(r.final_residual);
        rep.iterations.push_back(r.iterations);
        if (k > 0)
            rep.sup_gaps.push_back(sup_norm_diff(rep.solutions[k], rep.solutions[k - 1]));
    }
    rep.limit_index = int(rep.solutions.size()) - 1;
    for (std::size_t i = 1; i < rep.sup_gaps.size(); ++i)
        if (rep.sup_gaps[i] > 2.0 * rep.sup_gaps[i - 1]) rep.non_cauchy = true;

    // least-squares slope of log(gap) against log(lambda)
    if (rep.sup_gaps.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (std::size_t i = 0; i < rep.sup_gaps.size(); ++i) {
            if (rep.sup_gaps[i] <= 0) continue;
            const double X = std::log(lambdas[i + 1]);
            const double Y = std::log(rep.sup_gaps[i]);
            sx += X;
            sy += Y;
            sxx += X * X;
            sxy += X * Y;
            ++m;
        }
        if (m >= 2) rep.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return rep;
}

bool comparison_order_check(const ContactModel& model, const GridFunction& f,
                            const GridFunction& g, double lambda, double c, int steps,
                            const SolverConfig& cfg, double tol) {
    if (f.grid != g.grid) throw InputError("comparison_order_check: grid mismatch");
    const PeriodicGrid& grid = f.grid;
    const std::size_t n = grid.node_count();

    // The order-preservation property is for the constant-sigma monotone
    // scheme; sigma must dominate |H_p| over the slopes both iterates visit.
    ContactModel wide = model;
    wide.momentum_box = std::max(model.momentum_box,
                                 1.3 * std::max(lipschitz_estimate(f), lipschitz_estimate(g)));
    SolverConfig run = cfg;
    run.dissipation = Dissipation::Global;
    run.sigma = std::max(run.sigma, estimate_sigma(wide, grid, lambda));
    const double hu_max = max_u_derivative_sample(model, grid, lambda, 4.0);
    const double h = grid.spacing();
    const double dtau = run.cfl * h / (run.sigma * grid.dim() + h * hu_max);

    GridFunction a = f, b = g;
    ResidualEngine eng(model, grid, run, lambda);
    GridFunction r(grid);
    auto step = [&](GridFunction& u) {
        eng.compute(u, lambda, c, r);
        for (std::size_t i = 0; i < n; ++i) u[i] -= dtau * r[i];
    };
    for (int k = 0; k < steps; ++k) {
        step(a);
        step(b);
        for (std::size_t i = 0; i < n; ++i)
            if (a[i] > b[i] + 1e-12) return false;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] > b[i] + tol) return false;
    return true;
}

SandwichReport sandwich_check(const ContactModel& model, const PeriodicGrid& grid,
                              double lambda, double R0, double c, const SolverConfig& cfg,
                              double tol) {
    MonotonicityProfile prof = monotonicity_profile(model, R0, lambda);
    const double width = (prof.kappa - prof.delta) * R0 / prof.kappa;

    SolverConfig run = cfg;
    run.tol = cfg.tol * lambda;
    SolveResult rc = solve_stationary(model, grid, lambda, c, run);

    const ContactModel disc = frozen_discounted(model);
    SolverConfig run2 = cfg;
    run2.tol = cfg.tol * prof.kappa;
    SolveResult rd = solve_stationary(disc, grid, prof.kappa, c, run2, &rc.u);

    if (tol <= 0) tol = 10.0 * cfg.tol + 1e-9;
    SandwichReport rep{prof, width, true, 0.0, 0, std::move(rc.u), std::move(rd.u)};
    for (std::size_t i = 0; i < rep.u_contact.size(); ++i) {
        const double lo = rep.u_contact[i] - width - tol;
        const double hi = rep.u_contact[i] + width + tol;
        const double v = rep.w_discounted[i];
        const double viol = std::max(lo - v, v - hi);
        if (viol > rep.worst_violation) {
            rep.worst_violation = viol;
            rep.worst_node = i;
        }
    }
    rep.ordered = rep.worst_violation <= 0;
    return rep;
}

GridFunction mollify_subsolution(const GridFunction& u, const ContactModel& model,
                                 double c, double eps, double scheme_tol) {
    if (eps <= 0)
        throw InputError("mollify_subsolution: eps must be positive (eps=0 is infeasible)");
    const RoleReport pre =
        verify_viscosity_role(model, u, 0.0, c, ViscosityRole::Sub, scheme_tol);
    if (!pre.passed)
        throw PreconditionError("mollify_subsolution: input fails the subsolution check "
                                "(worst residual " + std::to_string(pre.worst_value) + ")");
    const double h = u.grid.spacing();
    const double s_min = 0.25 * h * h;
    double s = 0.02;
    for (int k = 0; k < 60; ++k, s *= 0.5) {
        GridFunction w = fourier_smooth(u, s);
        if (sup_norm_diff(u, w) > eps) continue;
        const RoleReport rr = verify_viscosity_role(model, w, 0.0, c + eps,
                                                    ViscosityRole::Sub, scheme_tol);
        if (!rr.passed) continue;
        if (s < s_min)
            throw ModelError("mollify_subsolution: admissible width is below grid "
                             "resolution; refine the grid");
        return w;
    }
    throw ModelError("mollify_subsolution: no admissible smoothing width found; "
                     "refine the grid");
}

}  // namespace wkam
