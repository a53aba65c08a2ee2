#include "wkam/model.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include "wkam/parallel.hpp"

namespace wkam {

// ---- Oscillating payload ----------------------------------------------------

struct OscillatingData {
    ContactModel base;  // supplies the frozen G
    GridFunction f;
    GridFunction g;
    OscillatingParams params;
    mutable std::map<double, GridFunction> cache;
    mutable std::mutex mu;

    OscillatingData(ContactModel b, GridFunction ff, GridFunction gg, OscillatingParams p)
        : base(std::move(b)), f(std::move(ff)), g(std::move(gg)), params(p) {}

    // Branch index m from lambda in (1/(m+1), 1/m]; even m -> f, odd m -> g.
    // 1/lambda is snapped to the nearest integer within 1e-9 so that
    // lambda = 1/m lands in its own interval despite rounding.
    static bool takes_f_branch(double lambda) {
        const double inv = 1.0 / lambda;
        long m = static_cast<long>(std::floor(inv + 1e-9));
        if (m < 1) m = 1;
        return m % 2 == 0;
    }

    const GridFunction& w_for(double lambda) const {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(lambda);
        if (it != cache.end()) return it->second;
        const GridFunction& target = takes_f_branch(lambda) ? f : g;
        const double h = target.grid.spacing();
        const double s_min = params.s_min > 0 ? params.s_min : h * h;
        double s = params.s_initial;
        for (int k = 0; k <= params.max_halvings; ++k, s *= 0.5) {
            GridFunction w = fourier_smooth(target, s);
            if (sup_norm_diff(target, w) <= lambda) {
                if (s < s_min)
                    throw ModelError(
                        "build_oscillating: smoothing width below grid resolution; "
                        "use a finer grid for lambda=" + std::to_string(lambda));
                auto [pos, ok] = cache.emplace(lambda, std::move(w));
                (void)ok;
                return pos->second;
            }
        }
        throw ModelError("build_oscillating: smoothing did not reach tolerance");
    }
};

namespace {

double interp_periodic(const GridFunction& u, const Vec2& x) {
    const PeriodicGrid& g = u.grid;
    const double h = g.spacing();
    auto locate = [&](double c) {
        double t = c / h;
        double f = std::floor(t);
        int i = static_cast<int>(f);
        return std::pair<int, double>{i, t - f};
    };
    if (g.dim() == 1) {
        auto [i, a] = locate(x[0]);
        return (1 - a) * u[g.index_of(i)] + a * u[g.index_of(i + 1)];
    }
    auto [i, a] = locate(x[0]);
    auto [j, b] = locate(x[1]);
    const double v00 = u[g.index_of(i, j)], v01 = u[g.index_of(i, j + 1)];
    const double v10 = u[g.index_of(i + 1, j)], v11 = u[g.index_of(i + 1, j + 1)];
    return (1 - a) * ((1 - b) * v00 + b * v01) + a * ((1 - b) * v10 + b * v11);
}

}  // namespace

// ---- ContactModel -----------------------------------------------------------

double ContactModel::eval(const Vec2& x, const Vec2& p, double u, double lambda_arg) const {
    if (native) return native(x, p, u, lambda_arg);
    try {
        ExprVars v;
        v.x1 = x[0];
        v.x2 = x[1];
        v.p1 = p[0];
        v.p2 = p[1];
        switch (kind) {
            case ModelKind::Discounted:
                return lambda_arg * u + G_expr.eval(v);
            case ModelKind::GeneralContact: {
                ExprVars vc = v;
                vc.u = u;
                return G_expr.eval(v) + lambda_arg * coupling_expr.eval(vc);
            }
            case ModelKind::AppI: {
                ExprVars vf = v;
                vf.u = lambda_arg * u;
                return f_expr.eval(vf) + H_base_expr.eval(v);
            }
            case ModelKind::AppII: {
                v.u = lambda_arg * u;
                return H_expr.eval(v);
            }
            case ModelKind::Oscillating: {
                const GridFunction& w = oscillating->w_for(lambda_arg);
                return lambda_arg * u + oscillating->base.frozen(x, p) -
                       lambda_arg * interp_periodic(w, x);
            }
        }
    } catch (const ModelError& e) {
        throw ModelError(std::string("model evaluation failed: ") + e.what());
    }
    throw ModelError("model evaluation failed: unknown kind");
}

double ContactModel::u_derivative(const Vec2& x, const Vec2& p, double u,
                                  double lambda_arg) const {
    if (kind == ModelKind::AppI && !f_u_expr.empty()) {
        ExprVars v;
        v.x1 = x[0];
        v.x2 = x[1];
        v.u = lambda_arg * u;
        return lambda_arg * f_u_expr.eval(v);
    }
    if (kind == ModelKind::AppII && !H_u_expr.empty()) {
        ExprVars v;
        v.x1 = x[0];
        v.x2 = x[1];
        v.p1 = p[0];
        v.p2 = p[1];
        v.u = lambda_arg * u;
        return lambda_arg * H_u_expr.eval(v);
    }
    if (kind == ModelKind::Discounted && !native) return lambda_arg;
    const double step = 1e-6 * std::max(1.0, std::abs(u));
    return (eval(x, p, u + step, lambda_arg) - eval(x, p, u - step, lambda_arg)) /
           (2.0 * step);
}

BoundBatchEval ContactModel::bind(const PeriodicGrid& grid) const {
    if (native_batch_factory) {
        BoundBatchEval b = native_batch_factory(grid);
        if (b) return b;
    }
    auto coords = std::make_shared<std::vector<Vec2>>(grid.node_count());
    for (std::size_t i = 0; i < grid.node_count(); ++i) (*coords)[i] = grid.node_coords(i);
    auto self = std::make_shared<ContactModel>(*this);
    return [self, coords](const double* p1, const double* p2, const double* u,
                          double lam, double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p{p1[i], p2 ? p2[i] : 0.0};
            out[i] = self->eval((*coords)[i], p, u[i], lam);
        }
    };
}

void ContactModel::prepare(double lambda_arg) const {
    if (kind == ModelKind::Oscillating && oscillating) oscillating->w_for(lambda_arg);
}

const ContactModel& ContactModel::frozen_base() const {
    if (kind == ModelKind::Oscillating && oscillating) return oscillating->base;
    return *this;
}

const GridFunction& ContactModel::oscillating_target_f() const {
    if (kind != ModelKind::Oscillating || !oscillating)
        throw InputError("oscillating_target_f: not an oscillating model");
    return oscillating->f;
}

const GridFunction& ContactModel::oscillating_target_g() const {
    if (kind != ModelKind::Oscillating || !oscillating)
        throw InputError("oscillating_target_g: not an oscillating model");
    return oscillating->g;
}

// ---- named constructors ------------------------------------------------------

ContactModel make_discounted(ScalarExpr G, int dim) {
    ContactModel m;
    m.kind = ModelKind::Discounted;
    m.dim = dim;
    m.G_expr = std::move(G);
    return m;
}

namespace {

// |dH/dp_k| = |p_k| per axis: speed bound for kinetic-energy Hamiltonians,
// with an additive slack for bounded p-coupling terms.
std::function<SpeedBatchEval(const PeriodicGrid&)> kinetic_speed_factory(double slack) {
    return [slack](const PeriodicGrid& g) -> SpeedBatchEval {
        const int dim = g.dim();
        return [slack, dim](const double* pm1, const double* pp1, const double* pm2,
                            const double* pp2, const double* /*u*/, double /*lambda*/,
                            double* out1, double* out2, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i)
                out1[i] = std::max(std::abs(pm1[i]), std::abs(pp1[i])) + slack;
            if (dim == 2)
                for (std::size_t i = 0; i < n; ++i)
                    out2[i] = std::max(std::abs(pm2[i]), std::abs(pp2[i])) + slack;
        };
    };
}

}  // namespace

ContactModel make_pendulum() {
    ContactModel m = make_discounted(ScalarExpr::parse("0.5*p1^2 + cos(2*pi*x1)"), 1);
    m.native = [](const Vec2& x, const Vec2& p, double u, double lam) {
        return lam * u + 0.5 * p[0] * p[0] + std::cos(2.0 * M_PI * x[0]);
    };
    m.native_batch_factory = [](const PeriodicGrid& g) -> BoundBatchEval {
        auto V = std::make_shared<std::vector<double>>(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i)
            (*V)[i] = std::cos(2.0 * M_PI * g.node_coords(i)[0]);
        return [V](const double* p1, const double*, const double* u, double lam,
                   double* out, std::size_t n) {
            const double* Vc = V->data();
            for (std::size_t i = 0; i < n; ++i)
                out[i] = lam * u[i] + 0.5 * p1[i] * p1[i] + Vc[i];
        };
    };
    m.native_speed_factory = kinetic_speed_factory(0.0);
    return m;
}

ContactModel make_double_well() {
    ContactModel m = make_discounted(ScalarExpr::parse("0.5*p1^2 + cos(4*pi*x1)"), 1);
    m.native = [](const Vec2& x, const Vec2& p, double u, double lam) {
        return lam * u + 0.5 * p[0] * p[0] + std::cos(4.0 * M_PI * x[0]);
    };
    m.native_batch_factory = [](const PeriodicGrid& g) -> BoundBatchEval {
        auto V = std::make_shared<std::vector<double>>(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i)
            (*V)[i] = std::cos(4.0 * M_PI * g.node_coords(i)[0]);
        return [V](const double* p1, const double*, const double* u, double lam,
                   double* out, std::size_t n) {
            const double* Vc = V->data();
            for (std::size_t i = 0; i < n; ++i)
                out[i] = lam * u[i] + 0.5 * p1[i] * p1[i] + Vc[i];
        };
    };
    m.native_speed_factory = kinetic_speed_factory(0.0);
    return m;
}

ContactModel make_pendulum_2d() {
    ContactModel m = make_discounted(
        ScalarExpr::parse("0.5*(p1^2 + p2^2) + cos(2*pi*x1) + cos(2*pi*x2)"), 2);
    m.native = [](const Vec2& x, const Vec2& p, double u, double lam) {
        return lam * u + 0.5 * (p[0] * p[0] + p[1] * p[1]) +
               std::cos(2.0 * M_PI * x[0]) + std::cos(2.0 * M_PI * x[1]);
    };
    m.native_batch_factory = [](const PeriodicGrid& g) -> BoundBatchEval {
        auto V = std::make_shared<std::vector<double>>(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            const Vec2 x = g.node_coords(i);
            (*V)[i] = std::cos(2.0 * M_PI * x[0]) + std::cos(2.0 * M_PI * x[1]);
        }
        return [V](const double* p1, const double* p2, const double* u, double lam,
                   double* out, std::size_t n) {
            const double* Vc = V->data();
            for (std::size_t i = 0; i < n; ++i)
                out[i] = lam * u[i] + 0.5 * (p1[i] * p1[i] + p2[i] * p2[i]) + Vc[i];
        };
    };
    m.native_speed_factory = kinetic_speed_factory(0.0);
    return m;
}

ContactModel make_app1_cubic() {
    ContactModel m;
    m.kind = ModelKind::AppI;
    m.dim = 1;
    m.f_expr = ScalarExpr::parse("cos(2*pi*x1) + u + u^3/3");
    m.f_u_expr = ScalarExpr::parse("1 + u^2");
    m.H_base_expr = ScalarExpr::parse("0.5*p1^2");
    m.native = [](const Vec2& x, const Vec2& p, double u, double lam) {
        const double lu = lam * u;
        return std::cos(2.0 * M_PI * x[0]) + lu + lu * lu * lu / 3.0 + 0.5 * p[0] * p[0];
    };
    m.native_batch_factory = [](const PeriodicGrid& g) -> BoundBatchEval {
        auto V = std::make_shared<std::vector<double>>(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i)
            (*V)[i] = std::cos(2.0 * M_PI * g.node_coords(i)[0]);
        return [V](const double* p1, const double*, const double* u, double lam,
                   double* out, std::size_t n) {
            const double* Vc = V->data();
            for (std::size_t i = 0; i < n; ++i) {
                const double lu = lam * u[i];
                out[i] = Vc[i] + lu + lu * lu * lu / 3.0 + 0.5 * p1[i] * p1[i];
            }
        };
    };
    m.native_speed_factory = kinetic_speed_factory(0.0);
    return m;
}

ContactModel make_app2_paper() {
    ContactModel m;
    m.kind = ModelKind::AppII;
    m.dim = 1;
    m.H_expr = ScalarExpr::parse("u + 0.5*cos(u)^2*sin(p1) + 0.5*p1^2 + cos(2*pi*x1)");
    m.H_u_expr = ScalarExpr::parse("1 - 0.5*sin(2*u)*sin(p1)");
    m.native = [](const Vec2& x, const Vec2& p, double u, double lam) {
        const double lu = lam * u;
        const double cu = std::cos(lu);
        return lu + 0.5 * cu * cu * std::sin(p[0]) + 0.5 * p[0] * p[0] +
               std::cos(2.0 * M_PI * x[0]);
    };
    m.native_batch_factory = [](const PeriodicGrid& g) -> BoundBatchEval {
        auto V = std::make_shared<std::vector<double>>(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i)
            (*V)[i] = std::cos(2.0 * M_PI * g.node_coords(i)[0]);
        return [V](const double* p1, const double*, const double* u, double lam,
                   double* out, std::size_t n) {
            const double* Vc = V->data();
            for (std::size_t i = 0; i < n; ++i) {
                const double lu = lam * u[i];
                const double cu = std::cos(lu);
                out[i] = lu + 0.5 * cu * cu * std::sin(p1[i]) + 0.5 * p1[i] * p1[i] + Vc[i];
            }
        };
    };
    m.native_speed_factory = kinetic_speed_factory(0.5);
    return m;
}

// ---- structural probes -------------------------------------------------------

namespace {

std::vector<Vec2> sample_points(int dim, int per_axis) {
    std::vector<Vec2> pts;
    if (dim == 1) {
        pts.reserve(per_axis);
        for (int i = 0; i < per_axis; ++i) pts.push_back({double(i) / per_axis, 0.0});
    } else {
        pts.reserve(std::size_t(per_axis) * per_axis);
        for (int i = 0; i < per_axis; ++i)
            for (int j = 0; j < per_axis; ++j)
                pts.push_back({double(i) / per_axis, double(j) / per_axis});
    }
    return pts;
}

std::vector<Vec2> momentum_grid(int dim, double box, int per_axis) {
    std::vector<Vec2> pts;
    const double dp = per_axis > 1 ? 2.0 * box / (per_axis - 1) : 0.0;
    if (dim == 1) {
        for (int i = 0; i < per_axis; ++i) pts.push_back({-box + i * dp, 0.0});
    } else {
        for (int i = 0; i < per_axis; ++i)
            for (int j = 0; j < per_axis; ++j)
                pts.push_back({-box + i * dp, -box + j * dp});
    }
    return pts;
}

double norm2(const Vec2& p, int dim) {
    return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

}  // namespace

StructureDiagnostics probe_structure(const ContactModel& model, int sample_budget) {
    const int nx = sample_budget > 0 ? sample_budget : model.budget.x_samples;
    const int xs = model.dim == 1 ? nx : std::min(nx, 16);
    const auto xpts = sample_points(model.dim, xs);
    const double R = model.momentum_box;

    StructureDiagnostics d{};
    d.coercivity_growth = std::numeric_limits<double>::infinity();

    std::vector<Vec2> dirs;
    if (model.dim == 1) {
        dirs = {{1, 0}, {-1, 0}};
    } else {
        const double s = std::sqrt(0.5);
        dirs = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {s, s}, {s, -s}, {-s, s}, {-s, -s}};
    }
    for (const Vec2& x : xpts)
        for (const Vec2& dir : dirs) {
            const Vec2 pR{R * dir[0], R * dir[1]};
            const Vec2 pH{0.5 * R * dir[0], 0.5 * R * dir[1]};
            d.coercivity_growth =
                std::min(d.coercivity_growth, model.frozen(x, pR) - model.frozen(x, pH));
        }
    d.coercive = d.coercivity_growth > 0;

    // Midpoint convexity of p -> G(x,p) over deterministic pseudo-random pairs.
    std::mt19937_64 rng(202406);
    std::uniform_real_distribution<double> unif(-R, R);
    d.convexity_violation = 0;
    const int pairs = 512;
    for (const Vec2& x : xpts)
        for (int k = 0; k < pairs; ++k) {
            Vec2 p{unif(rng), model.dim == 2 ? unif(rng) : 0.0};
            Vec2 q{unif(rng), model.dim == 2 ? unif(rng) : 0.0};
            const Vec2 mid{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
            const double viol =
                model.frozen(x, mid) - 0.5 * (model.frozen(x, p) + model.frozen(x, q));
            d.convexity_violation = std::max(d.convexity_violation, viol);
        }

    // Strict u-monotonicity, probed on the lambda = 1 family member.
    d.min_u_derivative = std::numeric_limits<double>::infinity();
    const auto pgrid = momentum_grid(model.dim, R, std::min(model.budget.p_samples, 21));
    const int nu = std::max(3, model.budget.u_samples);
    for (const Vec2& x : xpts)
        for (const Vec2& p : pgrid)
            for (int k = 0; k < nu; ++k) {
                const double u = -2.0 + 4.0 * k / (nu - 1);
                d.min_u_derivative =
                    std::min(d.min_u_derivative, model.u_derivative(x, p, u, 1.0));
            }
    return d;
}

MonotonicityProfile monotonicity_profile(const ContactModel& model, double R,
                                         double lambda, int sample_budget) {
    if (R <= 0 || lambda <= 0)
        throw InputError("monotonicity_profile: R and lambda must be positive");
    const int nx = sample_budget > 0 ? sample_budget : model.budget.x_samples;
    const auto xpts = sample_points(model.dim, model.dim == 1 ? nx : std::min(nx, 12));
    const int pp = std::min(model.budget.p_samples, model.dim == 1 ? 201 : 31);
    const auto pgrid = momentum_grid(model.dim, R, pp);
    const int nu = std::max(4, model.budget.u_samples);

    MonotonicityProfile prof;
    prof.R = R;
    prof.lambda = lambda;
    prof.delta = std::numeric_limits<double>::infinity();
    prof.kappa = 0;
    for (const Vec2& x : xpts)
        for (const Vec2& p : pgrid) {
            if (norm2(p, model.dim) > R + 1e-12) continue;
            const double h0 = model.eval(x, p, 0.0, lambda);
            for (int k = 0; k < nu; ++k) {
                const double u = -R + 2.0 * R * k / (nu - 1);
                if (std::abs(u) < 1e-12) continue;
                const double q = std::abs(model.eval(x, p, u, lambda) - h0) / std::abs(u);
                prof.delta = std::min(prof.delta, q);
                prof.kappa = std::max(prof.kappa, q);
            }
        }
    if (prof.kappa < 1e-14)
        throw ModelError("monotonicity_profile: u-independent model (kappa = 0)");
    prof.ratio = prof.delta / prof.kappa;
    return prof;
}

KappaBound lipschitz_bound_kappa(const ContactModel& model, double c) {
    const auto xpts = sample_points(model.dim, model.budget.x_samples);
    const auto pgrid =
        momentum_grid(model.dim, model.momentum_box,
                      std::min(model.budget.p_samples, model.dim == 1 ? 801 : 101));
    KappaBound b;
    bool found = false;
    for (const Vec2& x : xpts)
        for (const Vec2& p : pgrid)
            if (model.frozen(x, p) <= c) {
                found = true;
                b.kappa = std::max(b.kappa, norm2(p, model.dim));
            }
    b.empty_sublevel = !found;
    return b;
}

ContactModel breve_transform(const ContactModel& model, double c) {
    const auto xpts = sample_points(model.dim, std::min(model.budget.x_samples, 32));
    const auto pgrid = momentum_grid(model.dim, model.momentum_box,
                                     std::min(model.budget.p_samples, 41));
    double den_min = std::numeric_limits<double>::infinity();
    double den_spread = 0;
    for (const Vec2& x : xpts)
        for (const Vec2& p : pgrid) {
            const double den = model.u_derivative(x, p, 0.0, 1.0);
            den_min = std::min(den_min, den);
            den_spread = std::max(den_spread, std::abs(den - 1.0));
        }
    if (!(den_min > 0))
        throw ModelError("breve_transform: nonpositive denominator sample " +
                         std::to_string(den_min));

    auto src = std::make_shared<ContactModel>(model);
    ContactModel out;
    out.kind = ModelKind::Discounted;
    out.dim = model.dim;
    out.momentum_box = model.momentum_box;
    out.budget = model.budget;
    if (den_spread <= 1e-10) {
        // d/du H at u=0 is identically 1 on the sample set: breve G = G - c.
        out.native = [src, c](const Vec2& x, const Vec2& p, double u, double lam) {
            return lam * u + src->eval(x, p, 0.0, 1.0) - c;
        };
        if (src->native_batch_factory) {
            out.native_batch_factory = [src, c](const PeriodicGrid& g) -> BoundBatchEval {
                BoundBatchEval inner = src->bind(g);
                auto zeros = std::make_shared<std::vector<double>>(g.node_count(), 0.0);
                return [inner, zeros, c](const double* p1, const double* p2,
                                         const double* u, double lam, double* out_v,
                                         std::size_t n) {
                    inner(p1, p2, zeros->data(), 1.0, out_v, n);
                    for (std::size_t i = 0; i < n; ++i) out_v[i] += lam * u[i] - c;
                };
            };
        }
        out.native_speed_factory = src->native_speed_factory;
    } else {
        out.native = [src, c](const Vec2& x, const Vec2& p, double u, double lam) {
            const double den = src->u_derivative(x, p, 0.0, 1.0);
            return lam * u + (src->eval(x, p, 0.0, 1.0) - c) / den;
        };
    }
    return out;
}

// ---- Legendre transform ------------------------------------------------------

LagrangianTable::LagrangianTable(const PeriodicGrid& grid, double velocity_box,
                                 int v_samples_per_axis)
    : grid_(grid), vbox_(velocity_box), v_per_axis_(v_samples_per_axis) {
    if (velocity_box <= 0) throw InputError("LagrangianTable: velocity box must be positive");
    if (v_samples_per_axis < 2) throw InputError("LagrangianTable: need >= 2 velocity samples");
    dv_ = 2.0 * vbox_ / (v_per_axis_ - 1);
    if (grid_.dim() == 1) {
        for (int i = 0; i < v_per_axis_; ++i) velocities_.push_back({-vbox_ + i * dv_, 0.0});
    } else {
        for (int i = 0; i < v_per_axis_; ++i)
            for (int j = 0; j < v_per_axis_; ++j)
                velocities_.push_back({-vbox_ + i * dv_, -vbox_ + j * dv_});
    }
    values_.assign(grid_.node_count() * velocities_.size(), 0.0);
    flags_.assign(grid_.node_count() * velocities_.size(), 0);
}

bool LagrangianTable::any_boundary_flagged() const {
    for (auto f : flags_)
        if (f) return true;
    return false;
}

double LagrangianTable::value_at(std::size_t node, const Vec2& v) const {
    auto locate = [this](double c) {
        const double t = (c + vbox_) / dv_;
        int i = static_cast<int>(std::floor(t));
        i = std::max(0, std::min(v_per_axis_ - 2, i));
        return std::pair<int, double>{i, t - i};
    };
    for (int k = 0; k < grid_.dim(); ++k)
        if (std::abs(v[k]) > vbox_ + 1e-9)
            throw InputError("LagrangianTable::value_at: velocity outside the box");
    if (grid_.dim() == 1) {
        auto [i, a] = locate(v[0]);
        return (1 - a) * value(node, i) + a * value(node, i + 1);
    }
    auto [i, a] = locate(v[0]);
    auto [j, b] = locate(v[1]);
    auto at = [&](int ii, int jj) {
        return value(node, std::size_t(ii) * v_per_axis_ + jj);
    };
    return (1 - a) * ((1 - b) * at(i, j) + b * at(i, j + 1)) +
           a * ((1 - b) * at(i + 1, j) + b * at(i + 1, j + 1));
}

std::size_t LagrangianTable::v_index_of(const Vec2& v, double* distance) const {
    auto nearest = [this](double c) {
        int i = static_cast<int>(std::lround((c + vbox_) / dv_));
        return std::max(0, std::min(v_per_axis_ - 1, i));
    };
    std::size_t idx;
    if (grid_.dim() == 1) {
        idx = static_cast<std::size_t>(nearest(v[0]));
    } else {
        idx = std::size_t(nearest(v[0])) * v_per_axis_ + nearest(v[1]);
    }
    if (distance) {
        const Vec2& s = velocities_[idx];
        *distance = grid_.dim() == 1 ? std::abs(v[0] - s[0])
                                     : std::hypot(v[0] - s[0], v[1] - s[1]);
    }
    return idx;
}

LagrangianTable legendre_transform(const ContactModel& model, const PeriodicGrid& grid,
                                   double velocity_box, int v_samples_per_axis,
                                   int p_samples_per_axis) {
    if (model.momentum_box <= 0 || velocity_box <= 0)
        throw InputError("legendre_transform: boxes must be positive");
    LagrangianTable table(grid, velocity_box, v_samples_per_axis);
    const auto pgrid = momentum_grid(grid.dim(), model.momentum_box, p_samples_per_axis);
    const std::size_t nv = table.velocity_count();
    const auto& vels = table.velocities();

    parallel_for(grid.node_count(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> Gv(pgrid.size());
        for (std::size_t node = lo; node < hi; ++node) {
            const Vec2 x = grid.node_coords(node);
            for (std::size_t k = 0; k < pgrid.size(); ++k) {
                Gv[k] = model.frozen(x, pgrid[k]);
                if (!std::isfinite(Gv[k]))
                    throw ModelError("legendre_transform: non-finite G at sample");
            }
            for (std::size_t j = 0; j < nv; ++j) {
                const Vec2& v = vels[j];
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_k = 0;
                for (std::size_t k = 0; k < pgrid.size(); ++k) {
                    const double cand = pgrid[k][0] * v[0] + pgrid[k][1] * v[1] - Gv[k];
                    if (cand > best) {
                        best = cand;
                        best_k = k;
                    }
                }
                table.value(node, j) = best;
                // boundary maximizer: the sampled sup may be truncated
                bool on_boundary = false;
                const int pp = p_samples_per_axis;
                if (grid.dim() == 1) {
                    on_boundary = (best_k == 0 || best_k + 1 == pgrid.size());
                } else {
                    const std::size_t i1 = best_k / pp, i2 = best_k % pp;
                    on_boundary = (i1 == 0 || i1 + 1 == std::size_t(pp) || i2 == 0 ||
                                   i2 + 1 == std::size_t(pp));
                }
                table.set_boundary_flag(node, j, on_boundary);
            }
        }
    });
    return table;
}

// ---- Example 4.2 -------------------------------------------------------------

GridFunction fourier_smooth(const GridFunction& u, double s) {
    const PeriodicGrid& g = u.grid;
    const int n = g.n_per_axis();
    auto smooth_line = [&](std::vector<double>& line) {
        const std::size_t m = line.size();
        std::vector<std::complex<double>> F(m);
        for (std::size_t k = 0; k < m; ++k) {
            std::complex<double> acc(0, 0);
            for (std::size_t j = 0; j < m; ++j) {
                const double ang = -2.0 * M_PI * double(j * k % m) / double(m);
                acc += line[j] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            const double kk = k <= m / 2 ? double(k) : double(k) - double(m);
            F[k] = acc * std::exp(-4.0 * M_PI * M_PI * kk * kk * s);
        }
        for (std::size_t j = 0; j < m; ++j) {
            std::complex<double> acc(0, 0);
            for (std::size_t k = 0; k < m; ++k) {
                const double ang = 2.0 * M_PI * double(j * k % m) / double(m);
                acc += F[k] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            line[j] = acc.real() / double(m);
        }
    };

    GridFunction out = u;
    if (g.dim() == 1) {
        smooth_line(out.values);
        return out;
    }
    std::vector<double> line(n);
    for (int i = 0; i < n; ++i) {  // along axis 2
        for (int j = 0; j < n; ++j) line[j] = out[g.index_of(i, j)];
        smooth_line(line);
        for (int j = 0; j < n; ++j) out[g.index_of(i, j)] = line[j];
    }
    for (int j = 0; j < n; ++j) {  // along axis 1
        for (int i = 0; i < n; ++i) line[i] = out[g.index_of(i, j)];
        smooth_line(line);
        for (int i = 0; i < n; ++i) out[g.index_of(i, j)] = line[i];
    }
    return out;
}

ContactModel build_oscillating(const ContactModel& base_G, const GridFunction& f,
                               const GridFunction& g, const OscillatingParams& params) {
    if (f.grid != g.grid) throw InputError("build_oscillating: f and g grids differ");
    auto data = std::make_shared<OscillatingData>(base_G, f, g, params);
    ContactModel m;
    m.kind = ModelKind::Oscillating;
    m.dim = base_G.dim;
    m.momentum_box = base_G.momentum_box;
    m.budget = base_G.budget;
    m.oscillating = data;
    m.native_speed_factory = base_G.native_speed_factory;
    m.native_batch_factory = [data](const PeriodicGrid& grid) -> BoundBatchEval {
        if (grid != data->f.grid) return nullptr;  // caller falls back to eval()
        BoundBatchEval base_eval = data->base.bind(grid);
        auto zeros = std::make_shared<std::vector<double>>(grid.node_count(), 0.0);
        return [data, base_eval, zeros](const double* p1, const double* p2,
                                        const double* u, double lam, double* out,
                                        std::size_t n) {
            const GridFunction& w = data->w_for(lam);
            base_eval(p1, p2, zeros->data(), 1.0, out, n);
            for (std::size_t i = 0; i < n; ++i)
                out[i] += lam * u[i] - lam * w[i];
        };
    };
    return m;
}

}  // namespace wkam
