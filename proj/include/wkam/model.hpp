#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wkam/expr.hpp"
#include "wkam/grid.hpp"

namespace wkam {

// Families H^lambda(x,p,u) with frozen part G(x,p) = H^lambda(x,p,0):
//   Discounted:     lambda*u + G(x,p)
//   GeneralContact: G(x,p) + lambda*coupling(x,u), coupling(x,0) = 0
//   AppI:           f(x, lambda*u) + H_base(x,p)
//   AppII:          H(x, p, lambda*u)
//   Oscillating:    lambda*u + G(x,p) - lambda*w_lambda(x), w_lambda a smoothed
//                   copy of one of two stored critical solutions, branch
//                   selected by the position of lambda in (1/(m+1), 1/m].
enum class ModelKind { Discounted, GeneralContact, AppI, AppII, Oscillating };

struct SamplingBudget {
    int x_samples = 64;   // per axis
    int p_samples = 201;  // per axis
    int u_samples = 33;
};

// Batched evaluator bound to a grid: all x-dependence is baked in at bind
// time, so hot loops pay no per-node dispatch. Arrays are in node order;
// p2 may be null in 1D.
using BoundBatchEval = std::function<void(const double* p1, const double* p2,
                                          const double* u, double lambda,
                                          double* out, std::size_t n)>;

// Per-axis characteristic-speed bound: out_k[i] >= sup |dH/dp_k| over the
// segment between the one-sided slopes at node i (pm/pp per axis, other
// arguments fixed). Powers the local-dissipation solver mode; models without
// a native bound fall back to a global constant.
using SpeedBatchEval = std::function<void(const double* pm1, const double* pp1,
                                          const double* pm2, const double* pp2,
                                          const double* u, double lambda,
                                          double* out1, double* out2, std::size_t n)>;

struct OscillatingData;  // smoothing cache, defined in model.cpp

class ContactModel {
public:
    ModelKind kind = ModelKind::Discounted;
    int dim = 1;
    double lambda = 1.0;        // default parameter slot
    double momentum_box = 4.0;  // P_max
    SamplingBudget budget{};

    // Expression payloads; which ones are set depends on kind.
    ScalarExpr G_expr;         // Discounted, GeneralContact
    ScalarExpr coupling_expr;  // GeneralContact
    ScalarExpr f_expr;         // AppI: f(x,u)
    ScalarExpr H_base_expr;    // AppI: H(x,p)
    ScalarExpr H_expr;         // AppII: H(x,p,u)
    ScalarExpr f_u_expr;       // optional exact u-derivative of f at (x,u)
    ScalarExpr H_u_expr;       // optional exact u-derivative of H at (x,p,u)

    // Optional native fast path with the same semantics as the expressions.
    std::function<double(const Vec2& x, const Vec2& p, double u, double lambda)> native;
    std::function<BoundBatchEval(const PeriodicGrid&)> native_batch_factory;
    std::function<SpeedBatchEval(const PeriodicGrid&)> native_speed_factory;

    std::shared_ptr<OscillatingData> oscillating;

    // H^lambda(x,p,u). Evaluation errors carry model context.
    double eval(const Vec2& x, const Vec2& p, double u, double lambda_arg) const;

    // Frozen Hamiltonian G(x,p); literally eval at u = 0, one code path.
    double frozen(const Vec2& x, const Vec2& p) const { return eval(x, p, 0.0, lambda); }

    // d/du H^lambda at (x,p,u); exact expression when supplied, otherwise a
    // central difference with relative step 1e-6.
    double u_derivative(const Vec2& x, const Vec2& p, double u, double lambda_arg) const;

    // Grid-bound batched evaluator (native when available).
    BoundBatchEval bind(const PeriodicGrid& grid) const;

    // Materializes lambda-dependent state (Oscillating smoothing); no-op for
    // other kinds.
    void prepare(double lambda_arg) const;

    // The model whose frozen part is the limiting G. For Oscillating families
    // (whose frozen part still carries the lambda-dependent forcing) this is
    // the stored base model; otherwise the model itself.
    const ContactModel& frozen_base() const;

    // Branch targets of an Oscillating family; throws for other kinds.
    const GridFunction& oscillating_target_f() const;
    const GridFunction& oscillating_target_g() const;
};

// ---- named constructors ----------------------------------------------------

ContactModel make_discounted(ScalarExpr G, int dim = 1);
ContactModel make_pendulum();             // G = p1^2/2 + cos(2 pi x1)
ContactModel make_double_well();          // G = p1^2/2 + cos(4 pi x1)
ContactModel make_pendulum_2d();          // G = |p|^2/2 + cos(2 pi x1) + cos(2 pi x2)
ContactModel make_app1_cubic();           // f = cos(2 pi x1) + u + u^3/3, H = p1^2/2
ContactModel make_app2_paper();           // H = u + cos(u)^2 sin(p1)/2 + p1^2/2 + cos(2 pi x1)

// ---- structural probes -----------------------------------------------------

struct StructureDiagnostics {
    double coercivity_growth;    // min over samples of G(x, R dir) - G(x, R/2 dir)
    bool coercive;               // coercivity_growth > 0
    double convexity_violation;  // max midpoint-convexity defect of p -> G(x,p)
    double min_u_derivative;     // min sampled d/du H^1(x,p,u)
};

StructureDiagnostics probe_structure(const ContactModel& model, int sample_budget = 0);

struct MonotonicityProfile {
    double R = 0;
    double lambda = 0;
    double delta = 0;  // min |H^l(x,p,u)-H^l(x,p,0)|/|u|
    double kappa = 0;  // max of the same quotient
    double ratio = 0;  // delta/kappa
};

// Samples |p| <= R, 0 < |u| <= R. Throws ModelError for u-independent models.
MonotonicityProfile monotonicity_profile(const ContactModel& model, double R,
                                         double lambda, int sample_budget = 0);

struct KappaBound {
    double kappa = 0;
    bool empty_sublevel = false;
};

// sup{|p| : G(x,p) <= c} sampled over the momentum box.
KappaBound lipschitz_bound_kappa(const ContactModel& model, double c);

// New model whose frozen Hamiltonian is (G - c) / (d/du H^1 at u=0); the
// denominator must be strictly positive on the sample set. When the sampled
// denominator is constant 1 the division is skipped.
ContactModel breve_transform(const ContactModel& model, double c);

// ---- Legendre transform ----------------------------------------------------

class LagrangianTable {
public:
    LagrangianTable(const PeriodicGrid& grid, double velocity_box, int v_samples_per_axis);

    const PeriodicGrid& grid() const { return grid_; }
    double velocity_box() const { return vbox_; }
    int v_samples_per_axis() const { return v_per_axis_; }
    std::size_t velocity_count() const { return velocities_.size(); }
    const std::vector<Vec2>& velocities() const { return velocities_; }

    double value(std::size_t node, std::size_t v_index) const {
        return values_[node * velocities_.size() + v_index];
    }
    double& value(std::size_t node, std::size_t v_index) {
        return values_[node * velocities_.size() + v_index];
    }
    bool boundary_flagged(std::size_t node, std::size_t v_index) const {
        return flags_[node * velocities_.size() + v_index] != 0;
    }
    void set_boundary_flag(std::size_t node, std::size_t v_index, bool f) {
        flags_[node * velocities_.size() + v_index] = f ? 1 : 0;
    }
    bool any_boundary_flagged() const;

    // Multilinear interpolation in v at a given node; v must lie inside the
    // velocity box.
    double value_at(std::size_t node, const Vec2& v) const;

    // Nearest velocity-sample index per axis (used for aligned lookups).
    std::size_t v_index_of(const Vec2& v, double* distance = nullptr) const;

private:
    PeriodicGrid grid_;
    double vbox_;
    int v_per_axis_;
    double dv_;
    std::vector<Vec2> velocities_;
    std::vector<double> values_;
    std::vector<std::uint8_t> flags_;
};

// L(x_i, v_j) = max over the sampled momentum box of <p,v> - G(x_i,p).
// Entries whose maximizer sits on the box boundary are flagged (the true
// value may be larger, or +infinity for non-superlinear G).
LagrangianTable legendre_transform(const ContactModel& model, const PeriodicGrid& grid,
                                   double velocity_box, int v_samples_per_axis,
                                   int p_samples_per_axis);

// ---- Example 4.2 construction ----------------------------------------------

struct OscillatingParams {
    double s_initial = 0.01;  // first smoothing width tried
    double s_min = 0.0;       // 0 = spacing^2
    int max_halvings = 60;
};

// Family lambda*u + G(x,p) - lambda*w_lambda(x); w_lambda is a Fourier-smoothed
// copy of f when floor-style branch index m = [1/lambda] is even and of g when
// odd, with smoothing width reduced until ||target - w_lambda||_inf <= lambda.
// Callers are expected to have verified that f and g solve G(x,Du) = c(G).
ContactModel build_oscillating(const ContactModel& base_G, const GridFunction& f,
                               const GridFunction& g, const OscillatingParams& params = {});

// Heat-kernel smoothing on the torus: Fourier multiplier exp(-4 pi^2 |k|^2 s).
GridFunction fourier_smooth(const GridFunction& u, double s);

}  // namespace wkam
