#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/kernel.hpp"
#include "wkam/model.hpp"

namespace wkam {

// Local dissipation uses a per-node, per-axis viscosity bound (1.1 x the
// model's characteristic-speed bound over the local slope segment, floored at
// sigma_floor_frac of the global estimate). It removes the O(sigma*h) bias
// that a global constant puts on the scheme's critical value, which the
// vanishing-discount runs amplify by 1/lambda. Global is the classic
// constant-sigma Lax-Friedrichs form; order-preservation tests use it.
enum class Dissipation { Local, Global };

struct SolverConfig {
    double sigma = 0.0;   // artificial viscosity; 0 = auto-estimate over the box
    double cfl = 0.9;     // in (0,1]
    double tol = 1e-6;    // residual sup-norm stop
    long max_iter = 60000000;
    std::optional<double> clamp;  // residual clamp bound R (min(H - c, R))
    Dissipation dissipation = Dissipation::Local;
    double sigma_floor_frac = 0.02;  // local-mode floor, fraction of global sigma
};

struct SolveResult {
    GridFunction u;
    long iterations = 0;
    double final_residual = 0;
    double sigma_used = 0;  // global value, or the max local bound at the end
    double dtau = 0;
    bool sigma_raised = false;   // config sigma was below the measured bound
    bool local_dissipation = false;
};

// 1.1 x the max sampled |dH/dp| over the momentum box (finite differences).
double estimate_sigma(const ContactModel& model, const PeriodicGrid& grid, double lambda);

// Lax-Friedrichs residual of H^lambda(x,Du,u) = c:
//   r_i = H(x_i, (p-+p+)/2, u_i) - c - (sigma/2) * sum_axes (p+ - p-),
// with the optional clamp applied to H - c. Requires cfg.sigma > 0.
GridFunction lf_residual(const ContactModel& model, const GridFunction& u, double lambda,
                         double c, const SolverConfig& cfg);

// Godunov (upwind) residual for convex-in-p Hamiltonians, used as the
// consistency instrument for sub/supersolution checks: exact solutions score
// O(h) even at kinks, where the central+dissipation form does not vanish.
GridFunction godunov_residual(const ContactModel& model, const GridFunction& u,
                              double lambda, double c, int segment_samples = 33);

// Monotone Jacobi marching u <- u - dtau * r to the fixed point of the
// Lax-Friedrichs scheme. Throws PreconditionError for non-monotone models and
// SolveError (with residual history) when max_iter is exceeded.
SolveResult solve_stationary(const ContactModel& model, const PeriodicGrid& grid,
                             double lambda, double c, const SolverConfig& cfg,
                             const GridFunction* u_init = nullptr);

enum class ViscosityRole { Sub, Super, Solution };
enum class ResidualScheme { LaxFriedrichs, Godunov };

struct RoleReport {
    bool passed = false;
    std::size_t worst_node = 0;
    double worst_value = 0;     // signed residual at the worst node
    double max_residual = 0;
    double min_residual = 0;
};

// sub <=> max_i r_i <= tol; super <=> min_i r_i >= -tol; solution <=> both.
RoleReport verify_viscosity_role(const ContactModel& model, const GridFunction& u,
                                 double lambda, double c, ViscosityRole role, double tol,
                                 ResidualScheme scheme = ResidualScheme::Godunov,
                                 const SolverConfig& cfg = {});

// Constant-subsolution test for the uni_const route: max_x G(x,0) <= c + tol.
// Returns the violating node when the condition fails.
std::optional<std::size_t> verify_constant_subsolution(const ContactModel& model,
                                                       const PeriodicGrid& grid, double c,
                                                       double tol);

struct SchemeCriticalValue {
    double c = 0;        // additive eigenvalue of the discrete frozen operator
    double spread = 0;   // max - min of the settled residual (accuracy bound)
    long iterations = 0;
};

// The constant c_h with G_scheme(phi) = c_h solvable on this grid with this
// dissipation policy, computed by the normalized evolution
// u <- u - dtau (R(u) - mean R(u)) until R(u) is constant across nodes.
// Discount sweeps must run at this constant: any offset enters solutions as
// (c - c_h)/lambda.
SchemeCriticalValue scheme_critical_value(const ContactModel& model,
                                          const PeriodicGrid& grid,
                                          const SolverConfig& cfg,
                                          double spread_tol = 1e-10,
                                          long max_iter = 400000);

struct CriticalValueEstimate {
    double c = 0;        // Richardson-extrapolated -lambda*mean(u^lambda)
    double c_lo = 0;     // long-time Lax-Oleinik average slope cross-check
    double gap = 0;      // |c - c_lo|
    struct Row {
        double lambda, c_lambda, residual;
        long iterations;
    };
    std::vector<Row> table;
};

struct CriticalValueOptions {
    std::vector<double> lambda_schedule{1e-1, 3e-2, 1e-2, 3e-3};
    double lo_time = 64.0;         // T for the -(U(2T)-U(T))/T slope
    double lo_tau = 1.0 / 32.0;
    double scheme_tol = 0.02;      // estimator gap gate: 5 x this value
    double velocity_box = 0.0;     // 0 = model momentum box
    int v_samples = 0;             // 0 = aligned to lo_tau
    int p_samples = 201;
};

// Solves lambda*u + G = 0 along the schedule, extrapolates -lambda*mean(u)
// linearly in lambda, and cross-checks against the Lax-Oleinik slope at c=0.
// Throws ModelError when the two estimators disagree by > 5 x scheme_tol.
CriticalValueEstimate critical_value(const ContactModel& model, const PeriodicGrid& grid,
                                     const SolverConfig& cfg,
                                     const CriticalValueOptions& opts = {});

struct SweepReport {
    std::vector<double> lambdas;
    std::vector<GridFunction> solutions;
    std::vector<double> sup_gaps;      // size = lambdas.size() - 1
    std::vector<double> residuals;
    std::vector<long> iterations;
    double fitted_slope = 0;           // log(gap) vs log(lambda) fit
    bool non_cauchy = false;           // some gap grew by more than 2x
    int limit_index = -1;              // index of the limit candidate (last solve)
};

// Descending-lambda sweep. Solves are warm-started from the previous solution
// (linearly extrapolated in lambda once two are available), and each solve
// uses residual tolerance cfg.tol * lambda so the solution error stays
// lambda-uniform.
SweepReport lambda_sweep(const ContactModel& model, const PeriodicGrid& grid, double c,
                         const std::vector<double>& lambdas, const SolverConfig& cfg);

// True iff Jacobi iterates started from f and from g stay pointwise ordered
// for all steps and end with f <= g + tol.
bool comparison_order_check(const ContactModel& model, const GridFunction& f,
                            const GridFunction& g, double lambda, double c, int steps,
                            const SolverConfig& cfg, double tol = 1e-9);

struct SandwichReport {
    MonotonicityProfile profile;
    double width = 0;            // (kappa - delta) * R0 / kappa
    bool ordered = false;        // u - width <= w <= u + width within tol
    double worst_violation = 0;
    std::size_t worst_node = 0;
    GridFunction u_contact;
    GridFunction w_discounted;
};

// Solves the contact equation and the linear discounted equation with rate
// kappa^lambda_{R0}, then checks the two-sided bracket.
SandwichReport sandwich_check(const ContactModel& model, const PeriodicGrid& grid,
                              double lambda, double R0, double c, const SolverConfig& cfg,
                              double tol = 0.0);

// Heat-kernel smoothing of a subsolution: returns w with ||u - w||_inf <= eps
// and max Godunov residual <= c + eps + scheme_tol. Throws ModelError when no
// admissible smoothing width exists at this resolution.
GridFunction mollify_subsolution(const GridFunction& u, const ContactModel& model,
                                 double c, double eps, double scheme_tol = 0.02);

}  // namespace wkam
