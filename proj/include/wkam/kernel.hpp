#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/model.hpp"

namespace wkam {

// Min-plus engine invariants:
//  * +BIG = 1e18 is the min-plus infinity; additions saturate to BIG once a
//    sum reaches BIG_SNAP.
//  * Every finite entry is an integer multiple of QUANTUM with magnitude at
//    most ONE_STEP_CAP * MAX_COMPOSE_STEPS. Sums of two such values are exact
//    in double precision, so min-plus composition is associative bit for bit
//    and any factor grouping (repeated squaring, left chains, windowed mins)
//    produces identical bytes.
namespace minplus {
inline constexpr double kBig = 1e18;
inline constexpr double kBigSnap = 1e17;
inline constexpr double kQuantum = 1.0 / (1 << 26);
inline constexpr double kOneStepCap = 4096.0;  // 2^12
inline constexpr long kMaxComposeSteps = 1 << 14;

// Nearest multiple of kQuantum; values beyond kOneStepCap become kBig.
double quantize_entry(double v);

// Saturating exact addition of two kernel entries.
inline double sat_add(double a, double b) {
    const double s = a + b;
    return s >= kBigSnap ? kBig : s;
}
}  // namespace minplus

// Dense matrix K[z][x] ~ h_t(z,x): row = start node z, column = end node x.
// Not assumed symmetric. Unreachable pairs hold +BIG.
struct ActionKernel {
    PeriodicGrid grid;
    double t = 0;       // physical time represented
    double c_used = 0;  // critical-value shift folded into the running cost
    std::vector<double> values;  // row-major, node_count^2

    explicit ActionKernel(const PeriodicGrid& g, double fill = minplus::kBig)
        : grid(g), values(g.node_count() * g.node_count(), fill) {}

    double at(std::size_t z, std::size_t x) const {
        return values[z * grid.node_count() + x];
    }
    double& at(std::size_t z, std::size_t x) {
        return values[z * grid.node_count() + x];
    }
    std::size_t n() const { return grid.node_count(); }
};

// Zero-time identity: 0 on the diagonal, +BIG elsewhere.
ActionKernel identity_kernel(const PeriodicGrid& grid, double c);

struct OneStepOptions {
    bool* degenerate_warning = nullptr;  // set when only self-transitions fit
};

// K[z][x] = tau * (L(mid(z,x), wrap(z,x)/tau) + c), +BIG outside the velocity
// box. The midpoint Lagrangian is the average of the flanking node values
// (second-order quadrature of the action).
ActionKernel one_step_kernel(const LagrangianTable& L, double c, double tau,
                             const OneStepOptions& opts = {});

// C[z][x] = min_w A[z][w] + B[w][x] with saturating arithmetic.
ActionKernel minplus_compose(const ActionKernel& A, const ActionKernel& B);

// Entrywise min (same grids, same c).
ActionKernel entrywise_min(const ActionKernel& A, const ActionKernel& B);

// (t/tau)-fold min-plus power of the one-step kernel via repeated squaring,
// factors applied in increasing bit order of t/tau.
ActionKernel action_h_t(const LagrangianTable& L, double c, double tau, double t);

struct SemiDistanceResult {
    ActionKernel S;              // entrywise min of h_{k tau}, k = 1..K
    double horizon = 0;          // K*tau actually covered (next power of two)
    double stabilization_gap = 0;  // sup change in the last doubling
};

// S = min over k = 1..t_max/tau of h_{k tau}.
SemiDistanceResult semi_distance(const LagrangianTable& L, double c, double tau,
                                 double t_max);

struct PeierlsResult {
    ActionKernel h;   // entrywise min of h_{k tau} over k tau in [T0, T1]
    double drift = 0; // sup |window min - shifted-window min|, a liminf diagnostic
};

// Window minimum surrogate for liminf_{t->inf} h_t. The window must cover at
// least one torus-crossing time.
PeierlsResult peierls_barrier(const LagrangianTable& L, double c, double tau,
                              double T0, double T1);

struct AubrySet {
    std::vector<std::size_t> nodes;
    double tol_used = 0;
    bool fallback = false;  // empty at the requested tol; argmin diagonal returned
};

// {z : h(z,z) <= tol}; never empty (falls back to the argmin of the diagonal).
AubrySet aubry_set(const ActionKernel& h, double tol);

// Entrywise min over z in A of S(x,z) + S(z,y); cross-check for the window
// minimum.
ActionKernel barrier_via_aubry(const ActionKernel& S, const AubrySet& aubry);

// U_k(x) = min_y [u0(y) + h_{k tau}(y,x)], one kernel application per step.
// Returns U_0 = u0, U_1, ..., U_steps.
std::vector<GridFunction> lax_oleinik_evolve(const GridFunction& u0,
                                             const LagrangianTable& L, double c,
                                             double tau, int steps);

// min over y in A of h(y,x). Callers check the constant-subsolution
// precondition (max_x G(x,0) <= c + tol) first; see
// verify_constant_subsolution in stationary.hpp.
GridFunction uni_const_limit(const ActionKernel& h, const AubrySet& aubry);

struct BarrierBundle {
    ActionKernel S;
    ActionKernel h;
    AubrySet aubry;
    double aubry_tol = 0;
    double stabilization_gap = 0;
    double drift = 0;
};

// Convenience pipeline: semi-distance, window barrier, Aubry set. When
// aubry_tol <= 0 it defaults to 5 x the worst nonnegative S-diagonal
// deviation (and at least 1e-9).
BarrierBundle build_barrier_bundle(const LagrangianTable& L, double c, double tau,
                                   double t_max, double T0, double T1,
                                   double aubry_tol = 0);

// CSV triplets (z,x,value) and a compact binary dump: magic "WKK1", two
// little-endian uint64 (rows, cols), two f64 (t, c_used), then row-major f64.
void write_kernel_csv(const ActionKernel& k, const std::string& path);
void write_kernel_wkk(const ActionKernel& k, const std::string& path);
ActionKernel read_kernel_wkk(const std::string& path, const PeriodicGrid& grid);

}  // namespace wkam
