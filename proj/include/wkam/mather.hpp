#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/kernel.hpp"
#include "wkam/model.hpp"

namespace wkam {

// Probability measure on the sampled (x,v) grid. Velocity samples are shared
// across nodes; weights are row-major (node, velocity sample).
struct DiscreteMeasure {
    PeriodicGrid grid;
    std::vector<Vec2> velocities;
    std::vector<double> weights;  // node_count * velocities.size(), >= 0, sums to 1

    DiscreteMeasure(const PeriodicGrid& g, std::vector<Vec2> vels)
        : grid(g), velocities(std::move(vels)),
          weights(g.node_count() * velocities.size(), 0.0) {}

    double& w(std::size_t node, std::size_t v) { return weights[node * velocities.size() + v]; }
    double w(std::size_t node, std::size_t v) const {
        return weights[node * velocities.size() + v];
    }
    double total_mass() const;
};

enum class ClosednessBasis { HatNodes, Trig };

struct LPResult {
    DiscreteMeasure measure;
    double objective = 0;             // integral of L
    double closedness_violation = 0;  // max basis-row defect of the solution
    long iterations = 0;
};

// Minimizes sum L(x_i,v_j) w_ij over closed probability measures:
//   sum w = 1, w >= 0, and sum <Dphi_k(x_i), v_j> w_ij = 0 per test function.
// HatNodes uses per-node hat functions (derivative sampled by central
// differences); Trig uses sin/cos modes up to trig_modes per axis. Solved by
// a dense two-phase simplex with Bland's rule. Boundary-flagged table entries
// are excluded from the support.
LPResult solve_mather_lp(const LagrangianTable& L, ClosednessBasis basis, double tol,
                         int trig_modes = 6);

// max over basis functions of |sum <Dphi,v> w|; pure diagnostic.
double check_closed(const DiscreteMeasure& mu, ClosednessBasis basis, int trig_modes = 6);

// Node weights of the pushforward to the base (mass preserved).
std::vector<double> project_measure(const DiscreteMeasure& mu);

// u_rep(x) = min over measures of sum_y h(y,x) mu(y).
GridFunction representation_value(const ActionKernel& h,
                                  const std::vector<std::vector<double>>& projected);

// min over measures of (sum weight(y) h(y,x) mu(y)) / (sum weight(y) mu(y));
// weight must be strictly positive.
GridFunction weighted_representation(const ActionKernel& h,
                                     const std::vector<std::vector<double>>& projected,
                                     const GridFunction& weight);

enum class TransformDirection { Forward, Inverse };

// Measure correspondence for breve-type reparametrizations with positive
// x-only denominator f:
//   forward:  mass f(x) w at velocity v/f(x), renormalized;
//   inverse:  mass w/f(x) at velocity f(x) v, renormalized.
// Velocities are re-binned onto the sample grid with a mass-conserving linear
// split; leaving the box is an error.
DiscreteMeasure transform_measure(const DiscreteMeasure& mu, const GridFunction& denom,
                                  TransformDirection direction);

// Re-solves the LP with tiny deterministic objective perturbations to sample
// distinct optimal vertices (the full Mather set is only sampled).
std::vector<LPResult> enumerate_mather_vertices(const LagrangianTable& L,
                                                ClosednessBasis basis, double tol,
                                                int count, std::uint64_t seed = 12345);

}  // namespace wkam
