#include "wkam/mather.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace wkam {

double DiscreteMeasure::total_mass() const {
    double s = 0;
    for (double v : weights) s += v;
    return s;
}

namespace {

// Constraint rows of the closedness system: one row per test function,
// entries indexed by (node, velocity sample).
struct ClosednessRows {
    // sparse per row: list of (variable index, coefficient)
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
};

ClosednessRows build_rows(const PeriodicGrid& grid, const std::vector<Vec2>& vels,
                          ClosednessBasis basis, int trig_modes) {
    ClosednessRows out;
    const std::size_t nv = vels.size();
    const double h = grid.spacing();
    const int n = grid.n_per_axis();

    if (basis == ClosednessBasis::HatNodes) {
        // hat at node k, derivative sampled at nodes by central differences:
        // nonzero only at the two axis neighbors of k
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            std::vector<std::pair<std::size_t, double>> row;
            const auto mi = grid.node_multi_index(k);
            for (int axis = 0; axis < grid.dim(); ++axis) {
                auto shift = [&](int d) {
                    auto m = mi;
                    m[axis] += d;
                    return grid.index_of(m[0], m[1]);
                };
                const std::size_t minus = shift(-1), plus = shift(+1);
                for (std::size_t j = 0; j < nv; ++j) {
                    const double coef = vels[j][axis] / (2.0 * h);
                    if (coef == 0.0) continue;
                    row.push_back({minus * nv + j, +coef});
                    row.push_back({plus * nv + j, -coef});
                }
            }
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    // trig modes: phi = cos(2 pi m x_a) and sin(2 pi m x_a), m = 1..K
    for (int axis = 0; axis < grid.dim(); ++axis)
        for (int m = 1; m <= trig_modes && m < n / 2; ++m)
            for (int kind = 0; kind < 2; ++kind) {
                std::vector<std::pair<std::size_t, double>> row;
                for (std::size_t i = 0; i < grid.node_count(); ++i) {
                    const double xa = grid.node_coords(i)[axis];
                    const double dphi = kind == 0
                                            ? -2.0 * M_PI * m * std::sin(2.0 * M_PI * m * xa)
                                            : 2.0 * M_PI * m * std::cos(2.0 * M_PI * m * xa);
                    if (std::abs(dphi) < 1e-15) continue;
                    for (std::size_t j = 0; j < nv; ++j) {
                        const double coef = dphi * vels[j][axis];
                        if (coef != 0.0) row.push_back({i * nv + j, coef});
                    }
                }
                out.rows.push_back(std::move(row));
            }
    return out;
}

// Dense two-phase tableau simplex with Bland's rule.
class Simplex {
public:
    // A is m x N (dense), constraints A w = b, w >= 0, minimize c.w
    Simplex(std::vector<std::vector<double>> A, std::vector<double> b, std::size_t N)
        : N_(N), m_(A.size()) {
        for (std::size_t i = 0; i < m_; ++i)
            if (b[i] < 0) {
                b[i] = -b[i];
                for (auto& v : A[i]) v = -v;
            }
        cols_ = N_ + m_;  // artificials appended
        T_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
        basis_.resize(m_);
        active_.assign(m_, true);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < N_; ++j) T_[i][j] = A[i][j];
            T_[i][N_ + i] = 1.0;
            T_[i][cols_] = b[i];
            basis_[i] = N_ + i;
        }
    }

    // returns false when infeasible
    bool phase1(long& iters) {
        std::vector<double> cost(cols_, 0.0);
        for (std::size_t j = N_; j < cols_; ++j) cost[j] = 1.0;
        run(cost, cols_, iters);
        double obj = 0;
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= N_) obj += T_[i][cols_];
        if (obj > 1e-7) return false;
        // drive zero-level artificials out of the basis where possible
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < N_) continue;
            std::size_t q = N_;
            for (std::size_t j = 0; j < N_; ++j)
                if (std::abs(T_[i][j]) > 1e-9) {
                    q = j;
                    break;
                }
            if (q == N_) {
                active_[i] = false;  // redundant row
            } else {
                pivot(i, q);
            }
        }
        return true;
    }

    void phase2(const std::vector<double>& obj_costs, long& iters) {
        std::vector<double> cost(cols_, 0.0);
        for (std::size_t j = 0; j < N_; ++j) cost[j] = obj_costs[j];
        run(cost, N_, iters);
    }

    std::vector<double> solution() const {
        std::vector<double> w(N_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] < N_) w[basis_[i]] = std::max(0.0, T_[i][cols_]);
        return w;
    }

private:
    std::size_t N_, m_, cols_;
    std::vector<std::vector<double>> T_;
    std::vector<std::size_t> basis_;
    std::vector<bool> active_;

    void pivot(std::size_t r, std::size_t q) {
        const double piv = T_[r][q];
        for (auto& v : T_[r]) v /= piv;
        T_[r][q] = 1.0;  // kill roundoff
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = T_[i][q];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) T_[i][j] -= f * T_[r][j];
            T_[i][q] = 0.0;
        }
        basis_[r] = q;
    }

    // Dantzig pricing with Bland's rule engaged after a run of degenerate
    // pivots (Bland guarantees no cycling; Dantzig keeps the iteration count
    // practical). Leaving row: minimum ratio, ties to the smallest basis index.
    void run(const std::vector<double>& cost, std::size_t col_limit, long& iters) {
        std::vector<double> z(cols_ + 1, 0.0);
        for (std::size_t j = 0; j < cols_; ++j) z[j] = cost[j];
        for (std::size_t i = 0; i < m_; ++i) {
            if (!active_[i]) continue;
            const double cb = cost[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) z[j] -= cb * T_[i][j];
        }
        const double eps = 1e-9;
        int degenerate_run = 0;
        for (;;) {
            if (++iters > 2000000)
                throw ModelError("mather LP: simplex iteration cap exceeded");
            const bool bland = degenerate_run > 50;
            std::size_t q = cols_;
            if (bland) {
                for (std::size_t j = 0; j < col_limit; ++j)
                    if (z[j] < -eps) {
                        q = j;
                        break;
                    }
            } else {
                double most = -eps;
                for (std::size_t j = 0; j < col_limit; ++j)
                    if (z[j] < most) {
                        most = z[j];
                        q = j;
                    }
            }
            if (q == cols_) return;  // optimal
            std::size_t r = m_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (!active_[i] || T_[i][q] <= eps) continue;
                const double ratio = T_[i][cols_] / T_[i][q];
                if (ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 && (r == m_ || basis_[i] < basis_[r]))) {
                    best = ratio;
                    r = i;
                }
            }
            if (r == m_) throw ModelError("mather LP: unbounded (non-coercive L?)");
            degenerate_run = best <= 1e-12 ? degenerate_run + 1 : 0;
            pivot(r, q);
            const double f = z[q];
            if (f != 0.0) {
                for (std::size_t j = 0; j <= cols_; ++j) z[j] -= f * T_[r][j];
                z[q] = 0.0;
            }
        }
    }
};

struct VarMap {
    std::vector<std::size_t> to_full;  // LP var -> (node*nv + j)
    std::vector<long> from_full;       // -1 when excluded
};

VarMap build_varmap(const LagrangianTable& L) {
    VarMap vm;
    const std::size_t nv = L.velocity_count();
    vm.from_full.assign(L.grid().node_count() * nv, -1);
    for (std::size_t node = 0; node < L.grid().node_count(); ++node)
        for (std::size_t j = 0; j < nv; ++j) {
            if (L.boundary_flagged(node, j)) continue;
            vm.from_full[node * nv + j] = long(vm.to_full.size());
            vm.to_full.push_back(node * nv + j);
        }
    return vm;
}

LPResult solve_lp_costs(const LagrangianTable& L, ClosednessBasis basis, double tol,
                        int trig_modes, const std::vector<double>& costs_full) {
    const PeriodicGrid& grid = L.grid();
    const std::size_t nv = L.velocity_count();
    const VarMap vm = build_varmap(L);
    const std::size_t N = vm.to_full.size();
    if (N == 0) throw ModelError("mather LP: every table entry is excluded");

    const ClosednessRows rows = build_rows(grid, L.velocities(), basis, trig_modes);
    const std::size_t m = 1 + rows.rows.size();
    std::vector<std::vector<double>> A(m, std::vector<double>(N, 0.0));
    std::vector<double> b(m, 0.0);
    for (std::size_t k = 0; k < N; ++k) A[0][k] = 1.0;
    b[0] = 1.0;
    for (std::size_t r = 0; r < rows.rows.size(); ++r) {
        double scale = 0;
        for (const auto& [full, coef] : rows.rows[r]) {
            (void)full;
            scale = std::max(scale, std::abs(coef));
        }
        if (scale == 0) scale = 1;
        for (const auto& [full, coef] : rows.rows[r]) {
            const long k = vm.from_full[full];
            if (k >= 0) A[r + 1][k] += coef / scale;
        }
    }

    std::vector<double> costs(N);
    for (std::size_t k = 0; k < N; ++k) costs[k] = costs_full[vm.to_full[k]];

    Simplex sx(std::move(A), std::move(b), N);
    long iters = 0;
    if (!sx.phase1(iters))
        throw ModelError("mather LP: infeasible (unexpected: v=0 columns exist)");
    sx.phase2(costs, iters);
    const std::vector<double> w = sx.solution();

    DiscreteMeasure mu(grid, L.velocities());
    for (std::size_t k = 0; k < N; ++k)
        if (w[k] > tol * 1e-3) mu.weights[vm.to_full[k]] = w[k];
    // clean tiny negative roundoff and renormalize
    double mass = mu.total_mass();
    if (mass <= 0) throw ModelError("mather LP: zero-mass solution");
    for (auto& x : mu.weights) x /= mass;

    LPResult out{std::move(mu), 0.0, 0.0, iters};
    for (std::size_t node = 0; node < grid.node_count(); ++node)
        for (std::size_t j = 0; j < nv; ++j)
            if (out.measure.w(node, j) > 0)
                out.objective += L.value(node, j) * out.measure.w(node, j);
    out.closedness_violation = check_closed(out.measure, basis, trig_modes);
    return out;
}

}  // namespace

LPResult solve_mather_lp(const LagrangianTable& L, ClosednessBasis basis, double tol,
                         int trig_modes) {
    const std::size_t nv = L.velocity_count();
    std::vector<double> costs(L.grid().node_count() * nv, 0.0);
    for (std::size_t node = 0; node < L.grid().node_count(); ++node)
        for (std::size_t j = 0; j < nv; ++j) {
            const double v = L.value(node, j);
            if (!std::isfinite(v)) throw ModelError("mather LP: non-finite Lagrangian entry");
            costs[node * nv + j] = v;
        }
    return solve_lp_costs(L, basis, tol, trig_modes, costs);
}

double check_closed(const DiscreteMeasure& mu, ClosednessBasis basis, int trig_modes) {
    const ClosednessRows rows = build_rows(mu.grid, mu.velocities, basis, trig_modes);
    double worst = 0;
    for (const auto& row : rows.rows) {
        double acc = 0;
        for (const auto& [full, coef] : row) acc += coef * mu.weights[full];
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

std::vector<double> project_measure(const DiscreteMeasure& mu) {
    std::vector<double> node_w(mu.grid.node_count(), 0.0);
    const std::size_t nv = mu.velocities.size();
    for (std::size_t node = 0; node < node_w.size(); ++node)
        for (std::size_t j = 0; j < nv; ++j) node_w[node] += mu.w(node, j);
    return node_w;
}

GridFunction representation_value(const ActionKernel& h,
                                  const std::vector<std::vector<double>>& projected) {
    if (projected.empty()) throw InputError("representation_value: empty measure list");
    GridFunction out(h.grid, std::numeric_limits<double>::infinity());
    for (const auto& mu : projected) {
        if (mu.size() != h.n())
            throw InputError("representation_value: measure size mismatch");
        for (std::size_t x = 0; x < h.n(); ++x) {
            double acc = 0;
            for (std::size_t y = 0; y < h.n(); ++y)
                if (mu[y] > 0) acc += h.at(y, x) * mu[y];
            out[x] = std::min(out[x], acc);
        }
    }
    return out;
}

GridFunction weighted_representation(const ActionKernel& h,
                                     const std::vector<std::vector<double>>& projected,
                                     const GridFunction& weight) {
    if (projected.empty()) throw InputError("weighted_representation: empty measure list");
    if (weight.grid != h.grid) throw InputError("weighted_representation: grid mismatch");
    for (std::size_t i = 0; i < weight.size(); ++i)
        if (!(weight[i] > 0))
            throw InputError("weighted_representation: nonpositive weight at node " +
                             std::to_string(i));
    GridFunction out(h.grid, std::numeric_limits<double>::infinity());
    for (const auto& mu : projected) {
        if (mu.size() != h.n())
            throw InputError("weighted_representation: measure size mismatch");
        double denom = 0;
        for (std::size_t y = 0; y < h.n(); ++y) denom += weight[y] * mu[y];
        for (std::size_t x = 0; x < h.n(); ++x) {
            double acc = 0;
            for (std::size_t y = 0; y < h.n(); ++y)
                if (mu[y] > 0) acc += weight[y] * h.at(y, x) * mu[y];
            out[x] = std::min(out[x], acc / denom);
        }
    }
    return out;
}

namespace {

struct VelGridInfo {
    double vmin, dv;
    int per_axis;
};

VelGridInfo velocity_grid_info(const std::vector<Vec2>& vels, int dim) {
    VelGridInfo info{};
    info.per_axis = dim == 1 ? int(vels.size())
                             : int(std::lround(std::sqrt(double(vels.size()))));
    if (info.per_axis < 2) throw InputError("transform_measure: degenerate velocity grid");
    info.vmin = vels.front()[0];
    const double vmax = vels.back()[0];
    info.dv = (vmax - info.vmin) / (info.per_axis - 1);
    if (info.dv <= 0) throw InputError("transform_measure: velocity grid is not increasing");
    return info;
}

}  // namespace

DiscreteMeasure transform_measure(const DiscreteMeasure& mu, const GridFunction& denom,
                                  TransformDirection direction) {
    if (denom.grid != mu.grid) throw InputError("transform_measure: grid mismatch");
    for (std::size_t i = 0; i < denom.size(); ++i)
        if (!(denom[i] > 0))
            throw InputError("transform_measure: denominator must be positive");
    const int dim = mu.grid.dim();
    const VelGridInfo vg = velocity_grid_info(mu.velocities, dim);
    const std::size_t nv = mu.velocities.size();

    DiscreteMeasure out(mu.grid, mu.velocities);
    auto deposit = [&](std::size_t node, const Vec2& v, double mass) {
        // linear mass split between the bracketing samples per axis
        double t1 = (v[0] - vg.vmin) / vg.dv;
        if (t1 < -1e-9 || t1 > vg.per_axis - 1 + 1e-9)
            throw ModelError("transform_measure: velocity leaves the sampled box; "
                             "enlarge the velocity box");
        t1 = std::clamp(t1, 0.0, double(vg.per_axis - 1));
        const int i1 = std::min(vg.per_axis - 2, int(std::floor(t1)));
        const double a1 = t1 - i1;
        if (dim == 1) {
            out.weights[node * nv + i1] += mass * (1 - a1);
            out.weights[node * nv + i1 + 1] += mass * a1;
            return;
        }
        double t2 = (v[1] - vg.vmin) / vg.dv;
        if (t2 < -1e-9 || t2 > vg.per_axis - 1 + 1e-9)
            throw ModelError("transform_measure: velocity leaves the sampled box; "
                             "enlarge the velocity box");
        t2 = std::clamp(t2, 0.0, double(vg.per_axis - 1));
        const int i2 = std::min(vg.per_axis - 2, int(std::floor(t2)));
        const double a2 = t2 - i2;
        auto at = [&](int a, int b) -> double& {
            return out.weights[node * nv + std::size_t(a) * vg.per_axis + b];
        };
        at(i1, i2) += mass * (1 - a1) * (1 - a2);
        at(i1, i2 + 1) += mass * (1 - a1) * a2;
        at(i1 + 1, i2) += mass * a1 * (1 - a2);
        at(i1 + 1, i2 + 1) += mass * a1 * a2;
    };

    for (std::size_t node = 0; node < mu.grid.node_count(); ++node) {
        const double f = denom[node];
        for (std::size_t j = 0; j < nv; ++j) {
            const double w = mu.w(node, j);
            if (w <= 0) continue;
            const Vec2& v = mu.velocities[j];
            if (direction == TransformDirection::Forward) {
                deposit(node, {v[0] / f, v[1] / f}, f * w);
            } else {
                deposit(node, {v[0] * f, v[1] * f}, w / f);
            }
        }
    }
    const double mass = out.total_mass();
    if (mass <= 0) throw ModelError("transform_measure: empty transformed measure");
    for (auto& x : out.weights) x /= mass;
    return out;
}

std::vector<LPResult> enumerate_mather_vertices(const LagrangianTable& L,
                                                ClosednessBasis basis, double tol,
                                                int count, std::uint64_t seed) {
    std::vector<LPResult> out;
    out.push_back(solve_mather_lp(L, basis, tol));

    const std::size_t nv = L.velocity_count();
    std::vector<double> base_costs(L.grid().node_count() * nv, 0.0);
    double scale = 0;
    for (std::size_t node = 0; node < L.grid().node_count(); ++node)
        for (std::size_t j = 0; j < nv; ++j) {
            base_costs[node * nv + j] = L.value(node, j);
            scale = std::max(scale, std::abs(L.value(node, j)));
        }
    const double eps = 1e-7 * (scale + 1.0);
    for (int k = 1; k < count; ++k) {
        std::mt19937_64 rng(seed + std::uint64_t(k));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> costs = base_costs;
        for (auto& cst : costs) cst += eps * unif(rng);
        LPResult r = solve_lp_costs(L, basis, tol, 6, costs);
        // report the unperturbed objective of the perturbed vertex
        double obj = 0;
        for (std::size_t node = 0; node < L.grid().node_count(); ++node)
            for (std::size_t j = 0; j < nv; ++j)
                if (r.measure.w(node, j) > 0)
                    obj += L.value(node, j) * r.measure.w(node, j);
        r.objective = obj;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace wkam
