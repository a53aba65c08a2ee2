#include "wkam/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "wkam/parallel.hpp"

namespace wkam {

namespace minplus {

double quantize_entry(double v) {
    if (!std::isfinite(v)) throw ModelError("kernel entry is not finite");
    if (std::abs(v) > kOneStepCap) return kBig;
    double q = std::nearbyint(v / kQuantum) * kQuantum;
    if (q == 0.0) q = 0.0;  // normalize -0.0
    return q;
}

}  // namespace minplus

using minplus::kBig;
using minplus::kBigSnap;
using minplus::sat_add;

ActionKernel identity_kernel(const PeriodicGrid& grid, double c) {
    ActionKernel k(grid);
    k.t = 0;
    k.c_used = c;
    for (std::size_t i = 0; i < k.n(); ++i) k.at(i, i) = 0.0;
    return k;
}

ActionKernel one_step_kernel(const LagrangianTable& L, double c, double tau,
                             const OneStepOptions& opts) {
    if (tau <= 0) throw InputError("one_step_kernel: tau must be positive");
    const PeriodicGrid& g = L.grid();
    const int dim = g.dim();
    const double h = g.spacing();
    const int rad = static_cast<int>(std::floor(L.velocity_box() * tau / h + 1e-9));
    if (opts.degenerate_warning) *opts.degenerate_warning = rad < 1;

    ActionKernel K(g);
    K.t = tau;
    K.c_used = c;

    // Reachable displacements are whole numbers of grid cells; their
    // velocities k*h/tau land on aligned velocity samples when the table was
    // built that way, and are interpolated otherwise.
    parallel_for(g.node_count(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t z = lo; z < hi; ++z) {
            const auto zi = g.node_multi_index(z);
            const int r2 = dim == 2 ? rad : 0;
            for (int d1 = -rad; d1 <= rad; ++d1) {
                for (int d2 = -r2; d2 <= r2; ++d2) {
                    const std::size_t x = g.index_of(zi[0] + d1, zi[1] + d2);
                    const Vec2 v{d1 * h / tau, d2 * h / tau};
                    if (std::abs(v[0]) > L.velocity_box() + 1e-12 ||
                        std::abs(v[1]) > L.velocity_box() + 1e-12)
                        continue;
                    // midpoint value: average of the tables at the flanking
                    // nodes per half-step axis offset
                    double Lmid;
                    const bool half1 = (d1 & 1) != 0, half2 = (d2 & 1) != 0;
                    const int m1 = zi[0] + (d1 >= 0 ? d1 / 2 : -((-d1) / 2) - (half1 ? 1 : 0));
                    const int m2 = zi[1] + (d2 >= 0 ? d2 / 2 : -((-d2) / 2) - (half2 ? 1 : 0));
                    const std::size_t a = g.index_of(m1, m2);
                    const std::size_t b1 = half1 ? g.index_of(m1 + 1, m2) : a;
                    const std::size_t b2 = half2 ? g.index_of(m1, m2 + 1) : a;
                    const std::size_t b12 =
                        (half1 && half2) ? g.index_of(m1 + 1, m2 + 1) : (half1 ? b1 : b2);
                    double dist;
                    const std::size_t vj = L.v_index_of(v, &dist);
                    if (dist > 1e-9) {
                        Lmid = 0.25 * (L.value_at(a, v) + L.value_at(b1, v) +
                                       L.value_at(b2, v) + L.value_at(b12, v));
                    } else {
                        Lmid = 0.25 * (L.value(a, vj) + L.value(b1, vj) +
                                       L.value(b2, vj) + L.value(b12, vj));
                    }
                    K.at(z, x) = minplus::quantize_entry(tau * (Lmid + c));
                }
            }
        }
    });
    return K;
}

namespace {
void check_compatible(const ActionKernel& A, const ActionKernel& B, const char* who) {
    if (A.grid != B.grid) throw InputError(std::string(who) + ": grid mismatch");
    if (A.c_used != B.c_used) throw InputError(std::string(who) + ": c_used mismatch");
}
}  // namespace

ActionKernel minplus_compose(const ActionKernel& A, const ActionKernel& B) {
    check_compatible(A, B, "minplus_compose");
    const std::size_t n = A.n();
    ActionKernel C(A.grid);
    C.t = A.t + B.t;
    C.c_used = A.c_used;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t z = lo; z < hi; ++z) {
            double* out = &C.values[z * n];
            const double* arow = &A.values[z * n];
            for (std::size_t w = 0; w < n; ++w) {
                const double a = arow[w];
                if (a >= kBigSnap) continue;
                const double* brow = &B.values[w * n];
                for (std::size_t x = 0; x < n; ++x) {
                    const double cand = sat_add(a, brow[x]);
                    if (cand < out[x]) out[x] = cand;
                }
            }
        }
    });
    return C;
}

ActionKernel entrywise_min(const ActionKernel& A, const ActionKernel& B) {
    check_compatible(A, B, "entrywise_min");
    ActionKernel C = A;
    for (std::size_t i = 0; i < C.values.size(); ++i)
        C.values[i] = std::min(C.values[i], B.values[i]);
    C.t = std::max(A.t, B.t);
    return C;
}

namespace {
long steps_of(double t, double tau, const char* who) {
    const double m_real = t / tau;
    const long m = std::lround(m_real);
    if (m < 1 || std::abs(m_real - double(m)) > 1e-9)
        throw InputError(std::string(who) + ": t must be a positive integer multiple of tau");
    if (m > minplus::kMaxComposeSteps)
        throw InputError(std::string(who) + ": horizon exceeds the compose-step bound");
    return m;
}

// Min-plus power by repeated squaring, factors in increasing bit order.
ActionKernel kernel_power(const ActionKernel& P, long m) {
    ActionKernel base = P;
    ActionKernel* result = nullptr;
    ActionKernel acc(P.grid);
    long bit = 1;
    for (long rem = m; rem > 0; bit <<= 1) {
        if (rem & bit) {
            rem -= bit;
            if (!result) {
                acc = base;
                result = &acc;
            } else {
                acc = minplus_compose(acc, base);
            }
        }
        if (rem > 0) base = minplus_compose(base, base);
    }
    return acc;
}
}  // namespace

ActionKernel action_h_t(const LagrangianTable& L, double c, double tau, double t) {
    const long m = steps_of(t, tau, "action_h_t");
    const ActionKernel P = one_step_kernel(L, c, tau);
    return kernel_power(P, m);
}

SemiDistanceResult semi_distance(const LagrangianTable& L, double c, double tau,
                                 double t_max) {
    if (t_max < tau) throw InputError("semi_distance: t_max below one step");
    const long want = std::lround(std::ceil(t_max / tau - 1e-9));
    if (want > minplus::kMaxComposeSteps)
        throw InputError("semi_distance: horizon exceeds the compose-step bound");
    const ActionKernel P = one_step_kernel(L, c, tau);

    // Q_k = min over j = 1..2^k of P^j:  Q_{k+1} = min(Q_k, Q_k o R_k),
    // R_{k+1} = R_k o R_k.  Exact arithmetic makes this identical to the
    // naive chain.
    ActionKernel Q = P;
    ActionKernel R = P;
    long covered = 1;
    double last_gap = 0;
    while (covered < want) {
        ActionKernel QR = minplus_compose(Q, R);
        ActionKernel Q2 = entrywise_min(Q, QR);
        last_gap = 0;
        for (std::size_t i = 0; i < Q.values.size(); ++i) {
            const double a = Q.values[i], b = Q2.values[i];
            if (a < kBigSnap && b < kBigSnap)
                last_gap = std::max(last_gap, std::abs(a - b));
            else if ((a < kBigSnap) != (b < kBigSnap))
                last_gap = kBig;
        }
        Q = std::move(Q2);
        R = minplus_compose(R, R);
        covered *= 2;
    }
    SemiDistanceResult out{std::move(Q), covered * tau, last_gap};
    out.S.t = covered * tau;
    return out;
}

PeierlsResult peierls_barrier(const LagrangianTable& L, double c, double tau,
                              double T0, double T1) {
    if (!(T1 > T0) || T0 <= 0) throw InputError("peierls_barrier: need 0 < T0 < T1");
    const double h = L.grid().spacing();
    const int rad = static_cast<int>(std::floor(L.velocity_box() * tau / h + 1e-9));
    const double crossing = rad >= 1 ? 0.5 * L.grid().dim() / (rad * h / tau)
                                     : std::numeric_limits<double>::infinity();
    if (T1 - T0 < crossing)
        throw InputError("peierls_barrier: window shorter than one crossing time");

    const long j0 = steps_of(T0, tau, "peierls_barrier");
    long len = 1;
    while (len * tau < T1 - T0) len *= 2;

    const ActionKernel P = one_step_kernel(L, c, tau);
    // min over j in [j0+1, j0+len] of P^j  =  P^{j0} o (min over j<=len of P^j)
    ActionKernel Q = P;
    ActionKernel R = P;
    long covered = 1;
    while (covered < len) {
        Q = entrywise_min(Q, minplus_compose(Q, R));
        R = minplus_compose(R, R);
        covered *= 2;
    }
    const ActionKernel Pj0 = kernel_power(P, j0);
    ActionKernel hwin = minplus_compose(Pj0, Q);

    // liminf surrogate diagnostic: shift the window by a quarter length
    const long shift = std::max<long>(1, len / 4);
    const ActionKernel Pshift = kernel_power(P, shift);
    const ActionKernel hshift = minplus_compose(Pshift, hwin);
    double drift = 0;
    for (std::size_t i = 0; i < hwin.values.size(); ++i) {
        const double a = hwin.values[i], b = hshift.values[i];
        if (a < kBigSnap && b < kBigSnap)
            drift = std::max(drift, std::abs(a - b));
        else if ((a < kBigSnap) != (b < kBigSnap))
            drift = kBig;
    }
    hwin.t = (j0 + covered) * tau;
    return PeierlsResult{std::move(hwin), drift};
}

AubrySet aubry_set(const ActionKernel& h, double tol) {
    AubrySet out;
    out.tol_used = tol;
    double best = kBig;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < h.n(); ++i) {
        const double d = h.at(i, i);
        if (d <= tol) out.nodes.push_back(i);
        if (d < best) {
            best = d;
            best_i = i;
        }
    }
    if (out.nodes.empty()) {
        // the projected Aubry set is nonempty; fall back to the argmin diagonal
        out.fallback = true;
        for (std::size_t i = 0; i < h.n(); ++i)
            if (h.at(i, i) == best) out.nodes.push_back(i);
        (void)best_i;
    }
    return out;
}

ActionKernel barrier_via_aubry(const ActionKernel& S, const AubrySet& aubry) {
    if (aubry.nodes.empty()) throw InputError("barrier_via_aubry: empty Aubry set");
    const std::size_t n = S.n();
    ActionKernel out(S.grid);
    out.t = S.t;
    out.c_used = S.c_used;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            double* row = &out.values[x * n];
            for (const std::size_t z : aubry.nodes) {
                const double sxz = S.at(x, z);
                if (sxz >= kBigSnap) continue;
                const double* srow = &S.values[z * n];
                for (std::size_t y = 0; y < n; ++y) {
                    const double cand = sat_add(sxz, srow[y]);
                    if (cand < row[y]) row[y] = cand;
                }
            }
        }
    });
    return out;
}

std::vector<GridFunction> lax_oleinik_evolve(const GridFunction& u0,
                                             const LagrangianTable& L, double c,
                                             double tau, int steps) {
    if (steps < 0) throw InputError("lax_oleinik_evolve: steps must be >= 0");
    if (u0.grid != L.grid()) throw InputError("lax_oleinik_evolve: grid mismatch");
    const ActionKernel P = one_step_kernel(L, c, tau);
    const std::size_t n = P.n();

    std::vector<GridFunction> out;
    out.reserve(steps + 1);
    GridFunction u = u0;
    for (auto& v : u.values) v = minplus::quantize_entry(v);
    out.push_back(u);
    for (int k = 0; k < steps; ++k) {
        GridFunction next(u.grid, kBig);
        for (std::size_t y = 0; y < n; ++y) {
            const double uy = u[y];
            if (uy >= kBigSnap) continue;
            const double* row = &P.values[y * n];
            for (std::size_t x = 0; x < n; ++x) {
                const double cand = sat_add(uy, row[x]);
                if (cand < next[x]) next[x] = cand;
            }
        }
        u = std::move(next);
        out.push_back(u);
    }
    return out;
}

GridFunction uni_const_limit(const ActionKernel& h, const AubrySet& aubry) {
    if (aubry.nodes.empty()) throw InputError("uni_const_limit: empty Aubry set");
    GridFunction u(h.grid, kBig);
    for (const std::size_t z : aubry.nodes)
        for (std::size_t x = 0; x < h.n(); ++x)
            u[x] = std::min(u[x], h.at(z, x));
    return u;
}

BarrierBundle build_barrier_bundle(const LagrangianTable& L, double c, double tau,
                                   double t_max, double T0, double T1,
                                   double aubry_tol) {
    SemiDistanceResult sd = semi_distance(L, c, tau, t_max);
    PeierlsResult pb = peierls_barrier(L, c, tau, T0, T1);
    double tol = aubry_tol;
    if (tol <= 0) {
        // default: 5 x the observed scheme error on the S diagonal
        double diag_err = 0;
        for (std::size_t i = 0; i < sd.S.n(); ++i)
            diag_err = std::max(diag_err, std::abs(std::min(sd.S.at(i, i), 0.0)));
        double diag_min = kBig;
        for (std::size_t i = 0; i < pb.h.n(); ++i)
            diag_min = std::min(diag_min, pb.h.at(i, i));
        tol = std::max({5.0 * diag_err, 5.0 * diag_min, 1e-9});
    }
    AubrySet a = aubry_set(pb.h, tol);
    BarrierBundle out{std::move(sd.S), std::move(pb.h), std::move(a),
                      tol, sd.stabilization_gap, pb.drift};
    return out;
}

void write_kernel_csv(const ActionKernel& k, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open for write: " + path);
    char buf[64];
    for (std::size_t z = 0; z < k.n(); ++z)
        for (std::size_t x = 0; x < k.n(); ++x) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", z, x, k.at(z, x));
            f << buf;
        }
}

void write_kernel_wkk(const ActionKernel& k, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for write: " + path);
    f.write("WKK1", 4);
    const std::uint64_t rows = k.n(), cols = k.n();
    f.write(reinterpret_cast<const char*>(&rows), 8);
    f.write(reinterpret_cast<const char*>(&cols), 8);
    f.write(reinterpret_cast<const char*>(&k.t), 8);
    f.write(reinterpret_cast<const char*>(&k.c_used), 8);
    f.write(reinterpret_cast<const char*>(k.values.data()),
            static_cast<std::streamsize>(k.values.size() * 8));
}

ActionKernel read_kernel_wkk(const std::string& path, const PeriodicGrid& grid) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for read: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "WKK1", 4) != 0)
        throw InputError("bad kernel dump magic: " + path);
    std::uint64_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), 8);
    f.read(reinterpret_cast<char*>(&cols), 8);
    ActionKernel k(grid);
    if (rows != k.n() || cols != k.n())
        throw InputError("kernel dump size mismatch: " + path);
    f.read(reinterpret_cast<char*>(&k.t), 8);
    f.read(reinterpret_cast<char*>(&k.c_used), 8);
    f.read(reinterpret_cast<char*>(k.values.data()),
           static_cast<std::streamsize>(k.values.size() * 8));
    if (!f) throw InputError("truncated kernel dump: " + path);
    return k;
}

}  // namespace wkam
