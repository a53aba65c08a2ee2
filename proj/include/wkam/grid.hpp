#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "wkam/errors.hpp"

namespace wkam {

// A point or displacement on the unit torus T^d, d in {1,2}. The second
// component is ignored when dim == 1.
using Vec2 = std::array<double, 2>;

// Uniform periodic grid on [0,1)^dim with n_per_axis nodes per axis.
// Node ordering is row-major over axes: index = i1 * n + i2 in 2D.
class PeriodicGrid {
public:
    PeriodicGrid(int dim, int n_per_axis);

    int dim() const { return dim_; }
    int n_per_axis() const { return n_; }
    double spacing() const { return spacing_; }
    std::size_t node_count() const { return count_; }

    Vec2 node_coords(std::size_t index) const;
    std::array<int, 2> node_multi_index(std::size_t index) const;
    std::size_t index_of(int i1, int i2 = 0) const;  // indices taken mod n
    std::size_t neighbor(std::size_t index, int axis, int offset) const;

    bool operator==(const PeriodicGrid& o) const {
        return dim_ == o.dim_ && n_ == o.n_;
    }
    bool operator!=(const PeriodicGrid& o) const { return !(*this == o); }

private:
    int dim_;
    int n_;
    double spacing_;
    std::size_t count_;
};

// Real-valued function sampled at the grid nodes.
struct GridFunction {
    PeriodicGrid grid;
    std::vector<double> values;

    explicit GridFunction(const PeriodicGrid& g, double fill = 0.0)
        : grid(g), values(g.node_count(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    // Throws ModelError if any node holds a non-finite value.
    void validate_finite(const std::string& context) const;
};

// Displacement v with b = a + v (mod 1) per axis and each |v_k| <= 1/2.
// Antipodal ties (|v_k| = 1/2 exactly) are broken toward +1/2 so that
// downstream kernels are deterministic.
Vec2 wrap_displacement(const Vec2& a, const Vec2& b, const PeriodicGrid& grid);

// Torus distance induced by wrap_displacement.
double torus_distance(const Vec2& a, const Vec2& b, const PeriodicGrid& grid);

// Torus midpoint of the shortest a -> b segment: a + wrap(a,b)/2 mod 1.
Vec2 torus_midpoint(const Vec2& a, const Vec2& b, const PeriodicGrid& grid);

// One-sided difference pair along an axis with periodic wrap:
//   p_minus = (u_i - u_{i-1})/h,  p_plus = (u_{i+1} - u_i)/h.
std::pair<double, double> upwind_pair(const GridFunction& u, std::size_t node,
                                      int axis);

// max_i |u_i - v_i|. Throws InputError on grid mismatch.
double sup_norm_diff(const GridFunction& u, const GridFunction& v);

// max over nodes and axes of |one-sided difference|; a discrete Lipschitz
// estimate.
double lipschitz_estimate(const GridFunction& u);

// CSV round-trip: one row per node, columns x1[,x2],value, in node order.
void write_grid_function_csv(const GridFunction& u, const std::string& path);
GridFunction read_grid_function_csv(const std::string& path);
void write_grid_function_csv(const GridFunction& u, std::ostream& out);

}  // namespace wkam
