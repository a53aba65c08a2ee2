#include "wkam/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wkam/parallel.hpp"

namespace wkam {

namespace {
int g_threads = 0;
}

int parallel_threads() noexcept { return g_threads; }
void set_parallel_threads(int n) noexcept { g_threads = n < 0 ? 0 : n; }

PeriodicGrid::PeriodicGrid(int dim, int n_per_axis) : dim_(dim), n_(n_per_axis) {
    if (dim != 1 && dim != 2)
        throw InputError("PeriodicGrid: dim must be 1 or 2, got " + std::to_string(dim));
    if (n_per_axis < 2)
        throw InputError("PeriodicGrid: need at least 2 nodes per axis");
    spacing_ = 1.0 / n_;
    count_ = 1;
    for (int k = 0; k < dim_; ++k) count_ *= static_cast<std::size_t>(n_);
}

Vec2 PeriodicGrid::node_coords(std::size_t index) const {
    const auto mi = node_multi_index(index);
    return {mi[0] * spacing_, mi[1] * spacing_};
}

std::array<int, 2> PeriodicGrid::node_multi_index(std::size_t index) const {
    if (dim_ == 1) return {static_cast<int>(index), 0};
    return {static_cast<int>(index / static_cast<std::size_t>(n_)),
            static_cast<int>(index % static_cast<std::size_t>(n_))};
}

std::size_t PeriodicGrid::index_of(int i1, int i2) const {
    auto wrap = [this](int i) {
        int r = i % n_;
        return r < 0 ? r + n_ : r;
    };
    if (dim_ == 1) return static_cast<std::size_t>(wrap(i1));
    return static_cast<std::size_t>(wrap(i1)) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(wrap(i2));
}

std::size_t PeriodicGrid::neighbor(std::size_t index, int axis, int offset) const {
    if (axis < 0 || axis >= dim_)
        throw InputError("PeriodicGrid::neighbor: axis out of range");
    auto mi = node_multi_index(index);
    mi[axis] += offset;
    return index_of(mi[0], mi[1]);
}

void GridFunction::validate_finite(const std::string& context) const {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw ModelError(context + ": non-finite value at node " + std::to_string(i));
}

namespace {
// Maps d to the representative of d mod 1 in (-1/2, 1/2], ties to +1/2.
double wrap_axis(double d) {
    double v = d - std::ceil(d - 0.5);
    if (v == -0.5) v = 0.5;  // guards against -0.5 from rounding of ceil
    return v;
}
}  // namespace

Vec2 wrap_displacement(const Vec2& a, const Vec2& b, const PeriodicGrid& grid) {
    Vec2 v{0.0, 0.0};
    for (int k = 0; k < grid.dim(); ++k) v[k] = wrap_axis(b[k] - a[k]);
    return v;
}

double torus_distance(const Vec2& a, const Vec2& b, const PeriodicGrid& grid) {
    const Vec2 v = wrap_displacement(a, b, grid);
    return grid.dim() == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

Vec2 torus_midpoint(const Vec2& a, const Vec2& b, const PeriodicGrid& grid) {
    const Vec2 v = wrap_displacement(a, b, grid);
    Vec2 m{0.0, 0.0};
    for (int k = 0; k < grid.dim(); ++k) {
        double x = a[k] + 0.5 * v[k];
        x -= std::floor(x);
        m[k] = x;
    }
    return m;
}

std::pair<double, double> upwind_pair(const GridFunction& u, std::size_t node, int axis) {
    const PeriodicGrid& g = u.grid;
    if (node >= g.node_count()) throw InputError("upwind_pair: node out of range");
    if (axis < 0 || axis >= g.dim()) throw InputError("upwind_pair: axis out of range");
    const double h = g.spacing();
    const double um = u[g.neighbor(node, axis, -1)];
    const double up = u[g.neighbor(node, axis, +1)];
    const double uc = u[node];
    return {(uc - um) / h, (up - uc) / h};
}

double sup_norm_diff(const GridFunction& u, const GridFunction& v) {
    if (u.grid != v.grid) throw InputError("sup_norm_diff: grid mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        m = std::max(m, std::abs(u[i] - v[i]));
    return m;
}

double lipschitz_estimate(const GridFunction& u) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        for (int axis = 0; axis < u.grid.dim(); ++axis) {
            const auto [pm, pp] = upwind_pair(u, i, axis);
            m = std::max({m, std::abs(pm), std::abs(pp)});
        }
    return m;
}

void write_grid_function_csv(const GridFunction& u, std::ostream& out) {
    char buf[64];
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec2 x = u.grid.node_coords(i);
        std::snprintf(buf, sizeof buf, "%.17g", x[0]);
        out << buf;
        if (u.grid.dim() == 2) {
            std::snprintf(buf, sizeof buf, "%.17g", x[1]);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", u[i]);
        out << ',' << buf << '\n';
    }
}

void write_grid_function_csv(const GridFunction& u, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open for write: " + path);
    write_grid_function_csv(u, f);
}

GridFunction read_grid_function_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open for read: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) cols.push_back(std::stod(field));
        rows.push_back(std::move(cols));
    }
    if (rows.empty()) throw InputError("empty grid-function csv: " + path);
    const int dim = static_cast<int>(rows[0].size()) - 1;
    if (dim != 1 && dim != 2)
        throw InputError("grid-function csv must have 2 or 3 columns: " + path);
    const double n_real = std::pow(static_cast<double>(rows.size()), 1.0 / dim);
    const int n = static_cast<int>(std::lround(n_real));
    PeriodicGrid g(dim, n);
    if (g.node_count() != rows.size())
        throw InputError("grid-function csv row count is not n^dim: " + path);
    GridFunction u(g);
    for (std::size_t i = 0; i < rows.size(); ++i) u[i] = rows[i].back();
    return u;
}

}  // namespace wkam
