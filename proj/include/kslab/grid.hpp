#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kslab/errors.hpp"

namespace kslab {

/// Cell-centered mesh on [0, R] for radially symmetric fields integrated
/// against the measure omega_N r^{N-1} dr. Cell i spans [faces[i], faces[i+1]]
/// with its unknown at the interval midpoint, so no value sits at r = 0.
struct RadialGrid {
    int dim = 3;
    double radius = 1.0;
    std::size_t n_cells = 0;
    double omega = 0.0;              ///< surface measure of the unit sphere
    std::vector<double> faces;       ///< n_cells + 1 nodes spanning [0, R]
    std::vector<double> centers;     ///< midpoints, strictly inside (0, R)
    std::vector<double> volumes;     ///< omega * (x_{i+1}^N - x_i^N) / N
    std::vector<double> face_area;   ///< r^{N-1} at the n_cells - 1 interior faces
    std::vector<double> center_gap;  ///< spacing between adjacent centers

    double ball_volume() const { return omega * std::pow(radius, dim) / dim; }
};

inline double unit_sphere_measure(int N) {
    return N * std::pow(M_PI, 0.5 * N) / std::tgamma(0.5 * N + 1.0);
}

/// Builds a grid whose cell widths grow outward by the factor 1/ratio, so
/// ratio < 1 concentrates resolution at the origin and ratio = 1 is uniform.
inline RadialGrid make_radial_grid(int N, double R, std::size_t n_cells,
                                   double ratio = 1.0) {
    if (N < 1) throw std::invalid_argument("make_radial_grid: dimension must be >= 1");
    if (!(R > 0.0)) throw std::invalid_argument("make_radial_grid: radius must be > 0");
    if (n_cells < 2) throw std::invalid_argument("make_radial_grid: need at least 2 cells");
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("make_radial_grid: refinement ratio must be in (0, 1]");

    RadialGrid g;
    g.dim = N;
    g.radius = R;
    g.n_cells = n_cells;
    g.omega = unit_sphere_measure(N);
    g.faces.resize(n_cells + 1);
    g.faces[0] = 0.0;
    if (ratio == 1.0) {
        const double h = R / double(n_cells);
        for (std::size_t i = 1; i <= n_cells; ++i) g.faces[i] = double(i) * h;
    } else {
        const double growth = 1.0 / ratio;
        const double w0 = R * (growth - 1.0) / (std::pow(growth, double(n_cells)) - 1.0);
        double w = w0;
        for (std::size_t i = 1; i <= n_cells; ++i) {
            g.faces[i] = g.faces[i - 1] + w;
            w *= growth;
        }
    }
    g.faces[n_cells] = R;

    g.centers.resize(n_cells);
    g.volumes.resize(n_cells);
    double vol_sum = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
        g.centers[i] = 0.5 * (g.faces[i] + g.faces[i + 1]);
        g.volumes[i] =
            g.omega * (std::pow(g.faces[i + 1], N) - std::pow(g.faces[i], N)) / N;
        vol_sum += g.volumes[i];
    }
    if (std::abs(vol_sum - g.ball_volume()) > 1e-12 * g.ball_volume())
        throw NumericError("make_radial_grid: cell volumes do not sum to the ball volume");

    g.face_area.resize(n_cells - 1);
    g.center_gap.resize(n_cells - 1);
    for (std::size_t i = 0; i + 1 < n_cells; ++i) {
        g.face_area[i] = std::pow(g.faces[i + 1], N - 1);
        g.center_gap[i] = g.centers[i + 1] - g.centers[i];
    }
    return g;
}

/// Per-cell values bound to the grid they live on.
struct RadialField {
    const RadialGrid* grid = nullptr;
    std::vector<double> values;

    RadialField() = default;
    RadialField(const RadialGrid& g, double fill)
        : grid(&g), values(g.n_cells, fill) {}
    RadialField(const RadialGrid& g, std::vector<double> v)
        : grid(&g), values(std::move(v)) {
        if (values.size() != g.n_cells)
            throw std::invalid_argument("RadialField: value count != n_cells");
    }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

inline void require_same_grid(const RadialField& a, const RadialField& b) {
    if (a.grid == nullptr || a.grid != b.grid)
        throw std::invalid_argument("fields live on different grids");
}

inline void require_grid(const RadialField& f) {
    if (f.grid == nullptr || f.values.size() != f.grid->n_cells)
        throw std::invalid_argument("field is not bound to a grid");
}

/// Midpoint-rule integral over the ball, exact for piecewise-constant data.
inline double integrate(const RadialField& f) {
    require_grid(f);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f.values[i] * f.grid->volumes[i];
    return acc;
}

inline double lp_norm(const RadialField& f, double p) {
    if (!(p >= 1.0)) throw std::domain_error("lp_norm: p must be >= 1");
    require_grid(f);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += std::pow(std::abs(f.values[i]), p) * f.grid->volumes[i];
    return std::pow(acc, 1.0 / p);
}

/// Two-point difference quotients at faces; the r = 0 and r = R faces carry 0
/// by radial symmetry and the no-flux boundary contract.
inline std::vector<double> radial_derivative(const RadialField& f) {
    require_grid(f);
    const RadialGrid& g = *f.grid;
    std::vector<double> df(g.n_cells + 1, 0.0);
    for (std::size_t i = 0; i + 1 < g.n_cells; ++i)
        df[i + 1] = (f.values[i + 1] - f.values[i]) / g.center_gap[i];
    return df;
}

inline std::string format_double17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_field_csv(std::ostream& os, const RadialField& f) {
    require_grid(f);
    os << "r,value\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << format_double17(f.grid->centers[i]) << ','
           << format_double17(f.values[i]) << '\n';
}

} // namespace kslab
