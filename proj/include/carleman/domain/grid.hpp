#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "carleman/domain/geometry.hpp"

namespace carleman::domain {

enum class NodeLabel { omega1, omega2, interface, outer_boundary };

/// Interface-aligned lattice. Subdomain 1 owns columns 0..s, subdomain 2 owns
/// columns s..nx of the global x lattice, so the interface column s is stored
/// twice (one trace slot per side). In 2D the y lattice has ny + 1 rows and
/// row ny is the periodic image of row 0.
struct Grid {
    GeometrySpec spec;
    int dim = 1;
    int nx = 0, ny = 0, nt = 0;
    int s = 0; ///< global column index of the interface
    double hx = 0.0, hy = 0.0, dt = 0.0;
    double interface_x = 0.0; ///< snapped interface location
    double snap_distance = 0.0;
    std::vector<double> x, y, t;

    int rows() const { return dim == 1 ? 1 : ny + 1; }
    int cols(int sub) const { return sub == 1 ? s + 1 : nx - s + 1; }
    int size(int sub) const { return rows() * cols(sub); }
    int global_col(int sub, int i) const { return sub == 1 ? i : s + i; }
    int local_col(int sub, int gi) const { return sub == 1 ? gi : gi - s; }
    int index(int sub, int i, int j) const { return j * cols(sub) + i; }
    /// Local column of the interface within a subdomain.
    int interface_col(int sub) const { return sub == 1 ? s : 0; }
    int outer_col(int sub) const { return sub == 1 ? 0 : nx - s; }

    Point node(int sub, int i, int j) const {
        return {x[static_cast<std::size_t>(global_col(sub, i))], dim == 1 ? 0.0 : y[static_cast<std::size_t>(j)]};
    }

    NodeLabel label(int sub, int i, int) const {
        if (i == interface_col(sub)) return NodeLabel::interface;
        if (i == outer_col(sub)) return NodeLabel::outer_boundary;
        return sub == 1 ? NodeLabel::omega1 : NodeLabel::omega2;
    }

    /// Number of interface node pairs on the lattice.
    int interface_count() const { return rows(); }
    /// Number of distinct interface nodes (the periodic image row excluded).
    int interface_unique() const { return dim == 1 ? 1 : ny; }

    /// Nodal quadrature weight of lattice node (i, j) within a subdomain:
    /// trapezoid in x on the subdomain, periodic in y (image row weight 0).
    double node_weight(int sub, int i, int j) const {
        double wx = (i == 0 || i == cols(sub) - 1) ? 0.5 * hx : hx;
        if (dim == 1) return wx;
        return j == ny ? 0.0 : wx * hy;
    }

    /// Quadrature weight of interface node j along S.
    double interface_weight(int j) const {
        if (dim == 1) return 1.0;
        return j == ny ? 0.0 : hy;
    }
};

/// Builds the lattice. `nx` counts cells across the full x extent; the
/// interface is snapped to the nearest node.
inline Grid build_grid(const GeometrySpec& spec, int nx, int nt, int ny = -1) {
    validate(spec);
    require(nx >= 8, ErrorKind::precondition, "build_grid needs nx >= 8 (got " + std::to_string(nx) + ")");
    require(nt >= 1, ErrorKind::precondition, "build_grid needs nt >= 1");
    require(spec.shape != InterfaceShape::circle, ErrorKind::alignment,
            "circle interfaces cannot be aligned with the structured lattice");
    Grid g;
    g.spec = spec;
    g.dim = spec.dimension;
    g.nx = nx;
    g.nt = nt;
    g.hx = spec.width() / nx;
    double pos = (spec.interface_x - spec.x0) / g.hx;
    g.s = static_cast<int>(std::lround(pos));
    g.interface_x = spec.x0 + g.s * g.hx;
    g.snap_distance = std::abs(g.interface_x - spec.interface_x);
    double max_snap = spec.max_snap < 0.0 ? 0.5 * g.hx : spec.max_snap;
    require(g.snap_distance <= max_snap * (1.0 + 1e-12), ErrorKind::alignment,
            "interface at x = " + std::to_string(spec.interface_x) + " needs a snap of " +
                std::to_string(g.snap_distance) + " > allowed " + std::to_string(max_snap));
    require(g.s >= 1 && g.s <= nx - 1, ErrorKind::alignment, "interface snapped onto the outer boundary");
    g.spec.interface_x = g.interface_x;
    g.x.resize(static_cast<std::size_t>(nx + 1));
    for (int i = 0; i <= nx; ++i) g.x[static_cast<std::size_t>(i)] = spec.x0 + i * g.hx;
    g.x[static_cast<std::size_t>(nx)] = spec.x1;
    if (g.dim == 2) {
        g.ny = ny > 0 ? ny : nx;
        require(g.ny >= 4, ErrorKind::precondition, "build_grid needs ny >= 4");
        g.hy = spec.height() / g.ny;
        g.y.resize(static_cast<std::size_t>(g.ny + 1));
        for (int j = 0; j <= g.ny; ++j) g.y[static_cast<std::size_t>(j)] = spec.y0 + j * g.hy;
    } else {
        g.y = {0.0};
    }
    g.dt = spec.T / nt;
    g.t.resize(static_cast<std::size_t>(nt + 1));
    for (int k = 0; k <= nt; ++k) g.t[static_cast<std::size_t>(k)] = k * g.dt;
    g.t[static_cast<std::size_t>(nt)] = spec.T;
    return g;
}

/// Grid-level geometric checks of the observation sets.
struct GeometryCheck {
    bool omega_meets_both = false;
    bool omega_i_inside = false;
    bool interface_clear = false;
    bool pass() const { return omega_meets_both && omega_i_inside && interface_clear; }
};

inline GeometryCheck check_geometry(const Grid& g) {
    GeometryCheck c;
    const auto& sp = g.spec;
    bool hit[2] = {false, false};
    bool inside = true;
    double margin = std::max(g.hx, g.hy);
    for (int sub = 1; sub <= 2; ++sub) {
        const Region& wi = sub == 1 ? sp.omega1 : sp.omega2;
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(sub); ++i) {
                Point p = g.node(sub, i, j);
                if (sp.omega.contains(p, g.dim) && g.label(sub, i, j) != NodeLabel::interface) hit[sub - 1] = true;
                if (!wi.contains(p, g.dim)) continue;
                // a node of omega_i must sit at least one cell inside omega and off the interface
                bool ok = sp.side(p) == sub && sp.distance_to_interface(p) >= margin;
                for (double dx : {-margin, margin}) {
                    Point q{p[0] + dx, p[1]};
                    ok = ok && sp.omega.contains(q, g.dim);
                }
                inside = inside && ok;
            }
    }
    c.omega_meets_both = hit[0] && hit[1];
    c.omega_i_inside = inside;
    c.interface_clear = std::min(g.interface_x - sp.x0, sp.x1 - g.interface_x) >= g.hx;
    return c;
}

} // namespace carleman::domain
