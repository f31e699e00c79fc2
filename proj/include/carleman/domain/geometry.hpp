#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "carleman/error.hpp"
#include "carleman/linalg.hpp"

namespace carleman::domain {

enum class InterfaceShape { point, vertical_line, circle };

/// Open axis-aligned box; in 1D only the x-range is used.
struct Box {
    double x0 = 0.0, x1 = 0.0;
    double y0 = -std::numeric_limits<double>::infinity();
    double y1 = std::numeric_limits<double>::infinity();

    bool contains(const Point& p, int dim) const {
        bool in_x = p[0] > x0 && p[0] < x1;
        return dim == 1 ? in_x : in_x && p[1] > y0 && p[1] < y1;
    }

    /// Closed box grown by `margin` contains p.
    bool contains_closed(const Point& p, int dim, double margin) const {
        bool in_x = p[0] >= x0 - margin && p[0] <= x1 + margin;
        return dim == 1 ? in_x : in_x && p[1] >= y0 - margin && p[1] <= y1 + margin;
    }

    Point center(int dim) const {
        if (dim == 1) return {0.5 * (x0 + x1), 0.0};
        return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
    }
};

/// Open region given as a union of boxes.
struct Region {
    std::vector<Box> boxes;

    bool contains(const Point& p, int dim) const {
        return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(p, dim); });
    }
    bool empty() const { return boxes.empty(); }
};

/// Transmission configuration: Omega split by the interface S into Omega_1
/// (the side touching the outer boundary on the left, or outside the circle)
/// and Omega_2. 2D vertical-line geometries are periodic in y, so S is a
/// closed curve away from the outer boundary x = x0, x = x1.
struct GeometrySpec {
    int dimension = 1;
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;
    InterfaceShape shape = InterfaceShape::point;
    double interface_x = 0.5;
    Point circle_center{0.5, 0.5};
    double circle_radius = 0.25;
    Region omega, omega1, omega2;
    double T = 1.0;
    /// Largest tolerated snap of the interface onto the lattice; negative
    /// means half a cell (always satisfiable).
    double max_snap = -1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }

    /// 1 or 2: the subdomain containing p (interface points report 1).
    int side(const Point& p) const {
        if (shape == InterfaceShape::circle) {
            double r = std::hypot(p[0] - circle_center[0], p[1] - circle_center[1]);
            return r < circle_radius ? 2 : 1;
        }
        return p[0] <= interface_x ? 1 : 2;
    }

    double distance_to_interface(const Point& p) const {
        if (shape == InterfaceShape::circle)
            return std::abs(std::hypot(p[0] - circle_center[0], p[1] - circle_center[1]) - circle_radius);
        return std::abs(p[0] - interface_x);
    }

    double distance_to_outer(const Point& p) const {
        double d = std::min(p[0] - x0, x1 - p[0]);
        if (dimension == 2 && shape == InterfaceShape::circle) d = std::min({d, p[1] - y0, y1 - p[1]});
        return d;
    }

    /// Distance from p to Gamma_i, the full boundary of Omega_i.
    double distance_to_boundary(int subdomain, const Point& p) const {
        double ds = distance_to_interface(p);
        if (shape == InterfaceShape::circle) return subdomain == 2 ? ds : std::min(ds, distance_to_outer(p));
        double dout = subdomain == 1 ? p[0] - x0 : x1 - p[0];
        return std::min(ds, dout);
    }

    /// Outward unit normal of Omega_1 at an interface point.
    Vec2 interface_normal(const Point& p) const {
        if (shape == InterfaceShape::circle) {
            double dx = p[0] - circle_center[0], dy = p[1] - circle_center[1];
            double r = std::hypot(dx, dy);
            return {-dx / r, -dy / r};
        }
        return {1.0, 0.0};
    }

    /// Length (2D) or counting measure (1D) of S.
    double interface_measure() const {
        if (dimension == 1) return 1.0;
        if (shape == InterfaceShape::circle) return 2.0 * std::numbers::pi * circle_radius;
        return height();
    }

    /// Uniform arclength samples of S.
    std::vector<Point> interface_samples(int count) const {
        std::vector<Point> pts;
        if (dimension == 1) {
            pts.push_back({interface_x, 0.0});
            return pts;
        }
        pts.reserve(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            double s = static_cast<double>(k) / count;
            if (shape == InterfaceShape::circle) {
                double a = 2.0 * std::numbers::pi * s;
                pts.push_back({circle_center[0] + circle_radius * std::cos(a),
                               circle_center[1] + circle_radius * std::sin(a)});
            } else {
                pts.push_back({interface_x, y0 + s * height()});
            }
        }
        return pts;
    }
};

/// Basic well-formedness independent of any grid; throws config errors.
inline void validate(const GeometrySpec& g) {
    require(g.dimension == 1 || g.dimension == 2, ErrorKind::config, "dimension must be 1 or 2");
    require(g.x1 > g.x0, ErrorKind::config, "extent must satisfy x0 < x1");
    require(g.T > 0.0, ErrorKind::config, "final time T must be positive");
    if (g.dimension == 1) {
        require(g.shape == InterfaceShape::point, ErrorKind::config, "1D geometries use a point interface");
        require(g.interface_x > g.x0 && g.interface_x < g.x1, ErrorKind::config,
                "interface x_S = " + std::to_string(g.interface_x) + " lies outside the domain (" +
                    std::to_string(g.x0) + ", " + std::to_string(g.x1) + ")");
    } else {
        require(g.y1 > g.y0, ErrorKind::config, "extent must satisfy y0 < y1");
        require(g.shape != InterfaceShape::point, ErrorKind::config, "2D geometries need a line or circle interface");
        if (g.shape == InterfaceShape::vertical_line) {
            require(g.interface_x > g.x0 && g.interface_x < g.x1, ErrorKind::config,
                    "interface line x = " + std::to_string(g.interface_x) + " lies outside the domain");
        } else {
            const auto& c = g.circle_center;
            require(g.circle_radius > 0.0, ErrorKind::config, "circle radius must be positive");
            require(c[0] - g.circle_radius > g.x0 && c[0] + g.circle_radius < g.x1 &&
                        c[1] - g.circle_radius > g.y0 && c[1] + g.circle_radius < g.y1,
                    ErrorKind::config, "interface circle must lie inside the rectangle");
        }
    }
    require(!g.omega.empty(), ErrorKind::config, "observation region omega is empty");
    require(!g.omega1.empty() && !g.omega2.empty(), ErrorKind::config, "omega1 and omega2 must be nonempty");
}

} // namespace carleman::domain
