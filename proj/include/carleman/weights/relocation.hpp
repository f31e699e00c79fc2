#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <vector>

#include "carleman/weights/field.hpp"

namespace carleman::weights {

/// Straight leg of a routing curve, in lifted coordinates (y not wrapped).
struct Segment {
    Point a, b;
};

inline Point closest_on_segment(const Segment& s, const Point& p) {
    Vec2 d{s.b[0] - s.a[0], s.b[1] - s.a[1]};
    double len2 = dot(d, d);
    double u = len2 > 0.0 ? std::clamp(((p[0] - s.a[0]) * d[0] + (p[1] - s.a[1]) * d[1]) / len2, 0.0, 1.0) : 0.0;
    return {s.a[0] + u * d[0], s.a[1] + u * d[1]};
}

inline double point_segment_distance(const Segment& s, const Point& p) {
    Point c = closest_on_segment(s, p);
    return std::hypot(p[0] - c[0], p[1] - c[1]);
}

inline double segment_distance(const Segment& s, const Segment& r) {
    auto cross = [](const Point& o, const Point& a, const Point& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    double d1 = cross(s.a, s.b, r.a), d2 = cross(s.a, s.b, r.b);
    double d3 = cross(r.a, r.b, s.a), d4 = cross(r.a, r.b, s.b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
    return std::min({point_segment_distance(s, r.a), point_segment_distance(s, r.b), point_segment_distance(r, s.a),
                     point_segment_distance(r, s.b)});
}

/// Periodic-aware distances on a strip grid (images in y when dim == 2).
struct StripMetric {
    int dim = 1;
    double period = 0.0;

    std::vector<double> shifts() const {
        if (dim == 1) return {0.0};
        return {-period, 0.0, period};
    }
    /// Image of p closest to segment s, and its distance.
    std::pair<Point, double> nearest_image(const Segment& s, const Point& p) const {
        Point best = p;
        double bd = std::numeric_limits<double>::infinity();
        for (double k : shifts()) {
            Point q{p[0], p[1] + k};
            double d = point_segment_distance(s, q);
            if (d < bd) {
                bd = d;
                best = q;
            }
        }
        return {best, bd};
    }
    double distance(const Segment& s, const Point& p) const { return nearest_image(s, p).second; }
    double distance(const Segment& s, const Segment& r) const {
        double d = std::numeric_limits<double>::infinity();
        for (double k : shifts()) d = std::min(d, segment_distance(s, {{r.a[0], r.a[1] + k}, {r.b[0], r.b[1] + k}}));
        return d;
    }
};

/// Vector field V = varrho * eta supported in a capsule around one leg;
/// varrho = 1 within r_in of the leg, 0 beyond r_out, C^2 in between.
struct Tube {
    Segment leg;
    double r_in = 0.0, r_out = 0.0;

    Vec2 eta() const { return {leg.b[0] - leg.a[0], leg.b[1] - leg.a[1]}; }

    void field(const Point& x, Vec2& v, Mat2& dv) const {
        Point c = closest_on_segment(leg, x);
        Vec2 r{x[0] - c[0], x[1] - c[1]};
        double d = norm(r);
        Cutoff bump{r_in, r_out};
        double b = bump(d);
        Vec2 e = eta();
        v = {b * e[0], b * e[1]};
        Vec2 gb{0.0, 0.0};
        if (d > 0.0) {
            double db = bump.derivative(d);
            gb = {db * r[0] / d, db * r[1] / d};
        }
        dv = {e[0] * gb[0], e[0] * gb[1], e[1] * gb[0], e[1] * gb[1]};
    }
};

inline Mat2 matmul(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22, a.a21 * b.a11 + a.a22 * b.a21,
            a.a21 * b.a12 + a.a22 * b.a22};
}

/// Composition of unit-time flows of the tubes, applied in list order,
/// integrated by classical RK4 together with the variational equation.
struct FlowMap {
    std::vector<Tube> tubes;
    StripMetric metric;
    int steps = 100;

    struct Image {
        Point x;
        Mat2 jacobian = Mat2::identity();
    };

    Image apply(const Point& x0) const {
        Image img{x0, Mat2::identity()};
        for (const Tube& tube : tubes) {
            auto [x, d] = metric.nearest_image(tube.leg, img.x);
            if (d >= tube.r_out) continue;
            const double shift = x[1] - img.x[1];
            Mat2 J = Mat2::identity();
            const double h = 1.0 / steps;
            auto rhs = [&tube](const Point& p, const Mat2& j, Vec2& dp, Mat2& dj) {
                Mat2 dv;
                tube.field(p, dp, dv);
                dj = matmul(dv, j);
            };
            for (int n = 0; n < steps; ++n) {
                Vec2 k1, k2, k3, k4;
                Mat2 m1, m2, m3, m4;
                rhs(x, J, k1, m1);
                rhs({x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]}, J + (0.5 * h) * m1, k2, m2);
                rhs({x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]}, J + (0.5 * h) * m2, k3, m3);
                rhs({x[0] + h * k3[0], x[1] + h * k3[1]}, J + h * m3, k4, m4);
                x = {x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                     x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
                J = J + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
            }
            img.x = {x[0], x[1] - shift};
            img.jacobian = matmul(J, img.jacobian);
        }
        return img;
    }
};

struct Route {
    Point target, critical;
    std::vector<Segment> legs;
};

struct Routing {
    std::vector<Route> routes;
    double separation = 0.0;
    double r_in = 0.0, r_out = 0.0;
};

/// Greedy routing of each target to its critical point: a straight leg when
/// it keeps min_sep from everything already placed, the fixed points, the
/// remaining endpoints, and the subdomain boundary; otherwise a single
/// waypoint detour. Tube radii follow from the achieved separation; the
/// tubes also stay out of the band of width `keepout` along the boundary.
inline Routing route_curves(const std::vector<Point>& critical, const std::vector<Point>& targets,
                            const std::vector<Point>& fixed, const Grid& g, int sub, double min_sep,
                            double keepout = 0.0) {
    require(critical.size() == targets.size(), ErrorKind::precondition, "each critical point needs one target");
    StripMetric metric{g.dim, g.dim == 2 ? g.spec.height() : 0.0};
    Routing out;
    const std::size_t m = critical.size();

    auto boundary_clearance = [&](const Segment& s) {
        double lo = sub == 1 ? g.spec.x0 : g.interface_x;
        double hi = sub == 1 ? g.interface_x : g.spec.x1;
        return std::min(std::min(s.a[0], s.b[0]) - lo, hi - std::max(s.a[0], s.b[0])) - keepout;
    };
    auto clearance = [&](const Segment& s, std::size_t self) {
        double c = boundary_clearance(s);
        for (const Point& p : fixed) c = std::min(c, metric.distance(s, p));
        for (std::size_t j = 0; j < m; ++j) {
            if (j == self) continue;
            c = std::min({c, metric.distance(s, critical[j]), metric.distance(s, targets[j])});
        }
        for (const Route& r : out.routes)
            for (const Segment& l : r.legs) c = std::min(c, metric.distance(s, l));
        return c;
    };

    for (std::size_t i = 0; i < m; ++i) {
        Point q = targets[i];
        // lift the critical point to the image nearest the target
        Point p = critical[i];
        if (g.dim == 2) {
            double best = std::numeric_limits<double>::infinity();
            for (double k : metric.shifts()) {
                Point c{critical[i][0], critical[i][1] + k};
                double d = std::hypot(c[0] - q[0], c[1] - q[1]);
                if (d < best) {
                    best = d;
                    p = c;
                }
            }
        }
        Route route{q, critical[i], {{q, p}}};
        if (clearance(route.legs[0], i) < min_sep) {
            bool placed = false;
            if (g.dim == 2) {
                Point mid{0.5 * (q[0] + p[0]), 0.5 * (q[1] + p[1])};
                double len = std::hypot(p[0] - q[0], p[1] - q[1]);
                for (int ring = 1; ring <= 3 && !placed; ++ring)
                    for (int k = 0; k < 16 && !placed; ++k) {
                        double a = 2.0 * std::numbers::pi * k / 16.0;
                        Point w{mid[0] + 0.5 * ring * len * std::cos(a), mid[1] + 0.5 * ring * len * std::sin(a)};
                        Segment s1{q, w}, s2{w, p};
                        if (clearance(s1, i) >= min_sep && clearance(s2, i) >= min_sep) {
                            route.legs = {s1, s2};
                            placed = true;
                        }
                    }
            }
            require(placed, ErrorKind::routing,
                    "no disjoint curve from target (" + std::to_string(q[0]) + ", " + std::to_string(q[1]) +
                        ") to critical point (" + std::to_string(critical[i][0]) + ", " +
                        std::to_string(critical[i][1]) + ")");
        }
        out.routes.push_back(route);
    }

    // separation between distinct curves and to the fixed points
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        for (const Segment& l : out.routes[i].legs) {
            for (const Point& p : fixed) sep = std::min(sep, metric.distance(l, p));
            for (std::size_t j = i + 1; j < m; ++j)
                for (const Segment& r : out.routes[j].legs) sep = std::min(sep, metric.distance(l, r));
            sep = std::min(sep, 3.0 * boundary_clearance(l));
        }
    }
    out.separation = sep;
    out.r_out = sep / 3.0;
    out.r_in = 0.5 * out.r_out;
    return out;
}

/// Optimal assignment of critical points to targets by total length
/// (exhaustive for small m, which also avoids crossing straight legs).
inline std::vector<std::size_t> assign_targets(const std::vector<Point>& critical, const std::vector<Point>& targets,
                                               const StripMetric& metric) {
    std::vector<std::size_t> perm(targets.size());
    std::iota(perm.begin(), perm.end(), 0);
    auto dist = [&](const Point& a, const Point& b) {
        double d = std::numeric_limits<double>::infinity();
        for (double k : metric.shifts()) d = std::min(d, std::hypot(a[0] - b[0], a[1] + k - b[1]));
        return d;
    };
    std::vector<std::size_t> best;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < critical.size(); ++i) c += dist(critical[i], targets[perm[i]]);
        if (c < best_cost - 1e-12) {
            best_cost = c;
            best.assign(perm.begin(), perm.begin() + static_cast<long>(critical.size()));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

struct Relocation {
    ScalarField phi;
    FlowMap flow;
    Routing routing;
    std::vector<CriticalPoint> critical; ///< critical points of rho
    std::vector<Point> moved;            ///< those routed into omega_i
};

/// phi = rho o g, where g maps every target to one critical point of rho
/// lying outside omega_i. Critical points already inside omega_i stay put.
inline Relocation relocate_critical_points(const ScalarField& rho, const std::vector<Point>& targets,
                                           const domain::Region& omega_i, const Grid& g, int sub, double t = 0.0,
                                           double keepout = 0.0, double min_sep_cells = 3.0) {
    Relocation res;
    res.critical = find_critical_points(rho, t, g, sub);
    std::vector<Point> outside, fixed;
    for (const auto& c : res.critical) (omega_i.contains(c.x, g.dim) ? fixed : outside).push_back(c.x);
    for (const Point& q : targets) {
        require(omega_i.contains(q, g.dim), ErrorKind::precondition,
                "relocation target (" + std::to_string(q[0]) + ", " + std::to_string(q[1]) + ") lies outside omega_i");
    }
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            require(std::hypot(targets[i][0] - targets[j][0], targets[i][1] - targets[j][1]) > 0.0,
                    ErrorKind::precondition, "relocation targets must be pairwise distinct");
    res.flow.metric = {g.dim, g.dim == 2 ? g.spec.height() : 0.0};
    if (outside.empty()) {
        res.phi = rho;
        return res;
    }
    require(targets.size() >= outside.size(), ErrorKind::precondition,
            std::to_string(outside.size()) + " critical points need relocation but only " +
                std::to_string(targets.size()) + " targets were given");
    auto perm = assign_targets(outside, targets, res.flow.metric);
    std::vector<Point> chosen;
    for (std::size_t i = 0; i < outside.size(); ++i) chosen.push_back(targets[perm[i]]);
    const double h = std::max(g.hx, g.hy);
    res.routing = route_curves(outside, chosen, fixed, g, sub, min_sep_cells * h, keepout);
    require(res.routing.r_out >= h, ErrorKind::routing,
            "routing curves are closer than three cells; tubes cannot be kept disjoint");
    for (const Route& r : res.routing.routes)
        for (const Segment& l : r.legs) res.flow.tubes.push_back({l, res.routing.r_in, res.routing.r_out});
    res.moved = chosen;

    FlowMap flow = res.flow;
    const Grid grid = g;
    res.phi = [rho, flow, grid, sub](double tt, const Point& x) {
        auto img = flow.apply(x);
        Point y = wrap(grid, img.x);
        if (!(y[0] >= (sub == 1 ? grid.spec.x0 : grid.interface_x) && y[0] <= (sub == 1 ? grid.interface_x : grid.spec.x1)))
            throw Error(ErrorKind::integration, "relocation flow left the subdomain");
        FieldValue r = rho(tt, y);
        const Mat2& J = img.jacobian;
        return FieldValue{r.value, {J.a11 * r.grad[0] + J.a21 * r.grad[1], J.a12 * r.grad[0] + J.a22 * r.grad[1]}};
    };
    return res;
}

/// Morse surrogate: rho = xi + (1 - chi) eps_M (w . x), with the periodic
/// direction tilted through sin(2 pi y / H) H / (2 pi) so the field stays periodic.
inline ScalarField morse_tilt(const ScalarField& xi, Vec2 w, double eps_m, Cutoff chi, const Grid& g, int sub) {
    const Grid grid = g;
    return [xi, w, eps_m, chi, grid, sub](double t, const Point& x) {
        FieldValue f = xi(t, x);
        auto bd = boundary_distance(grid, sub, x);
        double c = chi(bd.value), cd = chi.derivative(bd.value);
        double lin = w[0] * x[0];
        Vec2 glin{w[0], 0.0};
        if (grid.dim == 2) {
            double H = grid.spec.height(), k = 2.0 * std::numbers::pi / H;
            lin += w[1] * std::sin(k * (x[1] - grid.spec.y0)) / k;
            glin[1] = w[1] * std::cos(k * (x[1] - grid.spec.y0));
        }
        double one_minus = 1.0 - c;
        f.value += eps_m * one_minus * lin;
        f.grad[0] += eps_m * (one_minus * glin[0] - cd * bd.grad[0] * lin);
        f.grad[1] += eps_m * (one_minus * glin[1] - cd * bd.grad[1] * lin);
        return f;
    };
}

} // namespace carleman::weights
