#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "carleman/domain/state.hpp"

namespace carleman::weights {

using domain::Grid;

struct FieldValue {
    double value = 0.0;
    Vec2 grad{0.0, 0.0};
};

/// Scalar field of (t, x) with its spatial gradient.
using ScalarField = std::function<FieldValue(double t, const Point& x)>;

/// C^2 step: 0 for u <= 0, 1 for u >= 1 (quintic smoothstep).
inline double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

inline double smoothstep_derivative(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

/// C^2 cutoff of a distance d: 1 for d <= inner, 0 for d >= outer.
struct Cutoff {
    double inner = 0.0, outer = 1.0;

    double operator()(double d) const { return 1.0 - smoothstep((d - inner) / (outer - inner)); }
    double derivative(double d) const { return -smoothstep_derivative((d - inner) / (outer - inner)) / (outer - inner); }
    /// 1 + max |chi'|, the C^1 norm used in slab counting.
    double c1_norm() const { return 1.0 + 1.875 / (outer - inner); }
};

/// Signed helper: distance from p to the boundary Gamma_sub of a strip
/// subdomain, with its gradient (piecewise constant in x).
struct BoundaryDistance {
    double value;
    Vec2 grad;
};

inline BoundaryDistance boundary_distance(const Grid& g, int sub, const Point& p) {
    double ds = p[0] - g.interface_x;
    if (sub == 1) {
        double dl = p[0] - g.spec.x0, dr = g.interface_x - p[0];
        return dl <= dr ? BoundaryDistance{dl, {1.0, 0.0}} : BoundaryDistance{dr, {-1.0, 0.0}};
    }
    double dl = ds, dr = g.spec.x1 - p[0];
    return dl <= dr ? BoundaryDistance{dl, {1.0, 0.0}} : BoundaryDistance{dr, {-1.0, 0.0}};
}

/// Whether p lies in the open subdomain.
inline bool inside(const Grid& g, int sub, const Point& p) {
    if (sub == 1) return p[0] > g.spec.x0 && p[0] < g.interface_x;
    return p[0] > g.interface_x && p[0] < g.spec.x1;
}

/// Wraps y into [y0, y1) for periodic strips.
inline Point wrap(const Grid& g, Point p) {
    if (g.dim == 2 && !(p[1] >= g.spec.y0 && p[1] < g.spec.y1)) {
        double H = g.spec.height();
        p[1] = g.spec.y0 + std::fmod(std::fmod(p[1] - g.spec.y0, H) + H, H);
    }
    return p;
}

/// Symmetric 2x2 Hessian of a field from central differences of its analytic gradient.
inline Mat2 hessian(const ScalarField& f, double t, const Point& x, int dim, double step) {
    Mat2 h;
    Vec2 gp = f(t, {x[0] + step, x[1]}).grad, gm = f(t, {x[0] - step, x[1]}).grad;
    h.a11 = (gp[0] - gm[0]) / (2.0 * step);
    double hxy = (gp[1] - gm[1]) / (2.0 * step);
    if (dim == 2) {
        Vec2 qp = f(t, {x[0], x[1] + step}).grad, qm = f(t, {x[0], x[1] - step}).grad;
        h.a22 = (qp[1] - qm[1]) / (2.0 * step);
        double hyx = (qp[0] - qm[0]) / (2.0 * step);
        h.a12 = h.a21 = 0.5 * (hxy + hyx);
    }
    return h;
}

struct CriticalPoint {
    Point x{0.0, 0.0};
    double grad_norm = 0.0;
    double hessian_det = 0.0;
    bool nondegenerate = true;
};

/// Largest |grad f| over the subdomain nodes at time t.
inline double max_gradient(const ScalarField& f, double t, const Grid& g, int sub) {
    double m = 0.0;
    for (int j = 0; j < g.rows(); ++j)
        for (int i = 0; i < g.cols(sub); ++i) m = std::max(m, norm(f(t, g.node(sub, i, j)).grad));
    return m;
}

/// Critical points of f inside the open subdomain: grid local minima of
/// |grad f| refined by (pseudo-)Newton on the analytic gradient. A point is
/// accepted when |grad f| < 1e-6 max|grad f|; it is degenerate when the
/// Hessian is numerically singular.
inline std::vector<CriticalPoint> find_critical_points(const ScalarField& f, double t, const Grid& g, int sub) {
    const int cols = g.cols(sub);
    const int rows = g.dim == 1 ? 1 : g.ny;
    std::vector<double> gn(static_cast<std::size_t>(cols * rows));
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < cols; ++i) gn[static_cast<std::size_t>(j * cols + i)] = norm(f(t, g.node(sub, i, j)).grad);
    const double gmax = *std::max_element(gn.begin(), gn.end());
    const double tol = 1e-6 * gmax;
    const double h = std::max(g.hx, g.hy);
    const double step = 1e-5 * h;
    std::vector<CriticalPoint> found;

    auto at = [&](int i, int j) {
        j = (j % rows + rows) % rows;
        return gn[static_cast<std::size_t>(j * cols + i)];
    };
    for (int j = 0; j < rows; ++j)
        for (int i = 1; i + 1 < cols; ++i) {
            double c = at(i, j);
            bool is_min = true;
            for (int dj = (g.dim == 1 ? 0 : -1); dj <= (g.dim == 1 ? 0 : 1) && is_min; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    if (di == 0 && dj == 0) continue;
                    double o = at(i + di, j + dj);
                    int jj = ((j + dj) % rows + rows) % rows;
                    // ties broken by linear index so plateaus yield a single candidate
                    if (o < c || (o == c && jj * cols + i + di < j * cols + i)) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;

            Point x = g.node(sub, i, j);
            Point start = x;
            Mat2 H;
            bool ok = true;
            for (int it = 0; it < 60; ++it) {
                Vec2 gr = f(t, x).grad;
                if (norm(gr) < 1e-3 * tol) break;
                H = hessian(f, t, x, g.dim, step);
                Vec2 dx{0.0, 0.0};
                if (g.dim == 1) {
                    if (std::abs(H.a11) < 1e-300) { ok = false; break; }
                    dx[0] = -gr[0] / H.a11;
                } else {
                    // pseudo-inverse through the symmetric eigen-decomposition
                    double tr = H.a11 + H.a22, det = H.a11 * H.a22 - H.a12 * H.a12;
                    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
                    double l[2] = {0.5 * tr + disc, 0.5 * tr - disc};
                    double lmax = std::max(std::abs(l[0]), std::abs(l[1]));
                    for (double lk : l) {
                        Vec2 v = std::abs(H.a12) > 1e-14 * lmax ? Vec2{lk - H.a22, H.a12}
                                 : (std::abs(H.a11 - lk) <= std::abs(H.a22 - lk) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0});
                        double nv = norm(v);
                        v = {v[0] / nv, v[1] / nv};
                        if (std::abs(lk) <= 1e-9 * lmax) continue;
                        double c0 = dot(v, gr) / lk;
                        dx[0] -= c0 * v[0];
                        dx[1] -= c0 * v[1];
                    }
                    if (std::abs(l[0] - l[1]) < 1e-14 * lmax) dx = {-gr[0] / l[0], -gr[1] / l[0]};
                }
                x = {x[0] + dx[0], x[1] + dx[1]};
                if (!inside(g, sub, wrap(g, x))) {
                    ok = false;
                    break;
                }
                if (norm(dx) < 1e-15 * h) break;
            }
            if (!ok) continue;
            x = wrap(g, x);
            Vec2 dist{x[0] - start[0], g.dim == 2 ? std::remainder(x[1] - start[1], g.spec.height()) : 0.0};
            if (!inside(g, sub, x) || norm(dist) > 2.0 * h) continue;
            double gnorm = norm(f(t, x).grad);
            if (gnorm >= tol) continue;
            H = hessian(f, t, x, g.dim, step);
            double det = g.dim == 1 ? H.a11 : H.a11 * H.a22 - H.a12 * H.a21;
            double scale = std::max({std::abs(H.a11), std::abs(H.a12), std::abs(H.a22)});
            double dscale = g.dim == 1 ? scale : scale * scale;
            bool dup = false;
            for (const auto& c : found) {
                Vec2 d{x[0] - c.x[0], g.dim == 2 ? std::remainder(x[1] - c.x[1], g.spec.height()) : 0.0};
                if (norm(d) < 0.5 * h) dup = true;
            }
            if (dup) continue;
            found.push_back({x, gnorm, det, std::abs(det) > 1e-6 * dscale});
        }
    return found;
}

} // namespace carleman::weights
