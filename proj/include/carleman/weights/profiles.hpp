#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "carleman/weights/field.hpp"

namespace carleman::weights {

/// f(x) = scale (x - a)(b - x) exp(kappa (x - a)) on [a, b]; positive inside,
/// zero at both ends, single critical point at the prescribed vertex.
struct Profile1D {
    double a = 0.0, b = 1.0, kappa = 0.0, scale = 1.0;

    static Profile1D with_vertex(double a, double b, double vertex, double scale = 1.0) {
        require(vertex > a && vertex < b, ErrorKind::precondition, "profile vertex must lie strictly inside (a, b)");
        return {a, b, 1.0 / (b - vertex) - 1.0 / (vertex - a), scale};
    }

    double value(double x) const { return scale * (x - a) * (b - x) * std::exp(kappa * (x - a)); }
    double d1(double x) const {
        double q = (x - a) * (b - x), q1 = (b - x) - (x - a);
        return scale * (q1 + kappa * q) * std::exp(kappa * (x - a));
    }
    double d2(double x) const {
        double q = (x - a) * (b - x), q1 = (b - x) - (x - a);
        return scale * (-2.0 + 2.0 * kappa * q1 + kappa * kappa * q) * std::exp(kappa * (x - a));
    }
};

/// m(y) = 1 + amplitude cos(2 pi (y - center) / period); 0 <= amplitude < 1.
struct Modulation {
    double amplitude = 0.0, center = 0.5, period = 1.0;

    double value(double y) const { return 1.0 + amplitude * std::cos(2.0 * std::numbers::pi * (y - center) / period); }
    double d1(double y) const {
        double w = 2.0 * std::numbers::pi / period;
        return -amplitude * w * std::sin(w * (y - center));
    }
};

/// Product field X(x) m(y) (1D: X(x)).
inline ScalarField product_field(const Profile1D& X, const Modulation& m, int dim) {
    if (dim == 1)
        return [X](double, const Point& p) { return FieldValue{X.value(p[0]), {X.d1(p[0]), 0.0}}; };
    return [X, m](double, const Point& p) {
        double mv = m.value(p[1]);
        return FieldValue{X.value(p[0]) * mv, {X.d1(p[0]) * mv, X.value(p[0]) * m.d1(p[1])}};
    };
}

/// Pointwise product of two fields.
inline ScalarField multiply(ScalarField f, ScalarField g) {
    return [f = std::move(f), g = std::move(g)](double t, const Point& x) {
        FieldValue a = f(t, x), b = g(t, x);
        return FieldValue{a.value * b.value,
                          {a.grad[0] * b.value + a.value * b.grad[0], a.grad[1] * b.value + a.value * b.grad[1]}};
    };
}

/// Scaling that makes xi = varsigma * xi_hat satisfy the interface identity
/// sum a xi_i xi_j = sum a_tilde phi~_i phi~_j on S.
struct InterfaceScaling {
    ScalarField varsigma;
    double min_at_interface = 0.0;
    double max_at_interface = 0.0;
};

/// varsigma_S(t, y) = sqrt(Q~/Q) evaluated on S at height y. Off S the
/// interface value is carried along x and, when blend_width > 0, blended to 1
/// beyond distance epsilon2 from S over blend_width.
inline InterfaceScaling interface_scaling(const domain::DiffusionPair& diff, const ScalarField& xi_hat,
                                          const ScalarField& phi_tilde, const Grid& g, double epsilon2 = 0.0,
                                          double blend_width = 0.0) {
    const double xs = g.interface_x;
    auto on_s = [diff, xi_hat, phi_tilde, xs](double t, double y) {
        Point p{xs, y};
        Vec2 gh = xi_hat(t, p).grad, gt = phi_tilde(t, p).grad;
        double q = diff.a(t, p).form(gh, gh);
        double qt = diff.a_tilde(t, p).form(gt, gt);
        return std::pair<double, double>{q, qt};
    };

    InterfaceScaling res;
    res.min_at_interface = std::numeric_limits<double>::infinity();
    const int levels = diff.time_dependent ? g.nt + 1 : 1;
    for (int k = 0; k < levels; ++k)
        for (int j = 0; j < g.rows(); ++j) {
            double t = g.t[static_cast<std::size_t>(k)];
            auto [q, qt] = on_s(t, g.y[static_cast<std::size_t>(j)]);
            require(q > 1e-14, ErrorKind::degenerate_normal,
                    "normal derivative of xi_hat vanishes on the interface at y = " +
                        std::to_string(g.y[static_cast<std::size_t>(j)]));
            require(qt > 1e-14, ErrorKind::degenerate_normal,
                    "normal derivative of phi_tilde vanishes on the interface at y = " +
                        std::to_string(g.y[static_cast<std::size_t>(j)]));
            double s = std::sqrt(qt / q);
            res.min_at_interface = std::min(res.min_at_interface, s);
            res.max_at_interface = std::max(res.max_at_interface, s);
        }

    const int dim = g.dim;
    const double hy = 1e-6 * (dim == 2 ? g.spec.height() : 1.0);
    Cutoff chi{epsilon2, epsilon2 + blend_width};
    res.varsigma = [on_s, dim, hy, chi, blend_width, xs](double t, const Point& p) {
        auto value_at = [&](double y) {
            auto [q, qt] = on_s(t, y);
            return std::sqrt(qt / q);
        };
        double s = value_at(p[1]);
        double sy = dim == 2 ? (value_at(p[1] + hy) - value_at(p[1] - hy)) / (2.0 * hy) : 0.0;
        if (blend_width <= 0.0) return FieldValue{s, {0.0, sy}};
        double d = xs - p[0];
        double c = chi(d), cd = chi.derivative(d);
        return FieldValue{1.0 + (s - 1.0) * c, {-(s - 1.0) * cd, c * sy}};
    };
    return res;
}

} // namespace carleman::weights
