#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "carleman/weights/certify.hpp"

namespace carleman::weights {

/// Weights for estimates supported near S: psi_1 = phi r on the Omega_1
/// side, psi_2 = phi~ r~ on the Omega_2 side, r = (a~ grad phi~ . grad phi~)^{1/2},
/// r~ = (a grad phi . grad phi)^{1/2}.
struct LocalWeights {
    ScalarField r, r_tilde;
    ScalarField phi_r, phi_tilde_r_tilde;
    double epsilon0 = 0.0;
    double epsilon1 = 0.0;
    double c0 = 0.0;
    double interface_gradient = 0.0; ///< min over S of the two gradient norms
    double matching_residual = 0.0;  ///< relative, max over S

    /// psi on the given side.
    const ScalarField& psi(int sub) const { return sub == 1 ? phi_r : phi_tilde_r_tilde; }
};

namespace detail {

/// Quadratic Lagrange extrapolation across S of a field living on the far
/// side: nodes x_S, x_S + s h, x_S + 2 s h with s = +1 when the native side is
/// to the right. Values and nodal gradients are extrapolated alike, so the
/// extension agrees with the native field at x = x_S.
inline ScalarField extend_across(const ScalarField& f, double xs, double h, double s) {
    return [f, xs, h, s](double t, const Point& p) {
        if ((p[0] - xs) * s >= 0.0) return f(t, p);
        double u = (p[0] - xs) / (s * h);
        double l0 = 0.5 * (u - 1.0) * (u - 2.0), l1 = -u * (u - 2.0), l2 = 0.5 * u * (u - 1.0);
        FieldValue a = f(t, {xs, p[1]}), b = f(t, {xs + s * h, p[1]}), c = f(t, {xs + 2.0 * s * h, p[1]});
        return FieldValue{l0 * a.value + l1 * b.value + l2 * c.value,
                          {l0 * a.grad[0] + l1 * b.grad[0] + l2 * c.grad[0],
                           l0 * a.grad[1] + l1 * b.grad[1] + l2 * c.grad[1]}};
    };
}

/// sqrt(sum b^ij f_i f_j) with its gradient by central differences.
inline ScalarField energy_root(const ScalarField& f, const domain::TensorField& b, int dim, double delta) {
    auto value = [f, b](double t, const Point& p) {
        Vec2 g = f(t, p).grad;
        return std::sqrt(std::max(0.0, b(t, p).form(g, g)));
    };
    return [value, dim, delta](double t, const Point& p) {
        double v = value(t, p);
        double gx = (value(t, {p[0] + delta, p[1]}) - value(t, {p[0] - delta, p[1]})) / (2.0 * delta);
        double gy = dim == 2 ? (value(t, {p[0], p[1] + delta}) - value(t, {p[0], p[1] - delta})) / (2.0 * delta) : 0.0;
        return FieldValue{v, {gx, gy}};
    };
}

} // namespace detail

/// Builds r, r~, phi r, phi~ r~ on O_{epsilon0}(S), certifies the matching
/// identity on S and picks the largest radius epsilon1 (a multiple of the cell
/// size) on which both gradients exceed c0 = half their smallest value on S.
inline LocalWeights local_r_weights(const WeightPair& pair, const domain::DiffusionPair& diff, const Grid& g,
                                    double epsilon0) {
    require(epsilon0 > 0.0, ErrorKind::precondition, "epsilon0 must be positive");
    const double xs = g.interface_x, h = g.hx;
    const double delta = 1e-6;
    ScalarField phi_ext = detail::extend_across(pair.phi, xs, h, -1.0);
    ScalarField phit_ext = detail::extend_across(pair.phi_tilde, xs, h, 1.0);

    LocalWeights lw;
    lw.epsilon0 = epsilon0;
    lw.r = detail::energy_root(phit_ext, diff.a_tilde, g.dim, delta);
    lw.r_tilde = detail::energy_root(phi_ext, diff.a, g.dim, delta);
    lw.phi_r = multiply(pair.phi, lw.r);
    lw.phi_tilde_r_tilde = multiply(pair.phi_tilde, lw.r_tilde);

    std::vector<double> ts{0.0};
    if (pair.time_dependent) ts = certification_times(pair, g);

    // matching and gradient scale on S
    double gmin = std::numeric_limits<double>::infinity();
    for (double t : ts)
        for (int j = 0; j < g.rows(); ++j) {
            Point p = g.node(1, g.interface_col(1), j);
            Vec2 g1 = lw.phi_r(t, p).grad, g2 = lw.phi_tilde_r_tilde(t, p).grad;
            double q1 = diff.a(t, p).form(g1, g1), q2 = diff.a_tilde(t, p).form(g2, g2);
            double scale = std::max({std::abs(q1), std::abs(q2), 1e-300});
            lw.matching_residual = std::max(lw.matching_residual, std::abs(q1 - q2) / scale);
            gmin = std::min({gmin, norm(g1), norm(g2)});
        }
    lw.interface_gradient = gmin;
    lw.c0 = 0.5 * gmin;

    // grow the radius cell by cell
    const int kmax = static_cast<int>(std::floor(epsilon0 / h + 1e-9));
    int kbest = 0;
    for (int k = 1; k <= kmax; ++k) {
        bool ok = true;
        for (int sub = 1; sub <= 2 && ok; ++sub) {
            int i = g.interface_col(sub) + (sub == 1 ? -k : k);
            if (i < 0 || i >= g.cols(sub)) {
                ok = false;
                break;
            }
            for (double t : ts)
                for (int j = 0; j < g.rows() && ok; ++j)
                    ok = norm(lw.psi(sub)(t, g.node(sub, i, j)).grad) > lw.c0;
        }
        if (!ok) break;
        kbest = k;
    }
    lw.epsilon1 = kbest * h;
    require(kbest >= 2, ErrorKind::neighborhood_too_thin,
            "gradient bound holds only on O_eps(S) with eps = " + std::to_string(lw.epsilon1) + " < 2 cells");
    return lw;
}

} // namespace carleman::weights
