#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "carleman/io.hpp"
#include "carleman/weights/field.hpp"

namespace carleman::weights {

/// (phi, phi~) on the closed time window [t_begin, t_end]; slab < 0 for a
/// global pair.
struct WeightPair {
    ScalarField phi;
    ScalarField phi_tilde;
    double t_begin = 0.0, t_end = 1.0;
    int slab = -1;
    bool time_dependent = false;

    const ScalarField& on(int sub) const { return sub == 1 ? phi : phi_tilde; }
};

struct ConditionReport {
    bool pass = false;
    double value = 0.0; ///< certified constant or worst residual
    Point witness{0.0, 0.0};
    int witness_subdomain = 1;
    double witness_time = 0.0;
};

/// Grid certification of the four weight conditions: (1) positivity,
/// (2) vanishing on Gamma_i, (3) gradient bound outside omega_i,
/// (4) matched conormal energy on S.
struct WeightCertification {
    ConditionReport positivity, boundary, gradient, interface;
    double gradient_bound_1 = 0.0, gradient_bound_2 = 0.0;
    bool pass() const { return positivity.pass && boundary.pass && gradient.pass && interface.pass; }
};

inline std::vector<double> certification_times(const WeightPair& pair, const Grid& g) {
    if (!pair.time_dependent) return {pair.t_begin};
    std::vector<double> ts{pair.t_begin};
    for (double t : g.t)
        if (t > pair.t_begin && t < pair.t_end) ts.push_back(t);
    ts.push_back(pair.t_end);
    return ts;
}

/// Interface gradients from fourth-order stencils of nodal values: five-point
/// one-sided in x, periodic central in y.
inline Vec2 grid_gradient_at_interface(const ScalarField& f, double t, const Grid& g, int sub, int j) {
    static constexpr double w[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
    int dir = sub == 1 ? -1 : 1;
    int i0 = g.interface_col(sub);
    double gx = 0.0;
    for (int m = 0; m < 5; ++m) gx += w[m] * f(t, g.node(sub, i0 + m * dir, j)).value;
    gx *= dir / (12.0 * g.hx);
    double gy = 0.0;
    if (g.dim == 2) {
        auto v = [&](int dj) { return f(t, g.node(sub, i0, ((j + dj) % g.ny + g.ny) % g.ny)).value; };
        gy = (v(-2) - 8.0 * v(-1) + 8.0 * v(1) - v(2)) / (12.0 * g.hy);
    }
    return {gx, gy};
}

inline WeightCertification verify_weight_conditions(const WeightPair& pair, const domain::DiffusionPair& diff,
                                                    const Grid& g, const domain::Region& omega1,
                                                    const domain::Region& omega2, bool grid_gradients = false) {
    WeightCertification rep;
    const double inf = std::numeric_limits<double>::infinity();
    rep.positivity.value = inf;
    rep.gradient.value = inf;
    rep.boundary.value = 0.0;
    rep.interface.value = 0.0;
    double gb[2] = {inf, inf};
    double gmax = 0.0;
    const auto times = certification_times(pair, g);
    for (double t : times) {
        for (int sub = 1; sub <= 2; ++sub) {
            const ScalarField& f = pair.on(sub);
            const domain::Region& w = sub == 1 ? omega1 : omega2;
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    Point p = g.node(sub, i, j);
                    FieldValue v = f(t, p);
                    bool on_boundary = i == 0 || i == g.cols(sub) - 1;
                    if (on_boundary) {
                        if (std::abs(v.value) > rep.boundary.value || rep.boundary.witness_time != rep.boundary.witness_time) {
                            rep.boundary.value = std::abs(v.value);
                            rep.boundary.witness = p;
                            rep.boundary.witness_subdomain = sub;
                            rep.boundary.witness_time = t;
                        }
                    } else if (v.value < rep.positivity.value) {
                        rep.positivity.value = v.value;
                        rep.positivity.witness = p;
                        rep.positivity.witness_subdomain = sub;
                        rep.positivity.witness_time = t;
                    }
                    double gn = norm(v.grad);
                    gmax = std::max(gmax, gn);
                    if (!w.contains(p, g.dim)) {
                        gb[sub - 1] = std::min(gb[sub - 1], gn);
                        if (gn < rep.gradient.value) {
                            rep.gradient.value = gn;
                            rep.gradient.witness = p;
                            rep.gradient.witness_subdomain = sub;
                            rep.gradient.witness_time = t;
                        }
                    }
                }
        }
        for (int j = 0; j < g.rows(); ++j) {
            Point p = g.node(1, g.interface_col(1), j);
            Vec2 g1 = grid_gradients ? grid_gradient_at_interface(pair.phi, t, g, 1, j) : pair.phi(t, p).grad;
            Vec2 g2 = grid_gradients ? grid_gradient_at_interface(pair.phi_tilde, t, g, 2, j) : pair.phi_tilde(t, p).grad;
            double q1 = diff.a(t, p).form(g1, g1);
            double q2 = diff.a_tilde(t, p).form(g2, g2);
            double scale = std::max({std::abs(q1), std::abs(q2), 1e-300});
            double res = std::abs(q1 - q2) / scale;
            if (res > rep.interface.value || (j == 0 && t == times.front())) {
                rep.interface.value = std::max(rep.interface.value, res);
                rep.interface.witness = p;
                rep.interface.witness_time = t;
            }
        }
    }
    rep.gradient_bound_1 = gb[0];
    rep.gradient_bound_2 = gb[1];
    rep.positivity.pass = rep.positivity.value > 0.0;
    rep.boundary.pass = rep.boundary.value <= 1e-12;
    rep.gradient.pass = rep.gradient.value > 1e-10 * gmax;
    rep.interface.pass = rep.interface.value <= (grid_gradients ? 1e-6 : 1e-8);
    return rep;
}

/// CSV dump of a pair at time t: subdomain, x, y, value, grad_x, grad_y.
inline void write_weight_csv(std::ostream& out, const WeightPair& pair, const Grid& g, double t) {
    out << "subdomain,x,y,value,grad_x,grad_y\n";
    for (int sub = 1; sub <= 2; ++sub)
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(sub); ++i) {
                Point p = g.node(sub, i, j);
                FieldValue v = pair.on(sub)(t, p);
                out << sub << ',' << io::fmt(p[0]) << ',' << io::fmt(p[1]) << ',' << io::fmt(v.value) << ','
                    << io::fmt(v.grad[0]) << ',' << io::fmt(v.grad[1]) << '\n';
            }
}

} // namespace carleman::weights
