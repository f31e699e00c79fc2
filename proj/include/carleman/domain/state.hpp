#pragma once

#include <functional>
#include <vector>

#include "carleman/domain/coefficients.hpp"

namespace carleman::domain {

/// Nodal values on both subdomains at one time level; the interface column
/// appears in both (trace from each side).
struct PiecewiseField {
    std::vector<double> v1, v2;

    PiecewiseField() = default;
    explicit PiecewiseField(const Grid& g)
        : v1(static_cast<std::size_t>(g.size(1)), 0.0), v2(static_cast<std::size_t>(g.size(2)), 0.0) {}

    std::vector<double>& on(int sub) { return sub == 1 ? v1 : v2; }
    const std::vector<double>& on(int sub) const { return sub == 1 ? v1 : v2; }
    double at(const Grid& g, int sub, int i, int j) const { return on(sub)[static_cast<std::size_t>(g.index(sub, i, j))]; }
    double& at(const Grid& g, int sub, int i, int j) { return on(sub)[static_cast<std::size_t>(g.index(sub, i, j))]; }
};

/// Samples a function of (t, x, subdomain) on the grid at time t.
inline PiecewiseField sample(const Grid& g, double t, const std::function<double(int, double, const Point&)>& f) {
    PiecewiseField r(g);
    for (int sub = 1; sub <= 2; ++sub)
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(sub); ++i) r.at(g, sub, i, j) = f(sub, t, g.node(sub, i, j));
    return r;
}

/// Interface series: one value per interface row and time level.
using InterfaceSeries = std::vector<std::vector<double>>;

inline InterfaceSeries sample_interface(const Grid& g, const std::function<double(double, const Point&)>& f) {
    InterfaceSeries s(static_cast<std::size_t>(g.nt + 1), std::vector<double>(static_cast<std::size_t>(g.rows())));
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.rows(); ++j)
            s[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                f(g.t[static_cast<std::size_t>(k)], g.node(1, g.s, j));
    return s;
}

/// Space-time piecewise solution with its data.
struct TransmissionState {
    Grid grid;
    DiffusionPair diffusion;
    std::vector<PiecewiseField> y; ///< y[k] at t_k
    std::vector<PiecewiseField> f; ///< sources f_1, f_2 at t_k
    InterfaceSeries beta1, beta2;

    const PiecewiseField& at(int k) const { return y[static_cast<std::size_t>(k)]; }
};

/// Zero state with zero data on the grid.
inline TransmissionState zero_state(const Grid& g, const DiffusionPair& d) {
    TransmissionState s;
    s.grid = g;
    s.diffusion = d;
    s.y.assign(static_cast<std::size_t>(g.nt + 1), PiecewiseField(g));
    s.f = s.y;
    s.beta1.assign(static_cast<std::size_t>(g.nt + 1), std::vector<double>(static_cast<std::size_t>(g.rows()), 0.0));
    s.beta2 = s.beta1;
    return s;
}

/// One-sided second-order x-derivative at local column i toward the interior
/// of the subdomain (direction +1 into increasing x, -1 into decreasing x).
inline double one_sided_dx(const Grid& g, const PiecewiseField& u, int sub, int i, int j, int direction) {
    double u0 = u.at(g, sub, i, j);
    double u1 = u.at(g, sub, i + direction, j);
    double u2 = u.at(g, sub, i + 2 * direction, j);
    return direction * (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * g.hx);
}

/// Centered periodic y-derivative at lattice node (i, j).
inline double periodic_dy(const Grid& g, const PiecewiseField& u, int sub, int i, int j) {
    if (g.dim == 1) return 0.0;
    int jp = j + 1 >= g.ny ? j + 1 - g.ny : j + 1;
    int jm = j - 1 < 0 ? j - 1 + g.ny : j - 1;
    return (u.at(g, sub, i, jp) - u.at(g, sub, i, jm)) / (2.0 * g.hy);
}

struct TraceJump {
    std::vector<double> dirichlet_jump;
    std::vector<double> flux_jump;
};

/// y1 - y2 and the conormal flux difference a grad y1 . nu - a_tilde grad y2 . nu
/// on S at time level k, with nu = (1, 0).
inline TraceJump interface_trace_jump(const TransmissionState& st, int k) {
    const Grid& g = st.grid;
    require(g.cols(1) >= 3 && g.cols(2) >= 3, ErrorKind::resolution,
            "one-sided interface stencils need at least 3 nodes per side");
    require(k >= 0 && k <= g.nt, ErrorKind::precondition, "time index out of range");
    const PiecewiseField& u = st.at(k);
    const double t = g.t[static_cast<std::size_t>(k)];
    TraceJump r;
    for (int j = 0; j < g.rows(); ++j) {
        int i1 = g.interface_col(1), i2 = g.interface_col(2);
        Point p = g.node(1, i1, j);
        r.dirichlet_jump.push_back(u.at(g, 1, i1, j) - u.at(g, 2, i2, j));
        Vec2 g1{one_sided_dx(g, u, 1, i1, j, -1), periodic_dy(g, u, 1, i1, j)};
        Vec2 g2{one_sided_dx(g, u, 2, i2, j, +1), periodic_dy(g, u, 2, i2, j)};
        Vec2 nu{1.0, 0.0};
        r.flux_jump.push_back(st.diffusion.a(t, p).form(g1, nu) - st.diffusion.a_tilde(t, p).form(g2, nu));
    }
    return r;
}

} // namespace carleman::domain
