#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "carleman/weights/field.hpp"

namespace carleman::weights {

/// t_l = l T / L, l = 0..L.
struct SlabPartition {
    int L = 1;
    double T = 1.0;
    double bound = 0.0;   ///< min(c1/2, c2/(2 |chi|_C1))
    double modulus = 0.0; ///< achieved C^1 modulus over the worst window

    double t(int l) const { return l == L ? T : l * T / L; }
    std::vector<double> times() const {
        std::vector<double> r;
        for (int l = 0; l <= L; ++l) r.push_back(t(l));
        return r;
    }
};

struct SlabConstants {
    double c1 = 0.0; ///< min xi away from O_{delta1/2}(Gamma_1)
    double c2 = 0.0; ///< min |grad xi| on O_{delta1}(Gamma_1)
};

inline std::vector<double> window_samples(const Grid& g, double ta, double tb) {
    std::vector<double> ts{ta};
    for (double t : g.t)
        if (t > ta && t < tb) ts.push_back(t);
    ts.push_back(tb);
    return ts;
}

/// c1 and c2 over the Omega_1 nodes and all time levels.
inline SlabConstants slab_constants(const ScalarField& xi, const Grid& g, double delta1, bool time_dependent) {
    SlabConstants c{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const int levels = time_dependent ? g.nt + 1 : 1;
    for (int k = 0; k < levels; ++k)
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(1); ++i) {
                Point p = g.node(1, i, j);
                FieldValue f = xi(g.t[static_cast<std::size_t>(k)], p);
                double d = boundary_distance(g, 1, p).value;
                if (d > 0.5 * delta1 && i > 0 && i < g.cols(1) - 1) c.c1 = std::min(c.c1, f.value);
                if (d < delta1) c.c2 = std::min(c.c2, norm(f.grad));
            }
    return c;
}

/// sup over t, s in [ta, tb] of |xi(t) - xi(s)|_{C^1}, sampled at the window
/// ends and the interior time levels, nodewise ranges.
inline double c1_modulus(const ScalarField& xi, const Grid& g, double ta, double tb) {
    auto ts = window_samples(g, ta, tb);
    double mv = 0.0, mg = 0.0;
    for (int j = 0; j < g.rows(); ++j)
        for (int i = 0; i < g.cols(1); ++i) {
            Point p = g.node(1, i, j);
            double vlo = std::numeric_limits<double>::infinity(), vhi = -vlo;
            double gx[2] = {vlo, vhi}, gy[2] = {vlo, vhi};
            for (double t : ts) {
                FieldValue f = xi(t, p);
                vlo = std::min(vlo, f.value);
                vhi = std::max(vhi, f.value);
                gx[0] = std::min(gx[0], f.grad[0]);
                gx[1] = std::max(gx[1], f.grad[0]);
                gy[0] = std::min(gy[0], f.grad[1]);
                gy[1] = std::max(gy[1], f.grad[1]);
            }
            mv = std::max(mv, vhi - vlo);
            mg = std::max(mg, std::hypot(gx[1] - gx[0], gy[1] - gy[0]));
        }
    return mv + mg;
}

/// Smallest L such that every window of length T/L has C^1 modulus below
/// min(c1/2, c2/(2 |chi|_C1)).
inline SlabPartition pick_slab_count(const ScalarField& xi, double chi_c1_norm, double c1, double c2, const Grid& g) {
    SlabPartition part;
    part.T = g.spec.T;
    part.bound = std::min(0.5 * c1, 0.5 * c2 / chi_c1_norm);
    require(std::isfinite(part.bound) && part.bound > 0.0, ErrorKind::resolution,
            "slab bound min(c1/2, c2/(2|chi|)) is not positive (c1 = " + std::to_string(c1) +
                ", c2 = " + std::to_string(c2) + ")");
    for (int L = 1; L <= g.nt; ++L) {
        double worst = 0.0;
        for (int l = 0; l < L && worst < part.bound; ++l)
            worst = std::max(worst, c1_modulus(xi, g, l * part.T / L, (l + 1) * part.T / L));
        if (worst < part.bound) {
            part.L = L;
            part.modulus = worst;
            return part;
        }
    }
    throw Error(ErrorKind::resolution, "slab bound unreachable at the time-grid resolution");
}

/// rho^l(t, x) = xi(t_l, x) + chi(x) (xi(t, x) - xi(t_l, x)), chi a cutoff in
/// the distance to Gamma_1.
inline ScalarField slab_rho(const ScalarField& xi, double t_l, Cutoff chi, const Grid& g) {
    const Grid grid = g;
    return [xi, t_l, chi, grid](double t, const Point& x) {
        FieldValue base = xi(t_l, x), cur = xi(t, x);
        auto bd = boundary_distance(grid, 1, x);
        double c = chi(bd.value), cd = chi.derivative(bd.value);
        double diff = cur.value - base.value;
        return FieldValue{base.value + c * diff,
                          {base.grad[0] + c * (cur.grad[0] - base.grad[0]) + cd * bd.grad[0] * diff,
                           base.grad[1] + c * (cur.grad[1] - base.grad[1]) + cd * bd.grad[1] * diff}};
    };
}

} // namespace carleman::weights
