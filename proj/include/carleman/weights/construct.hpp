#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "carleman/weights/certify.hpp"
#include "carleman/weights/profiles.hpp"
#include "carleman/weights/relocation.hpp"
#include "carleman/weights/slabs.hpp"
#include "carleman/weights/theta.hpp"

namespace carleman::weights {

struct WeightOptions {
    double modulation = 0.3;         ///< y-modulation amplitude (2D)
    std::vector<Point> targets1;     ///< relocation targets in omega_1 (empty: automatic)
    std::vector<Point> targets2;     ///< relocation targets in omega_2 (empty: automatic)
    int slab_override = 0;           ///< forces L when positive
    std::uint64_t seed = 1;          ///< Morse tilt direction
    double epsilon2 = 0.0;           ///< varsigma blend start
    double blend_width = 0.0;        ///< varsigma blend width (0: none)
    double min_sep_cells = 3.0;
};

/// phi~ together with its relocation record (identity in 1D).
struct TildePhi {
    ScalarField phi;
    Relocation relocation;
};

struct WeightConstruction {
    ScalarField phi_tilde, xi_hat, xi;
    InterfaceScaling scaling;
    double delta1 = 0.0;
    Cutoff chi;
    bool tilted = false;
    double eps_m = 0.0;
    SlabConstants constants;
    SlabPartition partition;
    Relocation relocation1, relocation2;
    WeightPair global;
    std::vector<WeightPair> slabs;
};

namespace detail {

inline const domain::Box& first_box(const domain::Region& r, const char* name) {
    require(!r.empty(), ErrorKind::config, std::string(name) + " is empty");
    return r.boxes.front();
}

/// Grid nodes of region r lying in the open subdomain.
inline int count_nodes(const Grid& g, int sub, const domain::Region& r) {
    int n = 0;
    for (int j = 0; j < g.rows(); ++j)
        for (int i = 1; i + 1 < g.cols(sub); ++i) n += r.contains(g.node(sub, i, j), g.dim) ? 1 : 0;
    return n;
}

/// Nearest point of the box shrunk by 25% on each side.
inline Point clamp_into(const domain::Box& b, const Point& p, int dim) {
    double mx = 0.25 * (b.x1 - b.x0);
    Point q{std::clamp(p[0], b.x0 + mx, b.x1 - mx), p[1]};
    if (dim == 2) {
        double my = 0.25 * (b.y1 - b.y0);
        q[1] = std::clamp(p[1], b.y0 + my, b.y1 - my);
    }
    return q;
}

/// One target per critical point outside omega_i, in the closest box.
inline std::vector<Point> auto_targets(const std::vector<CriticalPoint>& crit, const domain::Region& omega_i,
                                       const Grid& g) {
    std::vector<Point> out;
    for (const auto& c : crit) {
        if (omega_i.contains(c.x, g.dim)) continue;
        Point best{};
        double bd = std::numeric_limits<double>::infinity();
        for (const auto& b : omega_i.boxes) {
            Point q = clamp_into(b, c.x, g.dim);
            double d = std::hypot(q[0] - c.x[0], q[1] - c.x[1]);
            if (d < bd) {
                bd = d;
                best = q;
            }
        }
        for (const Point& o : out)
            if (std::hypot(o[0] - best[0], o[1] - best[1]) < 1e-12) best[1] += 0.25 * (omega_i.boxes.front().y1 - best[1]);
        out.push_back(best);
    }
    return out;
}

inline double region_distance_to_boundary(const domain::Region& r, const Grid& g, int sub) {
    double lo = sub == 1 ? g.spec.x0 : g.interface_x, hi = sub == 1 ? g.interface_x : g.spec.x1;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : r.boxes) d = std::min({d, b.x0 - lo, hi - b.x1});
    return d;
}

/// sup of a field over the subdomain nodes at the given times.
inline double sup_over(const ScalarField& f, const Grid& g, int sub, const std::vector<double>& ts) {
    double m = -std::numeric_limits<double>::infinity();
    for (double t : ts)
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(sub); ++i) m = std::max(m, f(t, g.node(sub, i, j)).value);
    return m;
}

} // namespace detail

/// phi~ on Omega_2: a profile with its vertex at the centre of omega_2 (times
/// the y-modulation in 2D), then its remaining critical points are flowed into
/// omega_2.
inline TildePhi build_tilde_phi(const Grid& g, const domain::Region& omega2, const WeightOptions& opt = {}) {
    const auto& box = detail::first_box(omega2, "omega2");
    require(detail::count_nodes(g, 2, omega2) > 0, ErrorKind::resolution,
            "omega2 contains no interior grid node of Omega_2 at this resolution");
    Point c = box.center(g.dim);
    require(c[0] > g.interface_x && c[0] < g.spec.x1, ErrorKind::config, "omega2 must lie in Omega_2");
    Profile1D X = Profile1D::with_vertex(g.interface_x, g.spec.x1, c[0]);
    Modulation m{opt.modulation, g.dim == 2 ? c[1] : 0.0, g.dim == 2 ? g.spec.height() : 1.0};
    ScalarField base = product_field(X, m, g.dim);
    TildePhi out;
    auto targets = opt.targets2;
    if (targets.empty()) targets = detail::auto_targets(find_critical_points(base, 0.0, g, 2), omega2, g);
    out.relocation = relocate_critical_points(base, targets, omega2, g, 2, 0.0, 0.0, opt.min_sep_cells);
    out.phi = out.relocation.phi;
    return out;
}

/// Full pipeline: phi~, xi_hat, the interface scaling, Morse tilt when needed,
/// the slab partition and the relocated phi (globally and per slab).
inline WeightConstruction construct_weights(const Grid& g, const domain::DiffusionPair& diff,
                                            const WeightOptions& opt = {}) {
    const auto& sp = g.spec;
    WeightConstruction wc;
    TildePhi tp = build_tilde_phi(g, sp.omega2, opt);
    wc.phi_tilde = tp.phi;
    wc.relocation2 = tp.relocation;

    const auto& box1 = detail::first_box(sp.omega1, "omega1");
    require(detail::count_nodes(g, 1, sp.omega1) > 0, ErrorKind::resolution,
            "omega1 contains no interior grid node of Omega_1 at this resolution");
    double vx = g.dim == 1 ? box1.center(1)[0] : 0.5 * (sp.x0 + g.interface_x);
    Profile1D X = Profile1D::with_vertex(sp.x0, g.interface_x, vx);
    Modulation m{opt.modulation, g.dim == 2 ? detail::first_box(sp.omega2, "omega2").center(2)[1] : 0.0,
                 g.dim == 2 ? sp.height() : 1.0};
    wc.xi_hat = product_field(X, m, g.dim);
    wc.scaling = interface_scaling(diff, wc.xi_hat, wc.phi_tilde, g, opt.epsilon2, opt.blend_width);
    wc.xi = multiply(wc.scaling.varsigma, wc.xi_hat);

    // delta1 and the cutoff
    auto crit = find_critical_points(wc.xi, 0.0, g, 1);
    double dcrit = std::numeric_limits<double>::infinity();
    for (const auto& c : crit) dcrit = std::min(dcrit, boundary_distance(g, 1, c.x).value);
    const double h = std::max(g.hx, g.hy);
    wc.delta1 = std::min(dcrit, detail::region_distance_to_boundary(sp.omega1, g, 1)) - 2.0 * h;
    require(wc.delta1 > h, ErrorKind::resolution,
            "delta1 = " + std::to_string(wc.delta1) + " leaves no room between Gamma_1 and the critical set");
    wc.chi = Cutoff{0.5 * wc.delta1, wc.delta1};

    // Morse tilt for degenerate critical sets
    ScalarField xi = wc.xi;
    if (std::any_of(crit.begin(), crit.end(), [](const CriticalPoint& c) { return !c.nondegenerate; })) {
        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> nd;
        Vec2 w{nd(rng), g.dim == 2 ? nd(rng) : 0.0};
        double nw = norm(w);
        w = {w[0] / nw, w[1] / nw};
        double scale = max_gradient(wc.xi, 0.0, g, 1);
        bool done = false;
        for (double e = 1e-2; e >= 1e-6 && !done; e *= 0.1) {
            ScalarField cand = morse_tilt(wc.xi, w, e * scale, wc.chi, g, 1);
            auto cc = find_critical_points(cand, 0.0, g, 1);
            if (!cc.empty() && std::all_of(cc.begin(), cc.end(), [](const CriticalPoint& c) { return c.nondegenerate; })) {
                xi = cand;
                wc.eps_m = e * scale;
                done = true;
            }
        }
        require(done, ErrorKind::resolution, "Morse tilt could not isolate the critical points of xi");
        wc.tilted = true;
    }

    // slabs
    if (diff.time_dependent) {
        wc.constants = slab_constants(xi, g, wc.delta1, true);
        if (opt.slab_override > 0) {
            wc.partition.L = opt.slab_override;
            wc.partition.T = sp.T;
        } else {
            wc.partition = pick_slab_count(xi, wc.chi.c1_norm(), wc.constants.c1, wc.constants.c2, g);
        }
    } else {
        wc.constants = slab_constants(xi, g, wc.delta1, false);
        wc.partition.L = std::max(1, opt.slab_override);
        wc.partition.T = sp.T;
    }

    auto targets = opt.targets1;
    if (targets.empty()) targets = detail::auto_targets(find_critical_points(xi, 0.0, g, 1), sp.omega1, g);
    wc.relocation1 = relocate_critical_points(xi, targets, sp.omega1, g, 1, 0.0, wc.delta1, opt.min_sep_cells);
    wc.global = WeightPair{wc.relocation1.phi, wc.phi_tilde, 0.0, sp.T, -1, diff.time_dependent};

    for (int l = 0; l < wc.partition.L; ++l) {
        double ta = wc.partition.t(l), tb = wc.partition.t(l + 1);
        ScalarField phi_l = wc.relocation1.phi;
        if (diff.time_dependent) {
            ScalarField rho = slab_rho(xi, ta, wc.chi, g);
            phi_l = relocate_critical_points(rho, targets, sp.omega1, g, 1, ta, wc.delta1, opt.min_sep_cells).phi;
        }
        wc.slabs.push_back(WeightPair{phi_l, wc.phi_tilde, ta, tb, l, diff.time_dependent});
    }
    return wc;
}

/// d = (sup phi + sup phi~)(1 + 1e-9) over the pair's window.
inline double pair_d(const WeightPair& pair, const Grid& g) {
    auto ts = certification_times(pair, g);
    return default_d(detail::sup_over(pair.phi, g, 1, ts), detail::sup_over(pair.phi_tilde, g, 2, ts));
}

} // namespace carleman::weights
