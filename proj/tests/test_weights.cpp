#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "carleman/scenarios.hpp"
#include "carleman/weights/weights.hpp"

using namespace carleman;
using namespace carleman::weights;
using domain::Grid;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::config;
}

domain::GeometrySpec geometry_1d(double w2a, double w2b) {
    auto sp = scenarios::default_geometry_1d();
    sp.omega = {{{0.3, 0.45}, {w2a - 0.02, w2b + 0.02}}};
    sp.omega2.boxes = {{w2a, w2b}};
    return sp;
}

ScalarField fixed(double value, Vec2 grad) {
    return [=](double, const Point&) { return FieldValue{value, grad}; };
}

} // namespace

TEST(TildePhi, OneDimensionalParabola) {
    Grid g = build_grid(geometry_1d(0.7, 0.8), 20, 4);
    auto tp = build_tilde_phi(g, g.spec.omega2);
    for (int i = 0; i < g.cols(2); ++i) {
        double x = g.node(2, i, 0)[0];
        EXPECT_NEAR(tp.phi(0.0, {x, 0.0}).value, (x - 0.5) * (1.0 - x), 1e-15);
    }
    EXPECT_EQ(tp.phi(0.0, {0.5, 0.0}).value, 0.0);
    EXPECT_NEAR(tp.phi(0.0, {1.0, 0.0}).value, 0.0, 1e-16);
}

TEST(TildePhi, GradientBoundOutsideObservation) {
    Grid g = build_grid(geometry_1d(0.7, 0.8), 20, 4);
    auto tp = build_tilde_phi(g, g.spec.omega2);
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.cols(2); ++i) {
        Point p = g.node(2, i, 0);
        if (p[0] > 0.7 && p[0] < 0.8) continue;
        m = std::min(m, std::abs(tp.phi(0.0, p).grad[0]));
    }
    EXPECT_NEAR(m, 0.1, 1e-12);
}

TEST(TildePhi, NoInteriorNodeIsResolutionError) {
    Grid g = build_grid(geometry_1d(0.51, 0.52), 8, 4);
    EXPECT_EQ(kind_of([&] { build_tilde_phi(g, g.spec.omega2); }), ErrorKind::resolution);
}

TEST(InterfaceScaling, HandValue) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 16, 4);
    auto diff = domain::piecewise_constant(Mat2::diag(4.0, 4.0), Mat2::diag(1.0, 1.0), 0.5);
    auto xi_hat = product_field(Profile1D{0.0, 0.5, 0.0, 1.0}, Modulation{}, 1);
    auto phi_t = product_field(Profile1D{0.5, 1.0, 0.0, 1.0}, Modulation{}, 1);
    auto s = interface_scaling(diff, xi_hat, phi_t, g);
    EXPECT_NEAR(s.varsigma(0.0, {0.5, 0.0}).value, 0.5, 1e-14);
}

TEST(InterfaceScaling, MirrorSymmetricIsOne) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 16, 4);
    auto diff = domain::constant(Mat2::diag(1.5, 1.5), 0.5);
    auto xi_hat = product_field(Profile1D{0.0, 0.5, 0.0, 1.0}, Modulation{}, 1);
    auto phi_t = product_field(Profile1D{0.5, 1.0, 0.0, 1.0}, Modulation{}, 1);
    EXPECT_NEAR(interface_scaling(diff, xi_hat, phi_t, g).varsigma(0.0, {0.5, 0.0}).value, 1.0, 1e-14);
}

TEST(InterfaceScaling, FlatNormalDerivativeIsDegenerate) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 16, 4);
    auto diff = scenarios::jump_diffusion(1);
    auto phi_t = product_field(Profile1D{0.5, 1.0, 0.0, 1.0}, Modulation{}, 1);
    EXPECT_EQ(kind_of([&] { interface_scaling(diff, fixed(0.1, {0.0, 0.0}), phi_t, g); }), ErrorKind::degenerate_normal);
}

TEST(Relocation, EmptyCompositionKeepsField) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 32, 4);
    auto rho = product_field(Profile1D::with_vertex(0.0, 0.5, 0.375), Modulation{}, 1);
    auto rel = relocate_critical_points(rho, {}, g.spec.omega1, g, 1);
    EXPECT_TRUE(rel.moved.empty());
    EXPECT_TRUE(rel.flow.tubes.empty());
    for (int i = 0; i < g.cols(1); ++i) {
        Point p = g.node(1, i, 0);
        EXPECT_EQ(rel.phi(0.0, p).value, rho(0.0, p).value);
    }
}

TEST(Relocation, BumpMaximumMovesToTarget) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 64, 4);
    auto rho = product_field(Profile1D::with_vertex(0.0, 0.5, 0.25), Modulation{0.3, 0.5, 1.0}, 2);
    const domain::Region w1{{{0.1, 0.2, 0.3, 0.7}}};
    auto crit = find_critical_points(rho, 0.0, g, 1);
    std::vector<Point> targets{{0.15, 0.5}};
    for (const auto& c : crit)
        if (std::abs(c.x[1] - 0.5) > 0.25) targets.push_back({0.15, 0.35});
    auto rel = relocate_critical_points(rho, targets, w1, g, 1);
    double best = -1.0;
    Point arg{};
    for (int j = 0; j < g.rows(); ++j)
        for (int i = 0; i < g.cols(1); ++i) {
            Point p = g.node(1, i, j);
            double v = rel.phi(0.0, p).value;
            if (v > best) {
                best = v;
                arg = p;
            }
        }
    EXPECT_LE(std::hypot(arg[0] - 0.15, arg[1] - 0.5), std::hypot(g.hx, g.hy) + 1e-12);
    for (const auto& c : find_critical_points(rel.phi, 0.0, g, 1))
        EXPECT_TRUE(w1.contains(c.x, 2) || std::min({c.x[0] - 0.1 + g.hx, 0.2 + g.hx - c.x[0]}) >= 0.0);
}

TEST(Relocation, TargetOutsideObservationRejected) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 32, 4);
    auto rho = product_field(Profile1D::with_vertex(0.0, 0.5, 0.25), Modulation{0.3, 0.5, 1.0}, 2);
    EXPECT_EQ(kind_of([&] { relocate_critical_points(rho, {{0.4, 0.5}}, {{{0.1, 0.2, 0.3, 0.7}}}, g, 1); }),
              ErrorKind::precondition);
}

TEST(Relocation, BoundaryValuesUntouched) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 48, 4);
    auto wc = construct_weights(g, scenarios::jump_diffusion(2));
    ASSERT_FALSE(wc.relocation1.moved.empty());
    double worst = 0.0;
    for (int j = 0; j < g.rows(); ++j)
        for (int i = 0; i < g.cols(1); ++i) {
            Point p = g.node(1, i, j);
            if (boundary_distance(g, 1, p).value > 0.5 * wc.delta1) continue;
            worst = std::max(worst, std::abs(wc.global.phi(0.0, p).value - wc.xi(0.0, p).value));
        }
    EXPECT_EQ(worst, 0.0);
}

TEST(Relocation, FlowIsInjectiveOnNodes) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 32, 4);
    auto wc = construct_weights(g, scenarios::jump_diffusion(2));
    std::vector<Point> images;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.cols(1); ++i) images.push_back(wc.relocation1.flow.apply(g.node(1, i, j)).x);
    for (std::size_t a = 0; a < images.size(); ++a) {
        EXPECT_GE(images[a][0], g.spec.x0);
        EXPECT_LE(images[a][0], g.interface_x);
        for (std::size_t b = a + 1; b < images.size(); ++b)
            EXPECT_GT(std::hypot(images[a][0] - images[b][0], images[a][1] - images[b][1]), 1e-9);
    }
}

TEST(SlabCount, TimeIndependentIsOne) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 32, 16);
    auto xi = product_field(Profile1D{0.0, 0.5, 0.0, 1.0}, Modulation{}, 1);
    EXPECT_EQ(pick_slab_count(xi, 1.0, 0.05, 1.0, g).L, 1);
}

TEST(SlabCount, MatchesBruteForceSweep) {
    auto sp = scenarios::default_geometry_1d();
    sp.T = 2.0;
    Grid g = build_grid(sp, 32, 64);
    ScalarField xi = [](double t, const Point& p) {
        double x = p[0], s = 1.0 + 0.1 * std::sin(t);
        return FieldValue{x * (0.5 - x) * s, {(0.5 - 2.0 * x) * s, 0.0}};
    };
    const double c1 = 0.05, c2 = 1.0, chi = 1.0, bound = std::min(0.5 * c1, 0.5 * c2 / chi);
    // modulus = 0.1 * range(sin) * (max xi0 + max |xi0'|) over the nodes
    const double amp = 0.1 * (1.0 / 16.0 + 0.5);
    int expect = -1;
    for (int L = 1; L <= g.nt && expect < 0; ++L) {
        double worst = 0.0;
        for (int l = 0; l < L; ++l) {
            double a = l * sp.T / L, b = (l + 1) * sp.T / L;
            double lo = std::min(std::sin(a), std::sin(b)), hi = std::max(std::sin(a), std::sin(b));
            for (double t : g.t)
                if (t > a && t < b) {
                    lo = std::min(lo, std::sin(t));
                    hi = std::max(hi, std::sin(t));
                }
            worst = std::max(worst, amp * (hi - lo));
        }
        if (worst < bound) expect = L;
    }
    ASSERT_GT(expect, 1);
    auto part = pick_slab_count(xi, chi, c1, c2, g);
    EXPECT_EQ(part.L, expect);
    auto ts = part.times();
    for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_GT(ts[i], ts[i - 1]);
}

TEST(SlabCount, DegenerateBoundIsResolutionError) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 32, 16);
    auto xi = product_field(Profile1D{0.0, 0.5, 0.0, 1.0}, Modulation{}, 1);
    EXPECT_EQ(kind_of([&] { pick_slab_count(xi, 1.0, 0.0, 1.0, g); }), ErrorKind::resolution);
}

TEST(Theta, UnitDenominator) {
    ThetaFamily fam({1.0, 3.0, 1.0, 0.1}, 0.5, 0.0, 2.0);
    EXPECT_DOUBLE_EQ(fam.at(1.0, 0.0).varphi, 1.0);
}

TEST(Theta, HandArithmetic) {
    const double mu = 1.0, d = std::log(2.0);
    ThetaFamily fam({1.0, mu, d, 0.1}, 0.0, 0.0, 2.0);
    auto s = fam.at(1.0, 0.0);
    EXPECT_NEAR(s.alpha, -1.0, 1e-15);
    EXPECT_NEAR(s.theta, 0.36787944117144233, 1e-15);
}

TEST(Theta, DMustExceedSup) {
    EXPECT_EQ(kind_of([] { ThetaFamily({1.0, 1.0, 0.5, 0.1}, 0.5, 0.0, 1.0); }), ErrorKind::precondition);
}

TEST(Theta, WindowEndsAreSingular) {
    ThetaFamily fam({1.0, 1.0, 1.0, 0.1}, 0.5, 0.25, 0.75);
    EXPECT_EQ(kind_of([&] { fam.at(0.25, 0.1); }), ErrorKind::singularity);
    EXPECT_EQ(kind_of([&] { fam.at(0.75, 0.1); }), ErrorKind::singularity);
}

TEST(Theta, NegativeAlphaAndUnitIntervalTheta) {
    for (double psi : {0.0, 0.2, 0.49})
        for (double t : {0.01, 0.3, 0.5, 0.99}) {
            auto s = ThetaFamily({5.0, 2.0, 0.5, 0.1}, 0.49, 0.0, 1.0).at(t, psi);
            EXPECT_LT(s.alpha, 0.0);
            EXPECT_LT(s.log_theta, 0.0);
            EXPECT_GE(s.theta, 0.0);
            EXPECT_LT(s.theta, 1.0);
        }
}

TEST(Theta, VanishesAtWindowEnds) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 32, 64);
    ThetaFamily fam({200.0, 2.0, 1.0, 0.1}, 0.5, 0.0, 1.0);
    EXPECT_LT(fam.at(g.t[1], 0.5).theta, 1e-30);
    EXPECT_LT(fam.at(g.t[static_cast<std::size_t>(g.nt - 1)], 0.5).theta, 1e-30);
}

TEST(Theta, StrictlyDecreasingInLambda) {
    double prev = 1.0;
    for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        double th = ThetaFamily({lambda, 1.0, 1.0, 0.1}, 0.5, 0.0, 1.0).at(0.5, 0.3).theta;
        EXPECT_LT(th, prev);
        prev = th;
    }
}

TEST(Theta, HatAgreesOnBoundary) {
    ThetaFamily n({3.0, 2.0, 1.0, 0.1}, 0.5, 0.0, 1.0), h({3.0, 2.0, 1.0, 0.1}, 0.5, 0.0, 1.0, ThetaSign::hat);
    for (double t : {0.1, 0.5, 0.9}) {
        auto a = n.at(t, 0.0), b = h.at(t, 0.0);
        EXPECT_NEAR(a.varphi, b.varphi, 1e-12);
        EXPECT_NEAR(a.alpha, b.alpha, 1e-12);
        EXPECT_NEAR(a.theta, b.theta, 1e-12);
    }
}

TEST(Theta, TimeDerivativesMatchDifferences) {
    ThetaFamily fam({2.0, 1.5, 1.0, 0.1}, 0.5, 0.1, 0.9);
    auto psi = [](double t) { return 0.3 + 0.1 * std::sin(t); };
    auto dpsi = [](double t) { return 0.1 * std::cos(t); };
    auto ddpsi = [](double t) { return -0.1 * std::sin(t); };
    const double t = 0.4, h = 1e-5;
    auto s = fam.at(t, psi(t), dpsi(t), ddpsi(t));
    auto p = fam.at(t + h, psi(t + h), dpsi(t + h), ddpsi(t + h));
    auto m = fam.at(t - h, psi(t - h), dpsi(t - h), ddpsi(t - h));
    EXPECT_NEAR(s.alpha_t, (p.alpha - m.alpha) / (2 * h), 1e-7 * std::abs(s.alpha_t) + 1e-9);
    EXPECT_NEAR(s.varphi_t, (p.varphi - m.varphi) / (2 * h), 1e-7 * std::abs(s.varphi_t) + 1e-9);
    EXPECT_NEAR(s.alpha_tt, (p.alpha_t - m.alpha_t) / (2 * h), 1e-6 * std::abs(s.alpha_tt) + 1e-7);
}

TEST(Certify, OneDimensionalPairPassesAnalytically) {
    Grid g = build_grid(geometry_1d(0.7, 0.8), 64, 4);
    auto diff = domain::piecewise_constant(Mat2::diag(4.0, 4.0), Mat2::diag(1.0, 1.0), 0.5);
    auto wc = construct_weights(g, diff);
    auto c = verify_weight_conditions(wc.global, diff, g, g.spec.omega1, g.spec.omega2);
    EXPECT_TRUE(c.pass());
    EXPECT_LE(c.interface.value, 1e-12);
}

TEST(Certify, ZeroWeightFailsPositivity) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 64, 4);
    auto diff = scenarios::jump_diffusion(1);
    auto wc = construct_weights(g, diff);
    WeightPair bad = wc.global;
    bad.phi = fixed(0.0, {0.0, 0.0});
    auto c = verify_weight_conditions(bad, diff, g, g.spec.omega1, g.spec.omega2);
    EXPECT_FALSE(c.positivity.pass);
    EXPECT_EQ(c.positivity.witness_subdomain, 1);
    EXPECT_GT(c.positivity.witness[0], 0.0);
    EXPECT_LT(c.positivity.witness[0], 0.5);
}

TEST(Certify, VertexOutsideObservationFailsGradient) {
    Grid g = build_grid(geometry_1d(0.7, 0.8), 40, 4);
    auto diff = scenarios::jump_diffusion(1);
    auto wc = construct_weights(g, diff);
    WeightPair bad = wc.global;
    bad.phi_tilde = product_field(Profile1D::with_vertex(0.5, 1.0, 0.6), Modulation{}, 1);
    auto c = verify_weight_conditions(bad, diff, g, g.spec.omega1, g.spec.omega2);
    EXPECT_FALSE(c.gradient.pass);
    EXPECT_EQ(c.gradient.witness_subdomain, 2);
    EXPECT_NEAR(c.gradient.witness[0], 0.6, 1e-12);
}

TEST(Construct, DefaultsPassAllConditions) {
    for (int dim : {1, 2}) {
        auto sp = dim == 1 ? scenarios::default_geometry_1d() : scenarios::default_geometry_2d();
        Grid g = build_grid(sp, dim == 1 ? 64 : 256, 8);
        auto diff = scenarios::jump_diffusion(dim);
        auto wc = construct_weights(g, diff, {.modulation = 0.3, .slab_override = 2});
        auto analytic = verify_weight_conditions(wc.global, diff, g, sp.omega1, sp.omega2);
        auto grid = verify_weight_conditions(wc.global, diff, g, sp.omega1, sp.omega2, true);
        EXPECT_TRUE(analytic.pass()) << "dim " << dim;
        EXPECT_LE(analytic.interface.value, 1e-8);
        EXPECT_LE(grid.interface.value, 1e-6) << "dim " << dim;
        for (const auto& slab : wc.slabs)
            EXPECT_TRUE(verify_weight_conditions(slab, diff, g, sp.omega1, sp.omega2).pass()) << "slab " << slab.slab;
    }
}

TEST(Construct, TimeDependentSlabsEachPass) {
    auto sp = scenarios::default_geometry_1d();
    Grid g = build_grid(sp, 64, 16);
    auto diff = domain::smooth_in_t(Mat2::diag(2.0, 2.0), Mat2::diag(1.0, 1.0), 0.2, 3.0, 0.5);
    auto wc = construct_weights(g, diff);
    ASSERT_GE(wc.partition.L, 1);
    for (const auto& slab : wc.slabs) {
        auto c = verify_weight_conditions(slab, diff, g, sp.omega1, sp.omega2);
        EXPECT_TRUE(c.pass()) << "slab " << slab.slab;
    }
}

TEST(Construct, CriticalPointsLandInObservation) {
    auto sp = scenarios::default_geometry_2d();
    Grid g = build_grid(sp, 64, 4);
    auto wc = construct_weights(g, scenarios::jump_diffusion(2));
    for (const auto& c : find_critical_points(wc.global.phi, 0.0, g, 1)) {
        const auto& b = sp.omega1.boxes.front();
        EXPECT_GE(c.x[0], b.x0 - g.hx);
        EXPECT_LE(c.x[0], b.x1 + g.hx);
        EXPECT_GE(c.x[1], b.y0 - g.hy);
        EXPECT_LE(c.x[1], b.y1 + g.hy);
    }
}

TEST(Construct, SeededAndDeterministic) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 32, 4);
    auto a = construct_weights(g, scenarios::jump_diffusion(2), {.seed = 9});
    auto b = construct_weights(g, scenarios::jump_diffusion(2), {.seed = 9});
    std::ostringstream sa, sb;
    write_weight_csv(sa, a.global, g, 0.0);
    write_weight_csv(sb, b.global, g, 0.0);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(LocalWeights, VanishOnInterface) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 64, 4);
    auto diff = scenarios::jump_diffusion(1);
    auto wc = construct_weights(g, diff);
    auto lw = local_r_weights(wc.global, diff, g, 0.15);
    EXPECT_EQ(lw.phi_r(0.5, {0.5, 0.0}).value, 0.0);
    EXPECT_EQ(lw.phi_tilde_r_tilde(0.5, {0.5, 0.0}).value, 0.0);
    EXPECT_GE(lw.epsilon1, 2.0 * g.hx);
    EXPECT_GT(lw.c0, 0.0);
}

TEST(LocalWeights, MatchingHoldsOnInterface) {
    Grid g = build_grid(scenarios::default_geometry_1d(), 64, 4);
    auto diff = domain::piecewise_constant(Mat2::diag(4.0, 4.0), Mat2::diag(1.0, 1.0), 0.5);
    auto wc = construct_weights(g, diff);
    auto lw = local_r_weights(wc.global, diff, g, 0.15);
    EXPECT_LE(lw.matching_residual, 1e-10);
    for (double dx = 0.0; dx <= lw.epsilon1 + 1e-12; dx += g.hx) {
        EXPECT_GT(norm(lw.phi_r(0.0, {0.5 - dx, 0.0}).grad), lw.c0);
        EXPECT_GT(norm(lw.phi_tilde_r_tilde(0.0, {0.5 + dx, 0.0}).grad), lw.c0);
    }
}

TEST(LocalWeights, TwoDimensionalMatching) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 64, 4);
    auto diff = scenarios::jump_diffusion(2);
    auto wc = construct_weights(g, diff);
    auto lw = local_r_weights(wc.global, diff, g, 0.15);
    EXPECT_LE(lw.matching_residual, 1e-6);
}

TEST(LocalWeights, ThinNeighbourhoodRejected) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 32, 4);
    auto diff = scenarios::jump_diffusion(2);
    auto wc = construct_weights(g, diff);
    EXPECT_EQ(kind_of([&] { local_r_weights(wc.global, diff, g, 0.15); }), ErrorKind::neighborhood_too_thin);
}
