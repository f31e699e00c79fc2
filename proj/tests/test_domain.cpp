#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "carleman/domain/coefficients.hpp"
#include "carleman/domain/grid.hpp"
#include "carleman/domain/state.hpp"
#include "carleman/scenarios.hpp"

using namespace carleman;
using namespace carleman::domain;

namespace {

GeometrySpec unit_1d() { return scenarios::default_geometry_1d(); }

TransmissionState state_from(const Grid& g, const DiffusionPair& d,
                             const std::function<double(int, double, const Point&)>& f) {
    TransmissionState st = zero_state(g, d);
    for (int k = 0; k <= g.nt; ++k) st.y[static_cast<std::size_t>(k)] = sample(g, g.t[static_cast<std::size_t>(k)], f);
    return st;
}

} // namespace

TEST(BuildGrid, OneDimensionalNodesAreSplitAtInterface) {
    Grid g = build_grid(unit_1d(), 8, 4);
    ASSERT_EQ(g.cols(1), 5);
    ASSERT_EQ(g.cols(2), 5);
    const double expect1[] = {0.0, 0.125, 0.25, 0.375, 0.5};
    const double expect2[] = {0.5, 0.625, 0.75, 0.875, 1.0};
    for (int i = 0; i < 5; ++i) {
        EXPECT_DOUBLE_EQ(g.node(1, i, 0)[0], expect1[i]);
        EXPECT_DOUBLE_EQ(g.node(2, i, 0)[0], expect2[i]);
    }
    EXPECT_EQ(g.label(1, 4, 0), NodeLabel::interface);
    EXPECT_EQ(g.label(2, 0, 0), NodeLabel::interface);
    EXPECT_EQ(g.label(1, 0, 0), NodeLabel::outer_boundary);
    EXPECT_EQ(g.label(2, 4, 0), NodeLabel::outer_boundary);
    EXPECT_EQ(g.label(1, 2, 0), NodeLabel::omega1);
}

TEST(BuildGrid, AlignedInterfaceHasZeroSnap) {
    Grid g = build_grid(unit_1d(), 16, 4);
    EXPECT_EQ(g.snap_distance, 0.0);
    EXPECT_DOUBLE_EQ(g.interface_x, 0.5);
}

TEST(BuildGrid, SquareLatticeCounts) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 8, 4);
    EXPECT_EQ(g.rows(), 9);
    EXPECT_EQ(g.cols(1) + g.cols(2) - 1, 9);
    EXPECT_EQ(g.interface_count(), 9);
    for (int j = 0; j < g.rows(); ++j) EXPECT_DOUBLE_EQ(g.node(1, g.interface_col(1), j)[0], 0.5);
}

TEST(BuildGrid, SnapsAndReportsDistance) {
    GeometrySpec sp = unit_1d();
    sp.interface_x = 0.51;
    Grid g = build_grid(sp, 16, 4);
    EXPECT_DOUBLE_EQ(g.interface_x, 0.5);
    EXPECT_NEAR(g.snap_distance, 0.01, 1e-15);
}

TEST(BuildGrid, DisallowedSnapIsAlignmentError) {
    GeometrySpec sp = unit_1d();
    sp.interface_x = 0.51;
    sp.max_snap = 0.0;
    try {
        build_grid(sp, 16, 4);
        FAIL() << "expected alignment error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::alignment);
    }
}

TEST(BuildGrid, RejectsCoarseLattice) {
    EXPECT_THROW(build_grid(unit_1d(), 4, 4), Error);
}

TEST(BuildGrid, InterfaceOutsideDomainIsConfigError) {
    GeometrySpec sp = unit_1d();
    sp.interface_x = 1.5;
    try {
        build_grid(sp, 16, 4);
        FAIL() << "expected config error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

TEST(BuildGrid, Deterministic) {
    Grid a = build_grid(scenarios::default_geometry_2d(), 24, 7, 12);
    Grid b = build_grid(scenarios::default_geometry_2d(), 24, 7, 12);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.s, b.s);
}

TEST(BuildGrid, UniformSpacingProperty) {
    for (int nx : {8, 10, 32, 50}) {
        Grid g = build_grid(unit_1d(), nx, 3);
        for (std::size_t i = 1; i < g.x.size(); ++i) EXPECT_NEAR(g.x[i] - g.x[i - 1], g.hx, 1e-15);
        EXPECT_GT(g.dt, 0.0);
    }
}

TEST(BuildGrid, NodeWeightsIntegrateArea) {
    for (auto sp : {unit_1d(), scenarios::default_geometry_2d()}) {
        Grid g = build_grid(sp, 16, 2);
        double total = 0.0;
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) total += g.node_weight(sub, i, j);
        EXPECT_NEAR(total, sp.dimension == 1 ? 1.0 : 1.0, 1e-14);
    }
}

TEST(CheckGeometry, DefaultsPass) {
    EXPECT_TRUE(check_geometry(build_grid(unit_1d(), 64, 4)).pass());
    EXPECT_TRUE(check_geometry(build_grid(scenarios::default_geometry_2d(), 32, 4)).pass());
}

TEST(CheckGeometry, OmegaMissingOneSide) {
    GeometrySpec sp = unit_1d();
    sp.omega.boxes = {{0.3, 0.45}};
    sp.omega2.boxes = {{0.33, 0.42}};
    EXPECT_FALSE(check_geometry(build_grid(sp, 64, 4)).omega_meets_both);
}

TEST(CheckTensor, Identity) {
    Grid g = build_grid(unit_1d(), 16, 2);
    auto c = check_tensor(constant(Mat2::diag(1.0, 1.0), 0.5), g);
    EXPECT_EQ(c.symmetry_residual, 0.0);
    EXPECT_DOUBLE_EQ(c.ellipticity_margin, 0.5);
    EXPECT_TRUE(c.pass());
}

TEST(CheckTensor, WeakDirectionFails) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 8, 2);
    auto c = check_tensor(constant(Mat2::diag(2.0, 0.1), 0.5), g);
    EXPECT_NEAR(c.ellipticity_margin, -0.4, 1e-15);
    EXPECT_FALSE(c.pass());
}

TEST(CheckTensor, AsymmetricFails) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 8, 2);
    DiffusionPair d;
    d.a = [](double, const Point&) { return Mat2{2.0, 1.0, 0.0, 2.0}; };
    d.a_tilde = d.a;
    d.s0 = 0.5;
    auto c = check_tensor(d, g);
    EXPECT_DOUBLE_EQ(c.symmetry_residual, 1.0);
    EXPECT_FALSE(c.pass());
}

TEST(CheckTensor, NonFiniteIsDataError) {
    Grid g = build_grid(unit_1d(), 16, 2);
    DiffusionPair d = constant(Mat2::diag(1.0, 1.0), 0.5);
    d.a = [](double, const Point&) { return Mat2::diag(std::nan(""), 1.0); };
    try {
        check_tensor(d, g);
        FAIL() << "expected data error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

TEST(CheckTensor, ConstructorsSymmetrize) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    Grid g = build_grid(scenarios::default_geometry_2d(), 8, 4);
    for (int trial = 0; trial < 20; ++trial) {
        Mat2 a{2.0, u(rng), u(rng), 2.0}, b{1.5, u(rng), u(rng), 1.5};
        for (const auto& d : {piecewise_constant(a, b, 0.5), smooth_in_t(a, b, 0.2, 3.0, 0.5)}) {
            auto c = check_tensor(d, g);
            EXPECT_EQ(c.symmetry_residual, 0.0);
        }
    }
}

TEST(TraceJump, SteadyPiecewiseLinear) {
    Grid g = build_grid(unit_1d(), 16, 2);
    DiffusionPair d = piecewise_constant(Mat2::diag(2.0, 2.0), Mat2::diag(1.0, 1.0), 0.5);
    auto st = state_from(g, d, [](int sub, double, const Point& p) { return sub == 1 ? p[0] : 2.0 * p[0] - 0.5; });
    auto j = interface_trace_jump(st, 1);
    EXPECT_NEAR(j.dirichlet_jump[0], 0.0, 1e-14);
    EXPECT_NEAR(j.flux_jump[0], 0.0, 1e-12);
}

TEST(TraceJump, ZeroState) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 16, 2);
    auto st = zero_state(g, scenarios::jump_diffusion(2));
    auto j = interface_trace_jump(st, 0);
    for (double v : j.dirichlet_jump) EXPECT_EQ(v, 0.0);
    for (double v : j.flux_jump) EXPECT_EQ(v, 0.0);
}

TEST(TraceJump, ConstantShiftOnlyMovesDirichletJump) {
    Grid g = build_grid(unit_1d(), 16, 2);
    DiffusionPair d = scenarios::jump_diffusion(1);
    auto base = [](int sub, double, const Point& p) { return sub == 1 ? std::sin(p[0]) : std::cos(p[0]); };
    auto st0 = state_from(g, d, base);
    auto st1 = state_from(g, d, [&](int sub, double t, const Point& p) { return base(sub, t, p) + (sub == 2 ? 0.7 : 0.0); });
    auto j0 = interface_trace_jump(st0, 0), j1 = interface_trace_jump(st1, 0);
    EXPECT_NEAR(j1.dirichlet_jump[0], j0.dirichlet_jump[0] - 0.7, 1e-14);
    EXPECT_NEAR(j1.flux_jump[0], j0.flux_jump[0], 1e-11);
}

TEST(TraceJump, TooFewNodesIsResolutionError) {
    GeometrySpec sp = unit_1d();
    sp.interface_x = 0.1;
    Grid g = build_grid(sp, 10, 2);
    auto st = zero_state(g, scenarios::jump_diffusion(1));
    try {
        interface_trace_jump(st, 0);
        FAIL() << "expected resolution error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::resolution);
    }
}

TEST(TraceJump, FluxStencilIsSecondOrder) {
    auto sp = unit_1d();
    DiffusionPair d = scenarios::jump_diffusion(1);
    auto y = [](int sub, double t, const Point& p) {
        return sub == 1 ? std::exp(p[0] + t) : 0.3 + std::sin(2.0 * p[0]) * std::exp(t);
    };
    std::vector<double> hs, flux;
    for (int nx : {16, 32, 64}) {
        Grid g = build_grid(sp, nx, 2);
        auto st = state_from(g, d, y);
        auto j = interface_trace_jump(st, 1);
        double t = g.t[1];
        double b1 = std::exp(0.5 + t) - 0.3 - std::sin(1.0) * std::exp(t);
        double b2 = 2.0 * std::exp(0.5 + t) - 2.0 * std::cos(1.0) * std::exp(t);
        EXPECT_NEAR(j.dirichlet_jump[0], b1, 1e-14);
        hs.push_back(g.hx);
        flux.push_back(std::abs(j.flux_jump[0] - b2));
    }
    EXPECT_NEAR(log_log_slope(hs, flux), 2.0, 0.3);
}
