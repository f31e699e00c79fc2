#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "carleman/control/control.hpp"
#include "carleman/scenarios.hpp"
#include "carleman/solver/solver.hpp"

using namespace carleman;
using namespace carleman::solver;
using domain::Grid;

namespace {

double max_abs(const TransmissionState& st) {
    double m = 0.0;
    for (const auto& y : st.y)
        for (int sub = 1; sub <= 2; ++sub)
            for (double v : y.on(sub)) m = std::max(m, std::abs(v));
    return m;
}

double max_diff(const TransmissionState& a, const TransmissionState& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.y.size(); ++k)
        for (int sub = 1; sub <= 2; ++sub)
            for (std::size_t i = 0; i < a.y[k].on(sub).size(); ++i)
                m = std::max(m, std::abs(a.y[k].on(sub)[i] - b.y[k].on(sub)[i]));
    return m;
}

ExactSolution heat_sine() {
    using std::numbers::pi;
    ExactSolution ex;
    ex.value = [](int, double t, const Point& p) { return std::exp(t - 1.0) * std::sin(pi * p[0]); };
    ex.dt = ex.value;
    ex.grad = [](int, double t, const Point& p) { return Vec2{pi * std::exp(t - 1.0) * std::cos(pi * p[0]), 0.0}; };
    ex.hessian = [](int, double t, const Point& p) {
        return Mat2::diag(-pi * pi * std::exp(t - 1.0) * std::sin(pi * p[0]), 0.0);
    };
    return ex;
}

} // namespace

TEST(Solve, ZeroDataGivesZeroState) {
    for (auto sp : {scenarios::default_geometry_1d(), scenarios::default_geometry_2d()}) {
        TransmissionProblem pb;
        pb.grid = build_grid(sp, 16, 8);
        pb.diffusion = scenarios::jump_diffusion(sp.dimension);
        EXPECT_LE(max_abs(solve(pb)), 1e-12);
        pb.direction = Direction::forward;
        EXPECT_LE(max_abs(solve(pb)), 1e-12);
    }
}

TEST(Solve, SteadyJumpReproduced) {
    for (auto sp : {scenarios::default_geometry_1d(), scenarios::default_geometry_2d()}) {
        Grid g = build_grid(sp, 16, 8);
        auto pb = scenarios::steady_jump_problem(g);
        auto st = solve(pb);
        double err = 0.0;
        for (int k = 0; k <= g.nt; ++k)
            for (int sub = 1; sub <= 2; ++sub)
                for (std::size_t i = 0; i < st.at(k).on(sub).size(); ++i)
                    err = std::max(err, std::abs(st.at(k).on(sub)[i] - pb.end_data.on(sub)[i]));
        EXPECT_LE(err, 1e-10) << "dimension " << sp.dimension;
    }
}

TEST(Solve, HeatSineConvergesInSpaceAndTime) {
    auto sp = scenarios::default_geometry_1d();
    auto diff = domain::constant(Mat2::diag(1.0, 1.0), 0.5);
    auto ex = heat_sine();
    auto space = convergence_study(
        [&](int l) {
            int nx = 8 << l;
            Grid g = build_grid(sp, nx, nx * nx / 4);
            return std::pair{g.hx, max_error(solve(manufactured_problem(g, diff, ex)), ex)};
        },
        3);
    EXPECT_GE(space.order, 1.7);
    auto time = convergence_study(
        [&](int l) {
            Grid g = build_grid(sp, 256, 8 << l);
            return std::pair{g.dt, max_error(solve(manufactured_problem(g, diff, ex)), ex)};
        },
        3);
    EXPECT_GE(time.order, 0.7);
}

TEST(Solve, JumpSolutionOrders) {
    auto sp = scenarios::default_geometry_1d();
    auto diff = scenarios::jump_diffusion(1);
    auto ex = scenarios::smooth_jump_solution(sp);
    auto space = convergence_study(
        [&](int l) {
            int nx = 16 << l;
            Grid g = build_grid(sp, nx, nx * nx / 4);
            return std::pair{g.hx, max_error(solve(manufactured_problem(g, diff, ex)), ex)};
        },
        3);
    EXPECT_NEAR(space.order, 2.0, 0.3);
    auto time = convergence_study(
        [&](int l) {
            Grid g = build_grid(sp, 512, 8 << l);
            return std::pair{g.dt, max_error(solve(manufactured_problem(g, diff, ex)), ex)};
        },
        3);
    EXPECT_NEAR(time.order, 1.0, 0.3);
}

TEST(Solve, InterfaceTraceJumpMatchesData) {
    auto sp = scenarios::default_geometry_2d();
    auto diff = scenarios::jump_diffusion(2);
    auto ex = scenarios::smooth_jump_solution(sp);
    Grid g = build_grid(sp, 16, 8);
    auto pb = manufactured_problem(g, diff, ex);
    auto st = solve(pb);
    for (int k = 0; k <= g.nt; ++k) {
        auto j = domain::interface_trace_jump(st, k);
        for (std::size_t r = 0; r < j.dirichlet_jump.size(); ++r)
            EXPECT_NEAR(j.dirichlet_jump[r], pb.beta1[static_cast<std::size_t>(k)][r], 1e-12);
    }
}

TEST(Solve, Linearity) {
    auto sp = scenarios::default_geometry_2d();
    Grid g = build_grid(sp, 12, 6);
    auto diff = scenarios::jump_diffusion(2);
    auto a = manufactured_problem(g, diff, scenarios::smooth_jump_solution(sp));
    a.boundary = nullptr;
    TransmissionProblem b = a;
    b.end_data = scenarios::sine_initial(g);
    for (auto& f : b.f)
        for (int sub = 1; sub <= 2; ++sub)
            for (double& v : f.on(sub)) v = std::cos(3.0 * v);
    for (auto& row : b.beta1)
        for (double& v : row) v = 0.5 * v - 0.1;
    TransmissionProblem sum = a;
    for (std::size_t k = 0; k < sum.f.size(); ++k)
        for (int sub = 1; sub <= 2; ++sub)
            for (std::size_t i = 0; i < sum.f[k].on(sub).size(); ++i) sum.f[k].on(sub)[i] += b.f[k].on(sub)[i];
    for (int sub = 1; sub <= 2; ++sub)
        for (std::size_t i = 0; i < sum.end_data.on(sub).size(); ++i) sum.end_data.on(sub)[i] += b.end_data.on(sub)[i];
    for (std::size_t k = 0; k < sum.beta1.size(); ++k)
        for (std::size_t r = 0; r < sum.beta1[k].size(); ++r) {
            sum.beta1[k][r] += b.beta1[k][r];
            sum.beta2[k][r] += b.beta2[k][r];
        }
    auto ya = solve(a), yb = solve(b), ys = solve(sum);
    for (std::size_t k = 0; k < ya.y.size(); ++k)
        for (int sub = 1; sub <= 2; ++sub)
            for (std::size_t i = 0; i < ya.y[k].on(sub).size(); ++i) ya.y[k].on(sub)[i] += yb.y[k].on(sub)[i];
    EXPECT_LE(max_diff(ya, ys), 1e-10);
}

TEST(Solve, IndefiniteTensorIsAssemblyError) {
    TransmissionProblem pb;
    pb.grid = build_grid(scenarios::default_geometry_1d(), 16, 4);
    pb.diffusion = domain::constant(Mat2::diag(-1.0, -1.0), 0.5);
    try {
        solve(pb);
        FAIL() << "expected assembly error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::assembly);
    }
}

TEST(Solve, WrongDataShapeIsPrecondition) {
    TransmissionProblem pb;
    pb.grid = build_grid(scenarios::default_geometry_1d(), 16, 4);
    pb.diffusion = scenarios::jump_diffusion(1);
    pb.beta1.assign(2, std::vector<double>(1, 0.0));
    EXPECT_THROW(solve(pb), Error);
}

TEST(ConvergenceStudy, SteadyCaseIsExact) {
    auto r = convergence_study(
        [&](int l) {
            Grid g = build_grid(scenarios::default_geometry_1d(), 8 << l, 4);
            auto pb = scenarios::steady_jump_problem(g);
            auto st = solve(pb);
            double e = 0.0;
            for (int sub = 1; sub <= 2; ++sub)
                for (std::size_t i = 0; i < st.at(0).on(sub).size(); ++i)
                    e = std::max(e, std::abs(st.at(0).on(sub)[i] - pb.end_data.on(sub)[i]));
            return std::pair{g.hx, e};
        },
        3);
    EXPECT_TRUE(r.exact);
}

TEST(ConvergenceStudy, TwoLevelsIsPrecondition) {
    try {
        convergence_study([](int) { return std::pair{1.0, 1.0}; }, 2);
        FAIL() << "expected precondition error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}

TEST(ForwardControlled, ZeroControlZeroStateStaysZero) {
    TransmissionProblem pb;
    pb.grid = build_grid(scenarios::default_geometry_1d(), 32, 8);
    pb.diffusion = scenarios::jump_diffusion(1);
    pb.direction = Direction::forward;
    std::vector<domain::PiecewiseField> h(9, domain::PiecewiseField(pb.grid));
    EXPECT_LE(max_abs(solve_forward_controlled(pb, h)), 1e-12);
}

TEST(ForwardControlled, FreeEnergyDecaysMonotonically) {
    for (auto sp : {scenarios::default_geometry_1d(), scenarios::default_geometry_2d()}) {
        TransmissionProblem pb;
        pb.grid = build_grid(sp, 24, 20);
        pb.diffusion = scenarios::jump_diffusion(sp.dimension);
        pb.direction = Direction::forward;
        pb.end_data = scenarios::sine_initial(pb.grid);
        auto st = solve_forward_controlled(pb, {});
        double prev = control::l2_norm(pb.grid, st.at(0));
        for (int k = 1; k <= pb.grid.nt; ++k) {
            double now = control::l2_norm(pb.grid, st.at(k));
            EXPECT_LT(now, prev);
            prev = now;
        }
    }
}

TEST(ForwardControlled, SupportViolationIsPrecondition) {
    TransmissionProblem pb;
    pb.grid = build_grid(scenarios::default_geometry_1d(), 32, 4);
    pb.diffusion = scenarios::jump_diffusion(1);
    pb.direction = Direction::forward;
    std::vector<domain::PiecewiseField> h(5, domain::PiecewiseField(pb.grid));
    h[2].at(pb.grid, 1, 2, 0) = 1.0; // x = 1/16, outside omega
    try {
        solve_forward_controlled(pb, h);
        FAIL() << "expected precondition error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}

TEST(ForwardControlled, BackwardProblemRejected) {
    TransmissionProblem pb;
    pb.grid = build_grid(scenarios::default_geometry_1d(), 16, 4);
    pb.diffusion = scenarios::jump_diffusion(1);
    EXPECT_THROW(solve_forward_controlled(pb, {}), Error);
}

TEST(StateCsv, HeaderAndRowCount) {
    Grid g = build_grid(scenarios::default_geometry_2d(), 8, 2);
    auto st = domain::zero_state(g, scenarios::jump_diffusion(2));
    std::ostringstream out;
    write_state_csv(out, st, {0, 2});
    std::string s = out.str();
    EXPECT_EQ(s.rfind("t,x,y,value,subdomain\n", 0), 0u);
    auto rows = static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) - 1;
    EXPECT_EQ(rows, 2u * static_cast<std::size_t>(g.size(1) + g.size(2)));
}
