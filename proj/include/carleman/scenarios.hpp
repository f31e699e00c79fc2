#pragma once

#include <cmath>
#include <numbers>

#include "carleman/solver/solver.hpp"

namespace carleman::scenarios {

using domain::GeometrySpec;
using solver::ExactSolution;

/// Unit interval, S at 0.5, omega = (0.3, 0.45) u (0.55, 0.7).
inline GeometrySpec default_geometry_1d() {
    GeometrySpec sp;
    sp.dimension = 1;
    sp.shape = domain::InterfaceShape::point;
    sp.interface_x = 0.5;
    sp.omega.boxes = {{0.3, 0.45}, {0.55, 0.7}};
    sp.omega1.boxes = {{0.33, 0.42}};
    sp.omega2.boxes = {{0.58, 0.67}};
    return sp;
}

/// Unit square periodic in y, vertical line S at x = 0.5.
inline GeometrySpec default_geometry_2d() {
    GeometrySpec sp;
    sp.dimension = 2;
    sp.shape = domain::InterfaceShape::vertical_line;
    sp.interface_x = 0.5;
    sp.omega.boxes = {{0.05, 0.25, 0.2, 0.8}, {0.75, 0.95, 0.2, 0.8}};
    sp.omega1.boxes = {{0.1, 0.2, 0.3, 0.7}};
    sp.omega2.boxes = {{0.8, 0.9, 0.3, 0.7}};
    return sp;
}

/// a = 2, a~ = 1 in 1D; anisotropic constant tensors in 2D.
inline domain::DiffusionPair jump_diffusion(int dim) {
    if (dim == 1) return domain::piecewise_constant(Mat2::diag(2.0, 2.0), Mat2::diag(1.0, 1.0), 0.5);
    return domain::piecewise_constant(Mat2::symmetric(2.0, 0.3, 1.0), Mat2::symmetric(1.0, 0.2, 1.5), 0.5);
}

namespace detail {

/// Multiplies a 1D solution by m(y) = 1 + c cos(2 pi (y - y0) / H).
inline ExactSolution modulate(const ExactSolution& e, const GeometrySpec& sp, double c) {
    const double k = 2.0 * std::numbers::pi / sp.height(), y0 = sp.y0;
    auto m = [=](double y) { return 1.0 + c * std::cos(k * (y - y0)); };
    auto my = [=](double y) { return -c * k * std::sin(k * (y - y0)); };
    auto myy = [=](double y) { return -c * k * k * std::cos(k * (y - y0)); };
    ExactSolution r;
    r.value = [=](int s, double t, const Point& p) { return e.value(s, t, p) * m(p[1]); };
    r.dt = [=](int s, double t, const Point& p) { return e.dt(s, t, p) * m(p[1]); };
    r.grad = [=](int s, double t, const Point& p) {
        return Vec2{e.grad(s, t, p)[0] * m(p[1]), e.value(s, t, p) * my(p[1])};
    };
    r.hessian = [=](int s, double t, const Point& p) {
        double v = e.value(s, t, p), vx = e.grad(s, t, p)[0], vxx = e.hessian(s, t, p).a11;
        return Mat2::symmetric(vxx * m(p[1]), vx * my(p[1]), v * myy(p[1]));
    };
    return r;
}

} // namespace detail

/// Smooth manufactured solution with nonzero trace and flux jumps.
inline ExactSolution smooth_jump_solution(const GeometrySpec& sp) {
    ExactSolution e = solver::smooth_jump_solution_1d(sp);
    return sp.dimension == 1 ? e : detail::modulate(e, sp, 0.3);
}

/// y_i = c_i e^{t-T} (1 - ((x - x_S)/r)^2)^4 for |x - x_S| < r, zero elsewhere,
/// with c_1 = 1, c_2 = 1/2; supported in the closed r-neighbourhood of S.
inline ExactSolution local_bump_solution(const GeometrySpec& sp, double r) {
    const double xs = sp.interface_x, T = sp.T;
    auto u = [=](double x) { return (x - xs) / r; };
    auto b = [=](double x) { double q = 1.0 - u(x) * u(x); return std::abs(u(x)) >= 1.0 ? 0.0 : q * q * q * q; };
    auto b1 = [=](double x) {
        double q = 1.0 - u(x) * u(x);
        return std::abs(u(x)) >= 1.0 ? 0.0 : -8.0 * u(x) * q * q * q / r;
    };
    auto b2 = [=](double x) {
        double q = 1.0 - u(x) * u(x);
        return std::abs(u(x)) >= 1.0 ? 0.0 : (48.0 * u(x) * u(x) * q * q - 8.0 * q * q * q) / (r * r);
    };
    auto c = [](int s) { return s == 1 ? 1.0 : 0.5; };
    ExactSolution e;
    e.value = [=](int s, double t, const Point& p) { return c(s) * std::exp(t - T) * b(p[0]); };
    e.dt = e.value;
    e.grad = [=](int s, double t, const Point& p) { return Vec2{c(s) * std::exp(t - T) * b1(p[0]), 0.0}; };
    e.hessian = [=](int s, double t, const Point& p) { return Mat2::diag(c(s) * std::exp(t - T) * b2(p[0]), 0.0); };
    return sp.dimension == 1 ? e : detail::modulate(e, sp, 0.3);
}

/// y(0) = sin(pi (x - x0) / (x1 - x0)), continuous across S and zero on Gamma.
inline domain::PiecewiseField sine_initial(const domain::Grid& g) {
    const auto& sp = g.spec;
    return domain::sample(g, 0.0, [&](int, double, const Point& p) {
        return std::sin(std::numbers::pi * (p[0] - sp.x0) / sp.width());
    });
}

/// Steady piecewise-linear state y_1 = x, y_2 = 2x - 0.5 (flux continuous for a = 2, a~ = 1).
inline solver::TransmissionProblem steady_jump_problem(const domain::Grid& g) {
    solver::TransmissionProblem pb;
    pb.grid = g;
    pb.diffusion = domain::piecewise_constant(Mat2::diag(2.0, 2.0), Mat2::diag(1.0, 1.0), 0.5);
    solver::BoundaryData ex = [](int sub, double, const Point& p) { return sub == 1 ? p[0] : 2.0 * p[0] - 0.5; };
    pb.end_data = domain::sample(g, g.spec.T, ex);
    pb.boundary = ex;
    return pb;
}

} // namespace carleman::scenarios
