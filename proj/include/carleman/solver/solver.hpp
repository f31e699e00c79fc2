#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "carleman/domain/state.hpp"
#include "carleman/io.hpp"

namespace carleman::solver {

using domain::DiffusionPair;
using domain::Grid;
using domain::InterfaceSeries;
using domain::PiecewiseField;
using domain::TransmissionState;

enum class Direction { backward, forward };

/// Outer Dirichlet data g(sub, t, x); empty means homogeneous.
using BoundaryData = std::function<double(int sub, double t, const Point& x)>;

struct TransmissionProblem {
    Grid grid;
    DiffusionPair diffusion;
    std::vector<PiecewiseField> f;  ///< per time level; empty means zero
    InterfaceSeries beta1, beta2;   ///< per time level; empty means zero
    PiecewiseField end_data;        ///< y(T) (backward) or y(0) (forward); empty means zero
    Direction direction = Direction::backward;
    BoundaryData boundary;
    double cg_tol = 1e-10;
};

/// Lattice operators on the stacked vector [y_1 nodes; y_2 nodes]. Free
/// unknowns are the nodes of global columns 1..nx-1 on unique rows, so the
/// two interface slots share one unknown and the periodic image row shares
/// the unknowns of row 0. Stacked = P u + lift.
class Discretization {
public:
    explicit Discretization(const Grid& g) : g_(g) {
        rows_u_ = g.dim == 1 ? 1 : g.ny;
        n_free_ = (g.nx - 1) * rows_u_;
        n_stacked_ = g.size(1) + g.size(2);
        dof_.assign(static_cast<std::size_t>(n_stacked_), -1);
        Triplets trip;
        mass_.resize(n_stacked_);
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    int s = stacked(sub, i, j);
                    mass_[s] = g.node_weight(sub, i, j);
                    int gc = g.global_col(sub, i);
                    if (gc == 0 || gc == g.nx) continue;
                    int ju = g.dim == 1 ? 0 : j % g.ny;
                    int d = (gc - 1) * rows_u_ + ju;
                    dof_[static_cast<std::size_t>(s)] = d;
                    trip.emplace_back(s, d, 1.0);
                }
        P_.resize(n_stacked_, n_free_);
        P_.setFromTriplets(trip.begin(), trip.end());
        Pt_ = P_.transpose();
    }

    const Grid& grid() const { return g_; }
    int free_size() const { return n_free_; }
    int stacked_size() const { return n_stacked_; }
    int stacked(int sub, int i, int j) const { return (sub == 1 ? 0 : g_.size(1)) + g_.index(sub, i, j); }
    int dof(int s) const { return dof_[static_cast<std::size_t>(s)]; }
    const SparseMatrix& P() const { return P_; }
    const SparseMatrix& Pt() const { return Pt_; }
    const Eigen::VectorXd& mass() const { return mass_; }

    /// Block-diagonal stiffness on the stacked vector at time t: P1 in 1D,
    /// Q1 with 2x2 Gauss points and the cell-centre tensor in 2D.
    SparseMatrix stiffness(const DiffusionPair& diff, double t) const {
        Triplets trip;
        const Grid& g = g_;
        for (int sub = 1; sub <= 2; ++sub) {
            const auto& A = sub == 1 ? diff.a : diff.a_tilde;
            if (g.dim == 1) {
                for (int i = 0; i + 1 < g.cols(sub); ++i) {
                    Point c{0.5 * (g.node(sub, i, 0)[0] + g.node(sub, i + 1, 0)[0]), 0.0};
                    double k = A(t, c).a11 / g.hx;
                    int a = stacked(sub, i, 0), b = stacked(sub, i + 1, 0);
                    trip.emplace_back(a, a, k);
                    trip.emplace_back(b, b, k);
                    trip.emplace_back(a, b, -k);
                    trip.emplace_back(b, a, -k);
                }
                continue;
            }
            const double gp = 0.5 / std::sqrt(3.0);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i + 1 < g.cols(sub); ++i) {
                    Point p0 = g.node(sub, i, j);
                    Point c{p0[0] + 0.5 * g.hx, p0[1] + 0.5 * g.hy};
                    Mat2 Am = A(t, c).symmetrized();
                    int ids[4] = {stacked(sub, i, j), stacked(sub, i + 1, j), stacked(sub, i, j + 1),
                                  stacked(sub, i + 1, j + 1)};
                    double ke[4][4] = {};
                    for (double qx : {0.5 - gp, 0.5 + gp})
                        for (double qy : {0.5 - gp, 0.5 + gp}) {
                            // gradients of the bilinear basis at (qx, qy) in reference coordinates
                            double gx[4] = {-(1 - qy) / g.hx, (1 - qy) / g.hx, -qy / g.hx, qy / g.hx};
                            double gy[4] = {-(1 - qx) / g.hy, -qx / g.hy, (1 - qx) / g.hy, qx / g.hy};
                            double w = 0.25 * g.hx * g.hy;
                            for (int a = 0; a < 4; ++a)
                                for (int b = 0; b < 4; ++b)
                                    ke[a][b] += w * (gx[a] * (Am.a11 * gx[b] + Am.a12 * gy[b]) +
                                                     gy[a] * (Am.a21 * gx[b] + Am.a22 * gy[b]));
                        }
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b) trip.emplace_back(ids[a], ids[b], ke[a][b]);
                }
        }
        SparseMatrix K(n_stacked_, n_stacked_);
        K.setFromTriplets(trip.begin(), trip.end());
        return K;
    }

    /// P^T (M + dt K) P.
    SparseMatrix system(const SparseMatrix& K, double dt) const {
        SparseMatrix MK = dt * K;
        for (int s = 0; s < n_stacked_; ++s) MK.coeffRef(s, s) += mass_[s];
        SparseMatrix A = Pt_ * MK * P_;
        A.makeCompressed();
        return A;
    }

    Eigen::VectorXd to_stacked(const PiecewiseField& u) const {
        Eigen::VectorXd v(n_stacked_);
        for (int k = 0; k < g_.size(1); ++k) v[k] = u.v1[static_cast<std::size_t>(k)];
        for (int k = 0; k < g_.size(2); ++k) v[g_.size(1) + k] = u.v2[static_cast<std::size_t>(k)];
        return v;
    }

    PiecewiseField from_stacked(const Eigen::VectorXd& v) const {
        PiecewiseField u(g_);
        for (int k = 0; k < g_.size(1); ++k) u.v1[static_cast<std::size_t>(k)] = v[k];
        for (int k = 0; k < g_.size(2); ++k) u.v2[static_cast<std::size_t>(k)] = v[g_.size(1) + k];
        return u;
    }

    /// Lift: outer Dirichlet values and beta1 on the Omega_1 interface slots.
    Eigen::VectorXd lift(const BoundaryData& bd, double t, const std::vector<double>* beta1) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n_stacked_);
        const Grid& g = g_;
        for (int j = 0; j < g.rows(); ++j) {
            if (bd) {
                v[stacked(1, 0, j)] = bd(1, t, g.node(1, 0, j));
                v[stacked(2, g.cols(2) - 1, j)] = bd(2, t, g.node(2, g.cols(2) - 1, j));
            }
            if (beta1 && !beta1->empty()) v[stacked(1, g.s, j)] = (*beta1)[static_cast<std::size_t>(j)];
        }
        return v;
    }

    /// Load vector of the flux jump: beta2 times the interface weight, on the
    /// Omega_1 interface slots.
    Eigen::VectorXd interface_load(const std::vector<double>* beta2) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n_stacked_);
        if (!beta2 || beta2->empty()) return v;
        for (int j = 0; j < g_.rows(); ++j)
            v[stacked(1, g_.s, j)] = (*beta2)[static_cast<std::size_t>(j)] * g_.interface_weight(j);
        return v;
    }

    /// Free coordinates of a stacked vector (values of the Omega_2 slot on the interface).
    Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& v) const {
        Eigen::VectorXd u(n_free_);
        for (int s = 0; s < n_stacked_; ++s) {
            int d = dof(s);
            if (d >= 0) u[d] = v[s];
        }
        // the Omega_2 interface slot and row 0 are written last and win
        for (int j = 0; j < g_.rows(); ++j) {
            int s = stacked(2, 0, j);
            u[dof(s)] = v[s];
        }
        return u;
    }

private:
    Grid g_;
    int rows_u_ = 1, n_free_ = 0, n_stacked_ = 0;
    std::vector<int> dof_;
    Eigen::VectorXd mass_;
    SparseMatrix P_, Pt_;
};

namespace detail {

inline void check_problem(const TransmissionProblem& pb) {
    const Grid& g = pb.grid;
    auto tc = domain::check_tensor(pb.diffusion, g);
    require(tc.pass(), ErrorKind::assembly,
            "diffusion tensor violates symmetry or ellipticity (residual " + std::to_string(tc.symmetry_residual) +
                ", margin " + std::to_string(tc.ellipticity_margin) + ")");
    const std::size_t levels = static_cast<std::size_t>(g.nt + 1);
    require(pb.f.empty() || pb.f.size() == levels, ErrorKind::precondition, "source must have nt + 1 levels");
    require(pb.beta1.empty() || pb.beta1.size() == levels, ErrorKind::precondition, "beta1 must have nt + 1 levels");
    require(pb.beta2.empty() || pb.beta2.size() == levels, ErrorKind::precondition, "beta2 must have nt + 1 levels");
}

inline const std::vector<double>* level(const InterfaceSeries& s, int k) {
    return s.empty() ? nullptr : &s[static_cast<std::size_t>(k)];
}

} // namespace detail

/// Implicit Euler in the well-posed direction. Backward problems march from
/// t = T down to 0 (M + dt K) y_k = M y_{k+1} + dt (b_k - M f_k); forward ones
/// march up (M + dt K) y_{k+1} = M y_k + dt (b_{k+1} + M f_{k+1}).
inline TransmissionState solve(const TransmissionProblem& pb, const std::vector<PiecewiseField>* extra_source = nullptr) {
    detail::check_problem(pb);
    const Grid& g = pb.grid;
    Discretization D(g);
    TransmissionState st = domain::zero_state(g, pb.diffusion);
    if (!pb.f.empty()) st.f = pb.f;
    if (!pb.beta1.empty()) st.beta1 = pb.beta1;
    if (!pb.beta2.empty()) st.beta2 = pb.beta2;

    const bool back = pb.direction == Direction::backward;
    const int start = back ? g.nt : 0;
    PiecewiseField y0 = pb.end_data.v1.empty() ? PiecewiseField(g) : pb.end_data;
    st.y[static_cast<std::size_t>(start)] = y0;

    const Eigen::VectorXd& M = D.mass();
    SparseMatrix K, A;
    bool have = false;
    Eigen::VectorXd prev = D.to_stacked(y0);
    for (int n = 0; n < g.nt; ++n) {
        int k = back ? g.nt - 1 - n : n + 1;
        double t = g.t[static_cast<std::size_t>(k)];
        if (!have || pb.diffusion.time_dependent) {
            K = D.stiffness(pb.diffusion, t);
            A = D.system(K, g.dt);
            have = true;
        }
        Eigen::VectorXd rhs = M.cwiseProduct(prev) + g.dt * D.interface_load(detail::level(pb.beta2, k));
        auto add_source = [&](const PiecewiseField& f, double sign) {
            rhs += sign * g.dt * M.cwiseProduct(D.to_stacked(f));
        };
        if (!pb.f.empty()) add_source(pb.f[static_cast<std::size_t>(k)], back ? -1.0 : 1.0);
        if (extra_source && !extra_source->empty())
            add_source((*extra_source)[static_cast<std::size_t>(k)], back ? -1.0 : 1.0);
        Eigen::VectorXd lift = D.lift(pb.boundary, t, detail::level(pb.beta1, k));
        Eigen::VectorXd MK_lift = M.cwiseProduct(lift) + g.dt * (K * lift);
        Eigen::VectorXd b = D.Pt() * (rhs - MK_lift);
        Eigen::VectorXd u = D.restrict_to_free(prev - lift);
        solve_pcg(A, b, u, pb.cg_tol, 10 * std::max(1, D.free_size()));
        prev = D.P() * u + lift;
        st.y[static_cast<std::size_t>(k)] = D.from_stacked(prev);
    }
    return st;
}

/// Forward problem with a control source supported on omega.
inline TransmissionState solve_forward_controlled(const TransmissionProblem& pb, const std::vector<PiecewiseField>& control) {
    require(pb.direction == Direction::forward, ErrorKind::precondition, "controlled problems march forward");
    const Grid& g = pb.grid;
    require(control.empty() || control.size() == static_cast<std::size_t>(g.nt + 1), ErrorKind::precondition,
            "control must have nt + 1 levels");
    for (const auto& c : control)
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i)
                    if (c.at(g, sub, i, j) != 0.0 && !g.spec.omega.contains(g.node(sub, i, j), g.dim))
                        throw Error(ErrorKind::precondition, "control is nonzero outside omega at x = " +
                                                                 std::to_string(g.node(sub, i, j)[0]));
    return solve(pb, &control);
}

/// Exact solution with the derivatives needed to manufacture data.
struct ExactSolution {
    std::function<double(int sub, double t, const Point& x)> value;
    std::function<double(int sub, double t, const Point& x)> dt;
    std::function<Vec2(int sub, double t, const Point& x)> grad;
    std::function<Mat2(int sub, double t, const Point& x)> hessian;
};

/// Problem whose exact solution is `ex` for spatially constant tensors:
/// f = y_t + sum a^ij y_ij (backward sign convention), beta from the traces.
inline TransmissionProblem manufactured_problem(const Grid& g, const DiffusionPair& diff, const ExactSolution& ex) {
    TransmissionProblem pb;
    pb.grid = g;
    pb.diffusion = diff;
    pb.direction = Direction::backward;
    pb.f.resize(static_cast<std::size_t>(g.nt + 1));
    for (int k = 0; k <= g.nt; ++k) {
        double t = g.t[static_cast<std::size_t>(k)];
        pb.f[static_cast<std::size_t>(k)] = domain::sample(g, t, [&](int sub, double tt, const Point& p) {
            Mat2 A = diff.on(sub, tt, p);
            Mat2 H = ex.hessian(sub, tt, p);
            double s = A.a11 * H.a11;
            if (g.dim == 2) s += A.a12 * H.a21 + A.a21 * H.a12 + A.a22 * H.a22;
            return ex.dt(sub, tt, p) + s;
        });
    }
    pb.beta1 = domain::sample_interface(g, [&](double t, const Point& p) { return ex.value(1, t, p) - ex.value(2, t, p); });
    pb.beta2 = domain::sample_interface(g, [&](double t, const Point& p) {
        Vec2 nu = g.spec.interface_normal(p);
        return diff.a(t, p).form(ex.grad(1, t, p), nu) - diff.a_tilde(t, p).form(ex.grad(2, t, p), nu);
    });
    pb.end_data = domain::sample(g, g.spec.T, [&](int sub, double t, const Point& p) { return ex.value(sub, t, p); });
    pb.boundary = [ex](int sub, double t, const Point& p) { return ex.value(sub, t, p); };
    return pb;
}

/// The exact solution sampled on the lattice with its manufactured data.
inline TransmissionState sampled_state(const Grid& g, const DiffusionPair& diff, const ExactSolution& ex) {
    TransmissionProblem pb = manufactured_problem(g, diff, ex);
    TransmissionState st = domain::zero_state(g, diff);
    st.f = pb.f;
    st.beta1 = pb.beta1;
    st.beta2 = pb.beta2;
    for (int k = 0; k <= g.nt; ++k)
        st.y[static_cast<std::size_t>(k)] =
            domain::sample(g, g.t[static_cast<std::size_t>(k)], [&](int sub, double t, const Point& p) { return ex.value(sub, t, p); });
    return st;
}

/// Max nodal error over all time levels.
inline double max_error(const TransmissionState& st, const ExactSolution& ex) {
    const Grid& g = st.grid;
    double e = 0.0;
    for (int k = 0; k <= g.nt; ++k)
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i)
                    e = std::max(e, std::abs(st.at(k).at(g, sub, i, j) -
                                             ex.value(sub, g.t[static_cast<std::size_t>(k)], g.node(sub, i, j))));
    return e;
}

struct ConvergenceResult {
    std::vector<double> steps, errors;
    double order = 0.0;
    bool exact = false; ///< errors at the rounding floor, order not measurable
};

/// Least-squares slope of log error against log step; `run(level)` returns
/// (step, error) for each refinement level.
inline ConvergenceResult convergence_study(const std::function<std::pair<double, double>(int)>& run, int levels) {
    require(levels >= 3, ErrorKind::precondition, "convergence study needs at least 3 refinement levels");
    ConvergenceResult r;
    for (int l = 0; l < levels; ++l) {
        auto [h, e] = run(l);
        r.steps.push_back(h);
        r.errors.push_back(e);
    }
    if (r.errors.front() < 1e-13) {
        r.exact = true;
        return r;
    }
    r.order = log_log_slope(r.steps, r.errors);
    return r;
}

/// 1D manufactured solution with nonzero trace and flux jumps:
/// y1 = e^{t-T} sin(k1 (x - x0)), y2 = 0.8 e^{t-T} cos(k2 (x - x_S)),
/// k1 = pi / (2 (x_S - x0)), k2 = pi / (2 (x1 - x_S)); both vanish on Gamma.
inline ExactSolution smooth_jump_solution_1d(const domain::GeometrySpec& sp) {
    const double T = sp.T, x0 = sp.x0, x1 = sp.x1, xs = sp.interface_x;
    const double k1 = std::numbers::pi / (2.0 * (xs - x0)), k2 = std::numbers::pi / (2.0 * (x1 - xs));
    ExactSolution ex;
    auto e = [T](double t) { return std::exp(t - T); };
    ex.value = [=](int sub, double t, const Point& p) {
        return sub == 1 ? e(t) * std::sin(k1 * (p[0] - x0)) : 0.8 * e(t) * std::cos(k2 * (p[0] - xs));
    };
    ex.dt = ex.value;
    ex.grad = [=](int sub, double t, const Point& p) {
        return sub == 1 ? Vec2{e(t) * k1 * std::cos(k1 * (p[0] - x0)), 0.0}
                        : Vec2{-0.8 * e(t) * k2 * std::sin(k2 * (p[0] - xs)), 0.0};
    };
    ex.hessian = [=](int sub, double t, const Point& p) {
        double h = sub == 1 ? -k1 * k1 * e(t) * std::sin(k1 * (p[0] - x0)) : -0.8 * k2 * k2 * e(t) * std::cos(k2 * (p[0] - xs));
        return Mat2{h, 0.0, 0.0, 0.0};
    };
    return ex;
}

/// CSV time slices: t, x, [y], value, subdomain.
inline void write_state_csv(std::ostream& out, const TransmissionState& st, const std::vector<int>& levels) {
    const Grid& g = st.grid;
    out << (g.dim == 2 ? "t,x,y,value,subdomain\n" : "t,x,value,subdomain\n");
    for (int k : levels)
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    Point p = g.node(sub, i, j);
                    out << io::fmt(g.t[static_cast<std::size_t>(k)]) << ',' << io::fmt(p[0]) << ',';
                    if (g.dim == 2) out << io::fmt(p[1]) << ',';
                    out << io::fmt(st.at(k).at(g, sub, i, j)) << ',' << sub << '\n';
                }
}

} // namespace carleman::solver
