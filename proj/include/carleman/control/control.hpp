#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "carleman/io.hpp"
#include "carleman/solver/solver.hpp"

namespace carleman::control {

using domain::Grid;
using domain::PiecewiseField;
using solver::TransmissionProblem;

struct ControlProblem {
    TransmissionProblem forward; ///< forward direction, end_data = y(0), zero jumps
    double epsilon_pen = 1e-6;
    double cg_tol = 1e-10;       ///< relative to the initial residual
    int max_iter = 500;
};

struct HistoryRow {
    int iteration = 0;
    double J = 0.0, grad_norm = 0.0, final_norm = 0.0;
};

struct ControlResult {
    std::vector<PiecewiseField> control; ///< per time level, zero off omega
    PiecewiseField z_T;
    double final_norm = 0.0;   ///< ||y(T)||_{L2(Omega)} under the control
    double initial_norm = 0.0; ///< ||y(0)||
    double cost = 0.0;         ///< ||control||^2 over (0,T) x omega
    int iterations = 0;
    bool converged = false;
    bool hypothesis_violated = false;
    std::vector<HistoryRow> history;
};

/// Lumped L2(Omega) inner product.
inline double inner(const Grid& g, const PiecewiseField& a, const PiecewiseField& b) {
    double s = 0.0;
    for (int sub = 1; sub <= 2; ++sub)
        for (int j = 0; j < g.rows(); ++j)
            for (int i = 0; i < g.cols(sub); ++i) s += g.node_weight(sub, i, j) * a.at(g, sub, i, j) * b.at(g, sub, i, j);
    return s;
}

inline double l2_norm(const Grid& g, const PiecewiseField& a) { return std::sqrt(inner(g, a, a)); }

inline PiecewiseField axpy(double alpha, const PiecewiseField& x, const PiecewiseField& y) {
    PiecewiseField r = y;
    for (std::size_t k = 0; k < r.v1.size(); ++k) r.v1[k] += alpha * x.v1[k];
    for (std::size_t k = 0; k < r.v2.size(); ++k) r.v2[k] += alpha * x.v2[k];
    return r;
}

/// Random datum that is continuous across S, periodic and zero on Gamma.
inline PiecewiseField random_datum(const Grid& g, std::uint64_t seed) {
    solver::Discretization D(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u(D.free_size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = nd(rng);
    return D.from_stacked(D.P() * u);
}

namespace detail {

inline void check(const ControlProblem& cp) {
    require(cp.epsilon_pen > 0.0, ErrorKind::precondition, "penalty epsilon_pen must be positive");
    require(cp.forward.direction == solver::Direction::forward, ErrorKind::precondition,
            "control problems march forward");
}

/// Adjoint from terminal datum z: backward solve with zero data, then the
/// control h_k = 1_omega q_{k-1} at forward level k (h_0 = 0), the exact
/// transpose of the implicit Euler control-to-state map.
inline std::vector<PiecewiseField> adjoint_control(const ControlProblem& cp, const PiecewiseField& z) {
    const Grid& g = cp.forward.grid;
    TransmissionProblem adj;
    adj.grid = g;
    adj.diffusion = cp.forward.diffusion;
    adj.direction = solver::Direction::backward;
    adj.end_data = z;
    adj.cg_tol = cp.forward.cg_tol;
    auto st = solver::solve(adj);
    std::vector<PiecewiseField> h(static_cast<std::size_t>(g.nt + 1), PiecewiseField(g));
    for (int k = 1; k <= g.nt; ++k) {
        const PiecewiseField& q = st.at(k - 1);
        PiecewiseField& hk = h[static_cast<std::size_t>(k)];
        for (int sub = 1; sub <= 2; ++sub)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i)
                    if (g.spec.omega.contains(g.node(sub, i, j), g.dim)) hk.at(g, sub, i, j) = q.at(g, sub, i, j);
    }
    return h;
}

inline double control_cost(const Grid& g, const std::vector<PiecewiseField>& h) {
    double s = 0.0;
    for (int k = 1; k <= g.nt; ++k) s += g.dt * inner(g, h[static_cast<std::size_t>(k)], h[static_cast<std::size_t>(k)]);
    return s;
}

/// y(T) from initial data y0 (or zero) under control h.
inline PiecewiseField final_state(const ControlProblem& cp, const std::vector<PiecewiseField>& h, bool with_initial) {
    TransmissionProblem pb = cp.forward;
    if (!with_initial) pb.end_data = PiecewiseField(pb.grid);
    return solver::solve_forward_controlled(pb, h).at(pb.grid.nt);
}

} // namespace detail

/// J(z_T) = 1/2 int int_omega q^2 + eps/2 ||z_T||^2 + <y_free(T), z_T>.
inline double objective(const ControlProblem& cp, const PiecewiseField& z) {
    detail::check(cp);
    const Grid& g = cp.forward.grid;
    auto h = detail::adjoint_control(cp, z);
    PiecewiseField yfree = detail::final_state(cp, {}, true);
    return 0.5 * detail::control_cost(g, h) + 0.5 * cp.epsilon_pen * inner(g, z, z) + inner(g, yfree, z);
}

/// L2(Omega) gradient of J: y(T) under the control generated by z, plus eps z.
/// One adjoint (backward) and one forward solve.
inline PiecewiseField compute_gradient(const ControlProblem& cp, const PiecewiseField& z) {
    detail::check(cp);
    require(z.v1.size() == static_cast<std::size_t>(cp.forward.grid.size(1)) &&
                z.v2.size() == static_cast<std::size_t>(cp.forward.grid.size(2)),
            ErrorKind::precondition, "adjoint datum does not match the grid");
    auto h = detail::adjoint_control(cp, z);
    return axpy(cp.epsilon_pen, z, detail::final_state(cp, h, true));
}

/// Penalized HUM by conjugate gradients on H z = L L* z + eps z = -y_free(T)
/// in the L2(Omega) inner product. The control is the omega-restriction of
/// the adjoint state of the final iterate.
inline ControlResult hum_null_control(const ControlProblem& cp) {
    detail::check(cp);
    const Grid& g = cp.forward.grid;
    ControlResult res;
    res.hypothesis_violated = !domain::check_geometry(g).omega_meets_both;
    PiecewiseField y0 = cp.forward.end_data.v1.empty() ? PiecewiseField(g) : cp.forward.end_data;
    res.initial_norm = l2_norm(g, y0);

    auto H = [&](const PiecewiseField& p) {
        return axpy(cp.epsilon_pen, p, detail::final_state(cp, detail::adjoint_control(cp, p), false));
    };
    PiecewiseField yfree = detail::final_state(cp, {}, true);
    PiecewiseField z(g), Hz(g);
    PiecewiseField r = axpy(-1.0, yfree, PiecewiseField(g));
    PiecewiseField p = r;
    double rr = inner(g, r, r);
    const double r0 = std::sqrt(rr);
    auto J_of = [&]() { return 0.5 * inner(g, z, Hz) + inner(g, yfree, z); };
    auto record = [&](int it) {
        // y(T) under the current control is yfree + L L* z = yfree + Hz - eps z
        PiecewiseField yT = axpy(-cp.epsilon_pen, z, axpy(1.0, Hz, yfree));
        res.history.push_back({it, J_of(), std::sqrt(rr), l2_norm(g, yT)});
    };
    record(0);
    res.converged = r0 == 0.0;
    int it = 0;
    while (!res.converged && it < cp.max_iter) {
        PiecewiseField Hp = H(p);
        double pHp = inner(g, p, Hp);
        require(pHp > 0.0, ErrorKind::solver, "HUM operator lost positivity");
        double alpha = rr / pHp;
        z = axpy(alpha, p, z);
        Hz = axpy(alpha, Hp, Hz);
        r = axpy(-alpha, Hp, r);
        double rr_new = inner(g, r, r);
        p = axpy(rr_new / rr, p, r);
        rr = rr_new;
        ++it;
        record(it);
        res.converged = std::sqrt(rr) <= cp.cg_tol * r0;
    }
    res.iterations = it;
    res.z_T = z;
    res.control = detail::adjoint_control(cp, z);
    res.cost = detail::control_cost(g, res.control);
    res.final_norm = l2_norm(g, detail::final_state(cp, res.control, true));
    return res;
}

/// Convergence history: iteration, J, grad_norm, final_norm.
inline void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
    out << "iteration,J,grad_norm,final_norm\n";
    for (const auto& r : rows)
        out << r.iteration << ',' << io::fmt(r.J) << ',' << io::fmt(r.grad_norm) << ',' << io::fmt(r.final_norm) << '\n';
}

} // namespace carleman::control
