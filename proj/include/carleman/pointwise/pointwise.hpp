#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "carleman/io.hpp"
#include "carleman/jet.hpp"
#include "carleman/weights/theta.hpp"

namespace carleman::pointwise {

using J3 = Jet<3>;
using JetFn = std::function<J3(const J3& t, const J3& x, const J3& y)>;
/// Symmetric tensor as (b11, b12, b22).
using TensorJetFn = std::function<std::array<J3, 3>(const J3& t, const J3& x, const J3& y)>;

/// Closed-form test function u with weight psi and tensor b on (0,T) x (0,1)^n.
struct TestCase {
    std::string name;
    int dim = 1;
    JetFn u;
    JetFn psi;
    TensorJetFn b;
    double T = 1.0;
    double d = 2.0; ///< strictly above sup psi on the sample box
};

struct Sample {
    double t = 0.0;
    Point x{0.0, 0.0};
};

struct IDecomposition {
    double I1 = 0.0, I2 = 0.0, I3 = 0.0;
    double residual = 0.0; ///< I1 + I2 - I3
    double relative = 0.0;
};

struct JExpansion {
    std::array<double, 9> J{};
    double product_residual = 0.0; ///< relative, I1 I2 - sum J
    /// relative residuals of the expansions of J1, J2, J3, J4, J5, J7, J8
    std::array<double, 7> identity_residual{};
    double full_residual = 0.0; ///< relative, I1 I2 against the reorganised identity
};

/// Inequality objects at one point. Every quantity quadratic in v is carried with
/// the normalised weight theta / theta(t, x); log_theta restores the scale.
struct Coefficients {
    double v = 0.0, v_t = 0.0;
    Vec2 grad_v{0.0, 0.0};
    double M = 0.0, M_t = 0.0;
    Vec2 V{0.0, 0.0};
    double div_V = 0.0;
    Mat2 c;       ///< displayed c^ij
    Mat2 c_exact; ///< with the 1/2 b_t actually produced by the J_1 expansion
    double B_exact = 0.0; ///< exact v^2 coefficient of the J-identities
    double B_lower0 = 0.0; ///< displayed lower bound for B without the C terms
    double B_lower_c = 0.0; ///< coefficient of C in the displayed bound (positive)
    double varphi = 0.0;
    double log_theta = 0.0;
    double lhs = 0.0; ///< theta^2 |u_t + sum b u_ij|^2
    double rhs0 = 0.0; ///< rhs(C) = rhs0 - C K
    double K = 0.0;

    double B_lower(double C) const { return B_lower0 - C * B_lower_c; }
    double rhs(double C) const { return rhs0 - C * K; }
};

namespace detail {

/// Accumulates a signed sum and the largest magnitude among its terms.
struct Sum {
    double value = 0.0, scale = 0.0;
    void add(double v) {
        value += v;
        scale = std::max(scale, std::abs(v));
    }
};

inline double relative(double residual, double scale) { return scale > 0.0 ? std::abs(residual) / scale : 0.0; }

/// All jets at one point.
struct PointJets {
    int n = 1;
    double lambda = 0.0, mu = 0.0, eps = 0.1;
    J3 u, psi, phi, alpha, theta, v;
    std::array<std::array<J3, 2>, 2> b;
    double log_theta = 0.0;

    PointJets(const TestCase& tc, const weights::ThetaFamily& fam, const Sample& s) {
        require(s.t > fam.ta() && s.t < fam.tb(), ErrorKind::singularity,
                "pointwise sample at t = " + std::to_string(s.t) + " is outside the open window");
        n = tc.dim;
        const auto& p = fam.params();
        lambda = p.lambda;
        mu = p.mu;
        eps = p.epsilon;
        J3 T = J3::variable(0, s.t), X = J3::variable(1, s.x[0]), Y = J3::variable(2, n == 2 ? s.x[1] : 0.0);
        u = tc.u(T, X, Y);
        psi = tc.psi(T, X, Y);
        if (fam.sign() == weights::ThetaSign::hat) psi = -psi;
        auto bb = tc.b(T, X, Y);
        b = {{{bb[0], bb[1]}, {bb[1], bb[2]}}};
        J3 w = (T - fam.ta()) * (fam.tb() - T);
        J3 E = exp(mu * psi);
        phi = E / w;
        alpha = (E - std::exp(mu * p.d)) / w;
        double a0 = alpha.value();
        log_theta = lambda * a0;
        theta = exp(lambda * (alpha - a0));
        v = theta * u;
    }
};

} // namespace detail

/// Catalog of closed-form test functions covering polynomials and
/// trig x exponential products, constant and variable tensors, time-dependent psi.
inline std::vector<TestCase> catalog() {
    using std::numbers::pi;
    std::vector<TestCase> c;
    auto unit = [](const J3&, const J3&, const J3&) { return std::array<J3, 3>{J3(1.0), J3(0.0), J3(1.0)}; };
    c.push_back({"poly_1d", 1, [](const J3& t, const J3& x, const J3&) { return x * x + t; },
                 [](const J3&, const J3& x, const J3&) { return 0.2 + 0.6 * x; }, unit, 1.0, 2.0});
    c.push_back({"trig_exp_1d", 1, [](const J3& t, const J3& x, const J3&) { return sin(pi * x) * exp(t); },
                 [](const J3&, const J3& x, const J3&) { return 0.2 + 0.6 * x; }, unit, 1.0, 2.0});
    c.push_back({"poly_varb_1d", 1,
                 [](const J3& t, const J3& x, const J3&) { return 1.0 + x * x * x - t * x; },
                 [](const J3& t, const J3& x, const J3&) { return (0.3 + 0.5 * x) * (1.0 + 0.1 * sin(t)); },
                 [](const J3& t, const J3& x, const J3&) {
                     return std::array<J3, 3>{1.0 + 0.5 * x * x + 0.2 * sin(t), J3(0.0), J3(1.0)};
                 },
                 1.0, 2.0});
    c.push_back({"poly_2d", 2, [](const J3& t, const J3& x, const J3& y) { return x * x * y + t * x + y * y; },
                 [](const J3&, const J3& x, const J3& y) { return 0.3 + 0.4 * x + 0.2 * y; },
                 [](const J3&, const J3&, const J3&) { return std::array<J3, 3>{J3(2.0), J3(0.3), J3(1.0)}; }, 1.0,
                 2.0});
    c.push_back({"trig_exp_2d", 2,
                 [](const J3& t, const J3& x, const J3& y) { return sin(pi * x) * cos(pi * y) * exp(-t); },
                 [](const J3& t, const J3& x, const J3& y) {
                     return 0.3 + 0.4 * x + 0.1 * sin(pi * y) * (1.0 + 0.1 * t);
                 },
                 [](const J3& t, const J3& x, const J3& y) {
                     return std::array<J3, 3>{1.5 + 0.3 * sin(x), 0.2 * x * y, 1.0 + 0.2 * y * y + 0.1 * t};
                 },
                 1.0, 2.0});
    return c;
}

/// Sample set: 5 interior time levels x the (n_space + 1)^dim lattice of
/// [0,1]^dim, plus `random` seeded interior points.
inline std::vector<Sample> sample_set(const TestCase& tc, int n_space = 8, int random = 100, std::uint64_t seed = 7) {
    std::vector<Sample> s;
    for (int k = 1; k <= 5; ++k) {
        double t = tc.T * k / 6.0;
        for (int j = 0; j <= (tc.dim == 2 ? n_space : 0); ++j)
            for (int i = 0; i <= n_space; ++i)
                s.push_back({t, {static_cast<double>(i) / n_space, tc.dim == 2 ? static_cast<double>(j) / n_space : 0.0}});
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int r = 0; r < random; ++r) {
        double t = tc.T * (0.02 + 0.96 * U(rng));
        double x = U(rng);
        double y = U(rng);
        s.push_back({t, {x, tc.dim == 2 ? y : 0.0}});
    }
    return s;
}

inline weights::ThetaFamily family_for(const TestCase& tc, weights::CarlemanParams p) {
    p.d = tc.d;
    return weights::ThetaFamily(p, tc.d - 1e-12, 0.0, tc.T);
}

namespace detail {

/// Shared evaluation of the J terms, their expansions, and the coefficient objects.
struct Evaluation {
    IDecomposition I;
    JExpansion J;
    Coefficients C;
};

inline Evaluation evaluate(const TestCase& tc, const weights::ThetaFamily& fam, const Sample& s) {
    PointJets P(tc, fam, s);
    const int n = P.n;
    const double l = P.lambda, m = P.mu, eps = P.eps;
    using J2 = Jet<2>;
    using J1 = Jet<1>;

    const J3& v = P.v;
    const J3& phi = P.phi;
    std::array<J2, 2> vi{d_x(v, 0), d_x(v, 1)};
    J2 vt = d_t(v);
    std::array<J2, 2> pi{d_x(P.psi, 0), d_x(P.psi, 1)};
    J2 at = d_t(P.alpha);
    J2 phi2 = J2(phi);
    J2 v2 = J2(v);
    auto B = [&](int i, int j) { return J2(P.b[i][j]); };
    auto bx = [&](int i, int j, int k) { return d_x(P.b[i][j], k); }; // b^ij_{x_k}
    auto bt = [&](int i, int j) { return d_t(P.b[i][j]); };

    J2 S(0.0), bpv(0.0), bvv(0.0);
    std::array<J2, 2> bpsi{J2(0.0), J2(0.0)}; // sum_k b^{kl} psi_k, indexed by l
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            S = S + B(i, j) * pi[i] * pi[j];
            bpv = bpv + B(i, j) * pi[i] * vi[j];
            bvv = bvv + B(i, j) * vi[i] * vi[j];
            bpsi[j] = bpsi[j] + B(i, j) * pi[i];
        }
    double div_bpsi = 0.0; // sum (b^{kl} psi_k)_l
    for (int j = 0; j < n; ++j) div_bpsi += d_x(bpsi[j], j).value();

    const double phv = phi.value(), vv = v.value(), vtv = vt.value(), Sv = S.value();
    const double atv = at.value();
    const double phit = d_t(phi).value();
    const double att = d_t(d_t(P.alpha)).value();

    double bvij = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) bvij += P.b[i][j].value() * d_x(vi[i], j).value();

    Evaluation E;
    // I decomposition
    double Lu = P.u.derivative(1, 0, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Lu += P.b[i][j].value() * P.u.derivative(0, (i == 0) + (j == 0), (i == 1) + (j == 1));
    double bpp = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) bpp += P.b[i][j].value() * d_x(pi[i], j).value();
    const double th = P.theta.value();
    const double A1 = bvij, A2 = l * l * m * m * phv * phv * Sv * vv, A3 = -l * atv * vv;
    const double B1 = vtv, B2 = -2.0 * l * m * phv * bpv.value(), B3 = -2.0 * l * m * m * phv * Sv * vv;
    E.I.I1 = A1 + A2 + A3;
    E.I.I2 = B1 + B2 + B3;
    E.I.I3 = th * Lu - l * m * m * phv * Sv * vv + l * m * phv * bpp * vv;
    E.I.residual = E.I.I1 + E.I.I2 - E.I.I3;
    E.I.relative = relative(E.I.residual, std::max({std::abs(E.I.I1), std::abs(E.I.I2), std::abs(E.I.I3)}));

    auto& J = E.J.J;
    J = {A1 * B1, A1 * B2, A1 * B3, A2 * B1, A2 * B2, A2 * B3, A3 * B1, A3 * B2, A3 * B3};
    {
        Sum s;
        for (double x : J) s.add(x);
        double prod = E.I.I1 * E.I.I2;
        E.J.product_residual = relative(prod - s.value, std::max(std::abs(prod), s.scale));
    }

    auto div = [&](const std::array<J2, 2>& F) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += d_x(F[j], j).value();
        return d;
    };
    double bj_vi_vt = 0.0; // sum b^ij_{x_j} v_i v_t
    double bt_vv = 0.0;    // sum b^ij_t v_i v_j
    double bj_vi_bpv = 0.0; // sum b^ij_{x_j} v_i (sum b psi v)
    double bv_dbpsi_v = 0.0; // sum b^ij v_i sum_kl (b^kl psi_k)_j v_l
    double bl_vv_bpsi = 0.0; // sum_ijl b^ij_{x_l} v_i v_j (b psi)_l
    double bj_vi = 0.0;     // sum b^ij_{x_j} v_i
    double bvi_dphiS = 0.0; // sum b^ij v_i (phi S)_j
    double bt_pp = 0.0;     // sum b^ij_t psi_i psi_j
    double b_p_pt = 0.0;    // sum b^ij psi_i psi_{j t}
    double a_tj_bpsi = 0.0; // sum_j alpha_{t x_j} (b psi)_j
    double lmphi_j_bpsi = 0.0; // sum_j (lambda^2 mu phi)_j (b psi)_j
    J1 phiS = J1(phi) * J1(S);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double vi_ = vi[i].value(), vj_ = vi[j].value();
            bj_vi_vt += bx(i, j, j).value() * vi_ * vtv;
            bt_vv += bt(i, j).value() * vi_ * vj_;
            bj_vi_bpv += bx(i, j, j).value() * vi_ * bpv.value();
            bj_vi += bx(i, j, j).value() * vi_;
            bvi_dphiS += P.b[i][j].value() * vi_ * d_x(phiS, j).value();
            bt_pp += bt(i, j).value() * pi[i].value() * pi[j].value();
            b_p_pt += P.b[i][j].value() * pi[i].value() * d_t(pi[j]).value();
            for (int k = 0; k < n; ++k)
                bl_vv_bpsi += bx(i, j, k).value() * vi_ * vj_ * bpsi[k].value();
            double dbpsi_v = 0.0;
            for (int ll = 0; ll < n; ++ll) dbpsi_v += d_x(bpsi[ll], j).value() * vi[ll].value();
            bv_dbpsi_v += P.b[i][j].value() * vi_ * dbpsi_v;
        }
    for (int j = 0; j < n; ++j) {
        a_tj_bpsi += d_x(at, j).value() * bpsi[j].value();
        lmphi_j_bpsi += l * l * m * d_x(phi, j).value() * bpsi[j].value();
    }

    // flux components of the divergence terms
    std::array<J2, 2> F1, F2, F3, F5, F8;
    for (int j = 0; j < 2; ++j) F1[j] = F2[j] = F3[j] = F5[j] = F8[j] = J2(0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            F1[j] = F1[j] + B(i, j) * vi[i] * vt;
            F2[j] = F2[j] + 2.0 * l * m * phi2 * B(i, j) * vi[i] * bpv - l * m * phi2 * B(i, j) * pi[i] * bvv;
            F3[j] = F3[j] + 2.0 * l * m * m * phi2 * B(i, j) * vi[i] * S * v2;
            F8[j] = F8[j] + l * l * m * phi2 * at * B(i, j) * pi[i] * v2 * v2;
        }
    for (int ll = 0; ll < n; ++ll) F5[ll] = l * l * l * m * m * m * phi2 * phi2 * phi2 * S * bpsi[ll] * v2 * v2;

    double SbpsiDiv = 0.0; // sum_l (S sum_k b^kl psi_k)_l
    for (int ll = 0; ll < n; ++ll) SbpsiDiv += d_x(S * bpsi[ll], ll).value();

    const double v2v = vv * vv;
    auto& R = E.J.identity_residual;
    auto expand = [&](double raw, std::initializer_list<double> parts) {
        Sum s;
        for (double x : parts) s.add(x);
        return relative(raw - s.value, std::max(std::abs(raw), s.scale));
    };
    const double bvv_t = d_t(bvv).value();
    R[0] = expand(J[0], {div(F1), -bj_vi_vt, -0.5 * bvv_t, 0.5 * bt_vv});
    R[1] = expand(J[1], {-div(F2), 2.0 * l * m * m * phv * bpv.value() * bpv.value(), 2.0 * l * m * phv * bj_vi_bpv,
                         2.0 * l * m * phv * bv_dbpsi_v, -l * m * m * phv * bvv.value() * Sv,
                         -l * m * phv * bvv.value() * div_bpsi, -l * m * phv * bl_vv_bpsi});
    R[2] = expand(J[2], {-div(F3), 2.0 * l * m * m * phv * bvv.value() * Sv, 2.0 * l * m * m * phv * bj_vi * Sv * vv,
                         2.0 * l * m * m * bvi_dphiS * vv});
    const J2 A4 = 0.5 * l * l * m * m * phi2 * phi2 * S * v2 * v2;
    R[3] = expand(J[3], {d_t(A4).value(), -l * l * m * m * phv * phit * Sv * v2v, -0.5 * l * l * m * m * phv * phv * bt_pp * v2v,
                         -l * l * m * m * phv * phv * b_p_pt * v2v});
    R[4] = expand(J[4], {-div(F5), 3.0 * l * l * l * m * m * m * m * phv * phv * phv * Sv * Sv * v2v,
                         l * l * l * m * m * m * phv * phv * phv * SbpsiDiv * v2v});
    const J2 A7 = -0.5 * l * at * v2 * v2;
    R[5] = expand(J[6], {d_t(A7).value(), 0.5 * l * att * v2v});
    R[6] = expand(J[7], {div(F8), -lmphi_j_bpsi * atv * v2v, -l * l * m * phv * a_tj_bpsi * v2v,
                         -l * l * m * phv * atv * div_bpsi * v2v});

    // coefficient objects
    Coefficients& C = E.C;
    C.v = vv;
    C.v_t = vtv;
    C.grad_v = {vi[0].value(), n == 2 ? vi[1].value() : 0.0};
    C.varphi = phv;
    C.log_theta = P.log_theta;
    J2 M = l * l * m * m * phi2 * phi2 * S * v2 * v2 - l * at * v2 * v2 - bvv;
    C.M = M.value();
    C.M_t = d_t(M).value();
    std::array<J2, 2> V;
    for (int j = 0; j < 2; ++j) V[j] = J2(0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            V[j] = V[j] + B(i, j) * vi[i] * vt -
                   l * m * phi2 * (2.0 * B(i, j) * vi[i] * bpv - B(i, j) * pi[i] * bvv) -
                   2.0 * l * m * m * phi2 * B(i, j) * vi[i] * S * v2 -
                   l * l * l * m * m * m * phi2 * phi2 * phi2 * B(i, j) * pi[i] * v2 * v2 * S +
                   l * l * m * phi2 * at * B(i, j) * pi[i] * v2 * v2;
    C.V = {V[0].value(), V[1].value()};
    C.div_V = div(V);

    double cm[2][2] = {{0, 0}, {0, 0}}, ce[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double bij = P.b[i][j].value();
            double s2 = m * bij * Sv - bij * div_bpsi;
            for (int k = 0; k < n; ++k) s2 -= bx(i, j, k).value() * bpsi[k].value();
            cm[i][j] = l * m * phv * s2 + bt(i, j).value();
            ce[i][j] = l * m * phv * s2 + 0.5 * bt(i, j).value();
        }
    C.c = {cm[0][0], cm[0][1], cm[1][0], cm[1][1]};
    C.c_exact = {ce[0][0], ce[0][1], ce[1][0], ce[1][1]};

    double bp_div = 0.0; // sum (b^ij psi_i)_j
    for (int j = 0; j < n; ++j) bp_div += d_x(bpsi[j], j).value();
    const double l2 = l * l, l3 = l2 * l, m2 = m * m, m3 = m2 * m, m4 = m2 * m2;
    const double p2 = phv * phv, p3 = p2 * phv;
    C.B_exact = l3 * m4 * p3 * Sv * Sv + l3 * m3 * p3 * SbpsiDiv - 2.0 * l2 * m2 * phv * phit * Sv +
                l2 * m2 * phv * atv * Sv - 0.5 * l2 * m2 * p2 * bt_pp - 2.0 * l2 * m2 * p2 * b_p_pt + 0.5 * l * att -
                l2 * m * phv * atv * bp_div;
    C.B_lower0 = l3 * m4 * p3 * Sv * Sv + l3 * m3 * p3 * SbpsiDiv - 2.0 * l2 * m2 * phv * (phit - atv) * Sv -
                 0.5 * l2 * m2 * p2 * bt_pp + 0.5 * l * att - l2 * m * phv * atv * bp_div -
                 2.0 * l2 * m2 * p2 * bpp * bpp - 2.0 * l2 * m4 * p2 * Sv * Sv;
    C.B_lower_c = l * m4 * phv + l2 * m4 * phv;

    // reorganised identity: I1 I2 = div V + M_t/2 + (grad v)^2 terms + v grad v terms + grad v v_t terms + B_exact v^2
    {
        Sum s;
        s.add(C.div_V);
        s.add(0.5 * C.M_t);
        s.add(0.5 * bt_vv);
        s.add(2.0 * l * m2 * phv * bpv.value() * bpv.value());
        s.add(2.0 * l * m * phv * bj_vi_bpv);
        s.add(2.0 * l * m * phv * bv_dbpsi_v);
        s.add(l * m2 * phv * bvv.value() * Sv);
        s.add(-l * m * phv * bvv.value() * div_bpsi);
        s.add(-l * m * phv * bl_vv_bpsi);
        s.add(2.0 * l * m2 * phv * bj_vi * Sv * vv);
        s.add(2.0 * l * m2 * bvi_dphiS * vv);
        s.add(-bj_vi_vt);
        s.add(C.B_exact * v2v);
        double prod = E.I.I1 * E.I.I2;
        E.J.full_residual = relative(prod - s.value, std::max(std::abs(prod), s.scale));
    }

    // the inequality: lhs >= rhs(C) = rhs0 - C K
    C.lhs = th * th * Lu * Lu;
    double grad2 = C.grad_v[0] * C.grad_v[0] + C.grad_v[1] * C.grad_v[1];
    double cvv = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cvv += cm[i][j] * vi[i].value() * vi[j].value();
    C.rhs0 = (l > 0.0 ? eps / (8.0 * l * phv) * vtv * vtv : 0.0) + C.div_V + 0.5 * C.M_t + cvv + C.B_lower0 * v2v;
    C.K = (eps * l * m2 + (eps > 0.0 ? l / eps : 0.0) + 2.0 * l * m + m2) * phv * grad2 + C.B_lower_c * v2v;
    return E;
}

} // namespace detail

inline IDecomposition decompose_I(const TestCase& tc, const weights::ThetaFamily& fam, const Sample& s) {
    return detail::evaluate(tc, fam, s).I;
}

inline JExpansion expand_J(const TestCase& tc, const weights::ThetaFamily& fam, const Sample& s) {
    return detail::evaluate(tc, fam, s).J;
}

inline Coefficients eval_coefficients(const TestCase& tc, const weights::ThetaFamily& fam, const Sample& s) {
    return detail::evaluate(tc, fam, s).C;
}

/// Geometric grid of candidate constants 2^{k/4}, k = 0..200 (C >= 1).
inline std::vector<double> default_c_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 200; ++k) g.push_back(std::exp2(k / 4.0));
    return g;
}

struct MarginRow {
    double lambda = 0.0, mu = 0.0;
    bool feasible = false;
    double C_exact = 0.0; ///< max over samples of (rhs0 - lhs)/K
    double C_min = 0.0;   ///< smallest grid value not below C_exact
    double margin = 0.0;  ///< min over samples of lhs - rhs(C_min), in theta-normalised units
    int worst_sample = -1;
};

/// Smallest C on the grid with lhs >= rhs(C) at every sample, per (lambda, mu).
inline std::vector<MarginRow> pointwise_margin(const TestCase& tc, const std::vector<weights::CarlemanParams>& ladder,
                                               const std::vector<Sample>& samples,
                                               const std::vector<double>& c_grid = default_c_grid()) {
    std::vector<MarginRow> rows;
    for (const auto& p : ladder) {
        p.validate();
        auto fam = family_for(tc, p);
        MarginRow row{p.lambda, p.mu};
        double cx = -std::numeric_limits<double>::infinity();
        std::vector<Coefficients> cs;
        cs.reserve(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            Coefficients c = eval_coefficients(tc, fam, samples[k]);
            double need = c.rhs0 - c.lhs;
            if (c.K > 0.0) {
                if (need / c.K > cx) {
                    cx = need / c.K;
                    row.worst_sample = static_cast<int>(k);
                }
            } else if (need > 1e-12 * std::max(std::abs(c.lhs), std::abs(c.rhs0))) {
                cx = std::numeric_limits<double>::infinity();
                row.worst_sample = static_cast<int>(k);
            }
            cs.push_back(c);
        }
        row.C_exact = cx;
        auto it = std::find_if(c_grid.begin(), c_grid.end(), [&](double c) { return c >= cx; });
        row.feasible = it != c_grid.end();
        row.C_min = row.feasible ? *it : std::numeric_limits<double>::infinity();
        row.margin = std::numeric_limits<double>::infinity();
        if (row.feasible)
            for (const auto& c : cs) row.margin = std::min(row.margin, c.lhs - c.rhs(row.C_min));
        if (cs.empty()) row.margin = 0.0;
        rows.push_back(row);
    }
    return rows;
}

/// Residual table rows: lambda, mu, sample_id, quantity, value.
inline void write_residual_csv(std::ostream& out, const TestCase& tc, const std::vector<weights::CarlemanParams>& ladder,
                               const std::vector<Sample>& samples) {
    out << "lambda,mu,sample_id,quantity,value\n";
    static const char* names[7] = {"J1", "J2", "J3", "J4", "J5", "J7", "J8"};
    for (const auto& p : ladder) {
        auto fam = family_for(tc, p);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            auto e = detail::evaluate(tc, fam, samples[k]);
            auto row = [&](const std::string& q, double v) {
                out << io::fmt(p.lambda) << ',' << io::fmt(p.mu) << ',' << k << ',' << q << ',' << io::fmt(v) << '\n';
            };
            row("I_residual", e.I.relative);
            row("product_residual", e.J.product_residual);
            row("full_residual", e.J.full_residual);
            for (int i = 0; i < 7; ++i) row(std::string(names[i]) + "_residual", e.J.identity_residual[static_cast<std::size_t>(i)]);
        }
    }
}

inline void write_margin_csv(std::ostream& out, const std::vector<MarginRow>& rows) {
    out << "lambda,mu,sample_id,quantity,value\n";
    for (const auto& r : rows) {
        auto row = [&](const std::string& q, double v) {
            out << io::fmt(r.lambda) << ',' << io::fmt(r.mu) << ',' << r.worst_sample << ',' << q << ',' << io::fmt(v) << '\n';
        };
        row("C_exact", r.C_exact);
        row("C_min", r.C_min);
        row("margin", r.margin);
    }
}

} // namespace carleman::pointwise
