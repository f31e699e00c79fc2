#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carleman/pointwise/pointwise.hpp"

using namespace carleman;
using namespace carleman::pointwise;
using weights::CarlemanParams;
using weights::ThetaFamily;

namespace {

TensorJetFn unit_b() {
    return [](const J3&, const J3&, const J3&) { return std::array<J3, 3>{J3(1.0), J3(0.0), J3(1.0)}; };
}

TestCase simple_1d(JetFn u, JetFn psi = [](const J3&, const J3& x, const J3&) { return 0.2 + 0.6 * x; }) {
    return {"simple", 1, std::move(u), std::move(psi), unit_b(), 1.0, 2.0};
}

ThetaFamily family(const TestCase& tc, double lambda, double mu, double eps = 0.1) {
    CarlemanParams p;
    p.lambda = lambda;
    p.mu = mu;
    p.epsilon = eps;
    p.d = tc.d;
    return ThetaFamily(p, tc.d - 1e-12, 0.0, tc.T);
}

std::vector<CarlemanParams> ladder(const std::vector<double>& lambdas, double mu) {
    std::vector<CarlemanParams> out;
    for (double l : lambdas) {
        CarlemanParams p;
        p.lambda = l;
        p.mu = mu;
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST(DecomposeI, ZeroFunctionGivesZeros) {
    auto tc = simple_1d([](const J3&, const J3&, const J3&) { return J3(0.0); });
    auto r = decompose_I(tc, family(tc, 10.0, 2.0), {0.4, {0.3, 0.0}});
    EXPECT_EQ(r.I1, 0.0);
    EXPECT_EQ(r.I2, 0.0);
    EXPECT_EQ(r.I3, 0.0);
    EXPECT_EQ(r.residual, 0.0);
    auto j = expand_J(tc, family(tc, 10.0, 2.0), {0.4, {0.3, 0.0}});
    for (double v : j.J) EXPECT_EQ(v, 0.0);
    for (double v : j.identity_residual) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(j.product_residual, 0.0);
}

TEST(DecomposeI, QuadraticResidualAtRounding) {
    auto tc = simple_1d([](const J3&, const J3& x, const J3&) { return x * x; });
    for (double l : {1.0, 50.0, 1e4})
        for (double m : {0.5, 3.0}) {
            auto r = decompose_I(tc, family(tc, l, m), {0.37, {0.61, 0.0}});
            EXPECT_LE(r.relative, 1e-10) << l << ' ' << m;
        }
}

TEST(DecomposeI, LambdaZeroReducesToOperator) {
    auto tc = simple_1d([](const J3& t, const J3& x, const J3&) { return x * x + t; });
    auto r = decompose_I(tc, family(tc, 0.0, 2.0), {0.5, {0.25, 0.0}});
    EXPECT_DOUBLE_EQ(r.I1, 2.0);
    EXPECT_DOUBLE_EQ(r.I2, 1.0);
    EXPECT_DOUBLE_EQ(r.I3, 3.0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(DecomposeI, TimeBoundaryIsSingularity) {
    auto tc = simple_1d([](const J3&, const J3& x, const J3&) { return x; });
    for (double t : {0.0, 1.0, 1.5}) {
        try {
            decompose_I(tc, family(tc, 1.0, 1.0), {t, {0.5, 0.0}});
            FAIL() << "expected singularity error at t = " << t;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::singularity);
        }
    }
}

TEST(ExpandJ, PolynomialPlusTimeIdentities) {
    auto tc = simple_1d([](const J3& t, const J3& x, const J3&) { return x * x + t; });
    for (double x : {0.1, 0.5, 0.9}) {
        auto j = expand_J(tc, family(tc, 30.0, 2.0), {0.45, {x, 0.0}});
        EXPECT_LE(j.product_residual, 1e-10);
        EXPECT_LE(j.full_residual, 1e-10);
        for (double v : j.identity_residual) EXPECT_LE(v, 1e-10);
    }
}

TEST(ExpandJ, TimeIndependentTensorHasNoTimeCorrection) {
    auto tc = catalog()[0];
    auto c = eval_coefficients(tc, family(tc, 10.0, 2.0), {0.3, {0.4, 0.0}});
    EXPECT_EQ(c.c.a11, c.c_exact.a11);
}

// The catalog sweep over (lambda, mu) in {1, 10, 100} x {1, 2, 4}.
TEST(IdentitySuite, AllCatalogCasesAndLadder) {
    for (const auto& tc : catalog()) {
        auto samples = sample_set(tc, tc.dim == 2 ? 4 : 8, 20);
        for (double l : {1.0, 10.0, 100.0})
            for (double m : {1.0, 2.0, 4.0}) {
                auto fam = family(tc, l, m);
                double worst_i = 0.0, worst_p = 0.0, worst_j = 0.0;
                for (const auto& s : samples) {
                    auto i = decompose_I(tc, fam, s);
                    auto j = expand_J(tc, fam, s);
                    worst_i = std::max(worst_i, i.relative);
                    worst_p = std::max(worst_p, j.product_residual);
                    for (double v : j.identity_residual) worst_j = std::max(worst_j, v);
                }
                EXPECT_LE(worst_i, 1e-10) << tc.name << " lambda " << l << " mu " << m;
                EXPECT_LE(worst_p, 1e-10) << tc.name << " lambda " << l << " mu " << m;
                EXPECT_LE(worst_j, 1e-10) << tc.name << " lambda " << l << " mu " << m;
            }
    }
}

TEST(TestFunction, JetDerivativesMatchFourthOrderDifferences) {
    const double h = 1e-3;
    for (const auto& tc : catalog()) {
        const double t0 = 0.4, x0 = 0.3, y0 = 0.7;
        auto f = [&](double t, double x, double y) { return tc.u(J3(t), J3(x), J3(y)).value(); };
        auto jet = tc.u(J3::variable(0, t0), J3::variable(1, x0), J3::variable(2, y0));
        auto fd = [&](int var) {
            auto at = [&](double s) {
                return f(t0 + (var == 0 ? s : 0.0), x0 + (var == 1 ? s : 0.0), y0 + (var == 2 ? s : 0.0));
            };
            return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
        };
        double dt = jet.derivative(1, 0, 0), dx = jet.derivative(0, 1, 0);
        EXPECT_LE(std::abs(fd(0) - dt), 1e-6 * std::max(1.0, std::abs(dt))) << tc.name;
        EXPECT_LE(std::abs(fd(1) - dx), 1e-6 * std::max(1.0, std::abs(dx))) << tc.name;
        if (tc.dim == 2) {
            double dy = jet.derivative(0, 0, 1);
            EXPECT_LE(std::abs(fd(2) - dy), 1e-6 * std::max(1.0, std::abs(dy))) << tc.name;
        }
    }
}

TEST(Coefficients, MuZeroLeavesTimeDerivativeOfTensor) {
    for (const auto& tc : catalog()) {
        auto fam = family(tc, 20.0, 0.0);
        for (const auto& s : sample_set(tc, 3, 5)) {
            auto c = eval_coefficients(tc, fam, s);
            auto bt = tc.b(J3::variable(0, s.t), J3::variable(1, s.x[0]), J3::variable(2, s.x[1]));
            EXPECT_EQ(c.c.a11, bt[0].derivative(1, 0, 0)) << tc.name;
            EXPECT_EQ(c.c.a12, bt[1].derivative(1, 0, 0)) << tc.name;
        }
    }
}

TEST(Coefficients, HandEvaluatedM) {
    // psi = x, b = 1, lambda = mu = 1 at t = T/2 where alpha_t vanishes
    auto tc = simple_1d([](const J3&, const J3& x, const J3&) { return 1.0 + x; },
                        [](const J3&, const J3& x, const J3&) { return x; });
    const double x = 0.3;
    auto c = eval_coefficients(tc, family(tc, 1.0, 1.0), {0.5, {x, 0.0}});
    const double phi = std::exp(x) / 0.25;
    const double v = 1.0 + x, vx = phi * v + 1.0;
    EXPECT_NEAR(c.varphi, phi, 1e-14 * phi);
    EXPECT_NEAR(c.v, v, 1e-15);
    EXPECT_NEAR(c.grad_v[0], vx, 1e-13 * vx);
    const double M = phi * phi * v * v - vx * vx;
    EXPECT_NEAR(c.M, M, 1e-12 * phi * phi * v * v);
}

TEST(Coefficients, PrincipalTermDominates) {
    auto tc = catalog()[0];
    const Sample s{0.3, {0.45, 0.0}};
    const double S = 0.36;
    std::vector<double> ratios;
    for (double l : {1e2, 1e3, 1e4, 1e5}) {
        auto c = eval_coefficients(tc, family(tc, l, 4.0), s);
        double lead = l * l * l * std::pow(4.0, 4) * std::pow(c.varphi, 3) * S * S;
        ratios.push_back(c.B_exact / lead);
    }
    auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_GT(*lo, 0.1);
    EXPECT_LT(*hi, 10.0);
    EXPECT_NEAR(ratios.back(), 1.0, 0.05);
}

TEST(Margin, ZeroFunctionHasZeroMargin) {
    auto tc = simple_1d([](const J3&, const J3&, const J3&) { return J3(0.0); });
    auto rows = pointwise_margin(tc, ladder({10.0, 100.0}, 2.0), sample_set(tc, 8, 10));
    for (const auto& r : rows) {
        EXPECT_TRUE(r.feasible);
        EXPECT_EQ(r.margin, 0.0);
    }
}

TEST(Margin, ConstantIsStableAcrossLambda) {
    auto tc = catalog()[1];
    ASSERT_EQ(tc.name, "trig_exp_1d");
    auto rows = pointwise_margin(tc, ladder({1e2, 1e3, 1e4}, 4.0), sample_set(tc));
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : rows) {
        ASSERT_TRUE(r.feasible);
        EXPECT_GE(r.margin, 0.0);
        lo = std::min(lo, r.C_min);
        hi = std::max(hi, r.C_min);
    }
    EXPECT_LE(hi, 2.0 * lo);
}

TEST(Margin, MarginIsNonnegativeAtFittedConstant) {
    for (const auto& tc : catalog()) {
        auto rows = pointwise_margin(tc, ladder({10.0, 1e3}, 2.0), sample_set(tc, 4, 10));
        for (const auto& r : rows)
            if (r.feasible) EXPECT_GE(r.margin, 0.0) << tc.name;
    }
}

TEST(Margin, ZeroEpsilonIsPrecondition) {
    auto tc = catalog()[0];
    auto l = ladder({10.0}, 2.0);
    l[0].epsilon = 0.0;
    try {
        pointwise_margin(tc, l, sample_set(tc, 2, 1));
        FAIL() << "expected precondition error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}

TEST(Csv, ResidualTableHasHeaderAndRows) {
    auto tc = catalog()[0];
    auto samples = sample_set(tc, 2, 1);
    std::ostringstream out;
    write_residual_csv(out, tc, ladder({10.0}, 2.0), samples);
    std::string s = out.str();
    EXPECT_EQ(s.rfind("lambda,mu,sample_id,quantity,value\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + samples.size() * 10);
}
