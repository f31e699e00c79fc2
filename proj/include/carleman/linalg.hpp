#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "carleman/error.hpp"

namespace carleman {

/// Spatial point; 1D problems use only the first component.
using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;

/// Symmetric-or-not 2x2 tensor, row major.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
    static Mat2 identity() { return diag(1.0, 1.0); }
    static Mat2 symmetric(double s11, double s12, double s22) { return {s11, s12, s12, s22}; }

    double operator()(int i, int j) const {
        if (i == 0) return j == 0 ? a11 : a12;
        return j == 0 ? a21 : a22;
    }

    Vec2 apply(const Vec2& v) const { return {a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1]}; }

    /// Quadratic form v^T A w.
    double form(const Vec2& v, const Vec2& w) const {
        return v[0] * (a11 * w[0] + a12 * w[1]) + v[1] * (a21 * w[0] + a22 * w[1]);
    }

    Mat2 symmetrized() const {
        double off = 0.5 * (a12 + a21);
        return {a11, off, off, a22};
    }

    /// Smallest eigenvalue of the symmetric part, restricted to the first
    /// `dim` coordinates.
    double min_eigenvalue(int dim) const {
        if (dim == 1) return a11;
        Mat2 s = symmetrized();
        double tr = s.a11 + s.a22;
        double det = s.a11 * s.a22 - s.a12 * s.a12;
        double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        return 0.5 * tr - disc;
    }

    bool finite() const {
        return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) && std::isfinite(a22);
    }
};

inline Mat2 operator*(double s, const Mat2& m) { return {s * m.a11, s * m.a12, s * m.a21, s * m.a22}; }
inline Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
}

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients on a symmetric positive definite
/// matrix, warm-started from x. Throws an assembly error on a non-positive
/// diagonal and a solver error when the iteration cap is reached.
inline CgResult solve_pcg(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, double rel_tol,
                          int max_iter) {
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        if (!(A.coeff(i, i) > 0.0)) throw Error(ErrorKind::assembly, "non-positive diagonal in assembled system");
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(rel_tol);
    cg.setMaxIterations(max_iter);
    cg.compute(A);
    x = cg.solveWithGuess(b, x);
    CgResult res{static_cast<int>(cg.iterations()), cg.error()};
    if (cg.info() != Eigen::Success)
        throw Error(ErrorKind::solver, "conjugate gradients did not converge in " + std::to_string(max_iter) +
                                           " iterations (relative residual " + std::to_string(cg.error()) + ")");
    return res;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Accumulates sum_k exp(log_w_k) * v_k for v_k >= 0 without underflow.
class LogSum {
public:
    void add(double log_weight, double value) {
        if (!(value > 0.0)) return;
        double lv = log_weight + std::log(value);
        if (lv == -std::numeric_limits<double>::infinity()) return;
        if (lv <= max_) {
            scaled_ += std::exp(lv - max_);
        } else {
            scaled_ = scaled_ * std::exp(max_ - lv) + 1.0;
            max_ = lv;
        }
    }

    void merge(const LogSum& o) {
        if (o.scaled_ == 0.0) return;
        add(o.max_, o.scaled_);
    }

    /// Natural log of the accumulated sum; -inf when empty.
    double log_value() const {
        if (scaled_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(scaled_);
    }

    bool empty() const { return scaled_ == 0.0; }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double scaled_ = 0.0;
};

} // namespace carleman
