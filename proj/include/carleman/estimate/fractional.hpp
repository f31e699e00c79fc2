#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "carleman/domain/grid.hpp"

namespace carleman::estimate {

/// Samples of a function on S at one time. In 2D `arc` holds the arc-length
/// coordinates of uniformly spaced samples on a closed curve of the given
/// length (periodic line or circle); in 1D S is a point and there is a single
/// sample with length 0.
struct InterfaceTrace {
    std::vector<double> arc;
    std::vector<double> values;
    double length = 0.0;
};

/// Trace on the unique interface rows of the lattice.
inline InterfaceTrace lattice_trace(const domain::Grid& g, std::vector<double> values) {
    InterfaceTrace tr;
    if (g.dim == 1) {
        tr.arc = {0.0};
        tr.values = {values.front()};
        return tr;
    }
    values.resize(static_cast<std::size_t>(g.ny));
    tr.values = std::move(values);
    tr.length = g.spec.height();
    for (int j = 0; j < g.ny; ++j) tr.arc.push_back(j * g.hy);
    return tr;
}

/// Periodic trapezoid L2 norm.
inline double trapezoid_l2(const InterfaceTrace& tr) {
    if (tr.length == 0.0) return std::abs(tr.values.front());
    double s = 0.0;
    for (double v : tr.values) s += v * v;
    return std::sqrt(s * tr.length / static_cast<double>(tr.values.size()));
}

/// H^s(S) norm (sum_k (1 + kappa_k^2)^s |c_k|^2)^{1/2} with kappa_k = 2 pi k / length
/// and coefficients scaled so that s = 0 is the trapezoid L2 norm. In 1D the
/// norm of a point trace is |value| for every s.
inline double fractional_norm(const InterfaceTrace& tr, double s) {
    require(!tr.values.empty() && tr.values.size() == tr.arc.size(), ErrorKind::precondition,
            "trace samples and positions must be nonempty and of equal length");
    if (tr.length == 0.0) {
        require(tr.values.size() == 1, ErrorKind::precondition, "a point interface carries a single sample");
        return std::abs(tr.values.front());
    }
    const std::size_t n = tr.values.size();
    const double h = tr.length / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
        require(std::abs(tr.arc[j] - tr.arc.front() - static_cast<double>(j) * h) <= 1e-9 * h, ErrorKind::precondition,
                "interface samples are not uniformly spaced on S");
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> c;
    fft.fwd(c, tr.values);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double m = static_cast<double>(k <= n / 2 ? k : n - k);
        double kappa = 2.0 * std::numbers::pi * m / tr.length;
        acc += std::pow(1.0 + kappa * kappa, s) * std::norm(c[k]);
    }
    return std::sqrt(acc * tr.length / (static_cast<double>(n) * static_cast<double>(n)));
}

} // namespace carleman::estimate
