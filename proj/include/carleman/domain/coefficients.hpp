#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "carleman/domain/grid.hpp"

namespace carleman::domain {

using TensorField = std::function<Mat2(double t, const Point& x)>;

/// Diffusion tensors a on closure(Omega_1) and a_tilde on closure(Omega_2).
struct DiffusionPair {
    TensorField a;
    TensorField a_tilde;
    double s0 = 0.0;
    bool time_dependent = false;

    Mat2 on(int sub, double t, const Point& x) const { return sub == 1 ? a(t, x) : a_tilde(t, x); }
};

inline DiffusionPair piecewise_constant(const Mat2& a, const Mat2& a_tilde, double s0) {
    Mat2 sa = a.symmetrized(), st = a_tilde.symmetrized();
    return {[sa](double, const Point&) { return sa; }, [st](double, const Point&) { return st; }, s0, false};
}

inline DiffusionPair constant(const Mat2& a, double s0) { return piecewise_constant(a, a, s0); }

/// (1 + amplitude sin(frequency t)) times constant tensors; |amplitude| < 1.
inline DiffusionPair smooth_in_t(const Mat2& a, const Mat2& a_tilde, double amplitude, double frequency, double s0) {
    require(std::abs(amplitude) < 1.0, ErrorKind::config, "smooth_in_t amplitude must satisfy |amplitude| < 1");
    Mat2 sa = a.symmetrized(), st = a_tilde.symmetrized();
    auto g = [amplitude, frequency](double t) { return 1.0 + amplitude * std::sin(frequency * t); };
    return {[sa, g](double t, const Point&) { return g(t) * sa; },
            [st, g](double t, const Point&) { return g(t) * st; }, s0, true};
}

namespace detail {

/// Samples on a tensor lattice in (t, x, y), multilinear interpolation,
/// clamped outside the sampled box.
class TensorTable {
public:
    void insert(double t, double x, double y, const Mat2& m) { samples_[{t, x, y}] = m; }

    void finalize(const std::string& origin) {
        for (const auto& [k, v] : samples_) {
            ts_.push_back(std::get<0>(k));
            xs_.push_back(std::get<1>(k));
            ys_.push_back(std::get<2>(k));
        }
        for (auto* axis : {&ts_, &xs_, &ys_}) {
            std::sort(axis->begin(), axis->end());
            axis->erase(std::unique(axis->begin(), axis->end()), axis->end());
        }
        require(samples_.size() == ts_.size() * xs_.size() * ys_.size(), ErrorKind::data,
                origin + ": samples do not form a full (t, x, y) lattice");
    }

    bool time_dependent() const { return ts_.size() > 1; }

    Mat2 operator()(double t, const Point& p) const {
        auto locate = [](const std::vector<double>& axis, double v, std::size_t& i0, double& w) {
            if (axis.size() == 1 || v <= axis.front()) {
                i0 = 0;
                w = 0.0;
                return;
            }
            if (v >= axis.back()) {
                i0 = axis.size() - 2;
                w = 1.0;
                return;
            }
            i0 = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin()) - 1;
            w = (v - axis[i0]) / (axis[i0 + 1] - axis[i0]);
        };
        std::size_t it, ix, iy;
        double wt, wx, wy;
        locate(ts_, t, it, wt);
        locate(xs_, p[0], ix, wx);
        locate(ys_, p[1], iy, wy);
        Mat2 r;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) {
                    double w = (a ? wt : 1.0 - wt) * (b ? wx : 1.0 - wx) * (c ? wy : 1.0 - wy);
                    if (w == 0.0) continue;
                    double tt = ts_[std::min(it + a, ts_.size() - 1)];
                    double xx = xs_[std::min(ix + b, xs_.size() - 1)];
                    double yy = ys_[std::min(iy + c, ys_.size() - 1)];
                    r = r + w * samples_.at({tt, xx, yy});
                }
        return r;
    }

private:
    std::map<std::tuple<double, double, double>, Mat2> samples_;
    std::vector<double> ts_, xs_, ys_;
};

inline std::shared_ptr<TensorTable> load_tensor_csv(const std::string& path, int dim) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::config, "cannot open coefficient table " + path);
    auto table = std::make_shared<TensorTable>();
    std::string line;
    bool header = true;
    int lineno = 0;
    const std::size_t expected = dim == 1 ? 5 : 6;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find_first_of("tx") == 0) continue;
        }
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                cols.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::data, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        require(cols.size() == expected, ErrorKind::data,
                path + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected) + " columns");
        double t = cols[0], x = cols[1], y = dim == 1 ? 0.0 : cols[2];
        std::size_t o = dim == 1 ? 2 : 3;
        table->insert(t, x, y, Mat2::symmetric(cols[o], cols[o + 1], cols[o + 2]));
    }
    table->finalize(path);
    return table;
}

} // namespace detail

/// Tabulated tensors from CSV files with columns t, x, [y], a11, a12, a22.
inline DiffusionPair tabulated(const std::string& path_a, const std::string& path_a_tilde, int dim, double s0) {
    auto ta = detail::load_tensor_csv(path_a, dim);
    auto tt = detail::load_tensor_csv(path_a_tilde, dim);
    return {[ta](double t, const Point& x) { return (*ta)(t, x); },
            [tt](double t, const Point& x) { return (*tt)(t, x); }, s0,
            ta->time_dependent() || tt->time_dependent()};
}

struct TensorCheck {
    double symmetry_residual = 0.0;
    double ellipticity_margin = 0.0;
    bool pass() const { return symmetry_residual <= 1e-12 && ellipticity_margin >= 0.0; }
};

/// Symmetry and ellipticity of both tensors at every node and time level.
inline TensorCheck check_tensor(const DiffusionPair& pair, const Grid& g) {
    TensorCheck c;
    c.ellipticity_margin = std::numeric_limits<double>::infinity();
    const int levels = pair.time_dependent ? g.nt + 1 : 1;
    for (int sub = 1; sub <= 2; ++sub)
        for (int k = 0; k < levels; ++k)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    Mat2 m = pair.on(sub, g.t[static_cast<std::size_t>(k)], g.node(sub, i, j));
                    require(m.finite(), ErrorKind::data, "non-finite diffusion tensor entry");
                    if (g.dim == 2) c.symmetry_residual = std::max(c.symmetry_residual, std::abs(m.a12 - m.a21));
                    c.ellipticity_margin = std::min(c.ellipticity_margin, m.min_eigenvalue(g.dim) - pair.s0);
                }
    return c;
}

} // namespace carleman::domain
