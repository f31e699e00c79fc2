#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "carleman/domain/state.hpp"
#include "carleman/estimate/fractional.hpp"
#include "carleman/io.hpp"
#include "carleman/weights/weights.hpp"

namespace carleman::estimate {

using domain::Grid;
using domain::PiecewiseField;
using domain::TransmissionState;
using weights::CarlemanParams;
using weights::ScalarField;

enum class Theorem { global_4_1, slab_5_1, local_5_2 };

inline const char* theorem_name(Theorem t) {
    switch (t) {
    case Theorem::global_4_1: return "global_4_1";
    case Theorem::slab_5_1: return "slab_5_1";
    case Theorem::local_5_2: return "local_5_2";
    }
    return "?";
}

enum Term {
    rhs_f1, rhs_f2, rhs_obs1, rhs_obs2, rhs_beta1_block, rhs_beta2_block,
    lhs_time1, lhs_time2, lhs_grad1, lhs_grad2, lhs_zero1, lhs_zero2,
    term_count
};

inline constexpr std::array<const char*, term_count> term_names = {
    "rhs_f1", "rhs_f2", "rhs_obs1", "rhs_obs2", "rhs_beta1_block", "rhs_beta2_block",
    "lhs_time1", "lhs_time2", "lhs_grad1", "lhs_grad2", "lhs_zero1", "lhs_zero2"};

inline bool is_lhs(int t) { return t >= lhs_time1; }

/// Spatial weights psi_1, psi_2 of one estimate together with the constant d
/// and the time window of the theta family.
struct EstimateWeights {
    Theorem theorem = Theorem::global_4_1;
    int ell = 0;
    ScalarField psi1, psi2;
    double psi_sup = 0.0;
    double d = 0.0;
    double ta = 0.0, tb = 1.0;
    bool time_dependent = false;
    double support_radius = -1.0; ///< O(S) radius for the local estimate

    const ScalarField& psi(int sub) const { return sub == 1 ? psi1 : psi2; }
};

inline EstimateWeights from_pair(const weights::WeightPair& pair, const Grid& g, Theorem th, int ell) {
    EstimateWeights w;
    w.theorem = th;
    w.ell = ell;
    w.psi1 = pair.phi;
    w.psi2 = pair.phi_tilde;
    auto ts = weights::certification_times(pair, g);
    double s1 = weights::detail::sup_over(pair.phi, g, 1, ts), s2 = weights::detail::sup_over(pair.phi_tilde, g, 2, ts);
    w.psi_sup = std::max(s1, s2);
    w.d = weights::default_d(s1, s2);
    w.ta = pair.t_begin;
    w.tb = pair.t_end;
    w.time_dependent = pair.time_dependent;
    return w;
}

inline EstimateWeights global_weights(const weights::WeightConstruction& wc, const Grid& g) {
    return from_pair(wc.global, g, Theorem::global_4_1, 0);
}

inline EstimateWeights slab_weights(const weights::WeightConstruction& wc, int ell, const Grid& g) {
    require(ell >= 0 && ell < static_cast<int>(wc.slabs.size()), ErrorKind::precondition,
            "slab index " + std::to_string(ell) + " outside 0.." + std::to_string(wc.slabs.size() - 1));
    return from_pair(wc.slabs[static_cast<std::size_t>(ell)], g, Theorem::slab_5_1, ell);
}

/// psi = phi r, phi~ r~ with d from their sup over O_{epsilon0}(S).
inline EstimateWeights local_weights(const weights::WeightConstruction& wc, const domain::DiffusionPair& diff,
                                     const Grid& g, double epsilon0, weights::LocalWeights* out = nullptr) {
    weights::LocalWeights lw = weights::local_r_weights(wc.global, diff, g, epsilon0);
    EstimateWeights w;
    w.theorem = Theorem::local_5_2;
    w.psi1 = lw.phi_r;
    w.psi2 = lw.phi_tilde_r_tilde;
    auto ts = weights::certification_times(wc.global, g);
    double s[2] = {0.0, 0.0};
    for (int sub = 1; sub <= 2; ++sub)
        for (double t : ts)
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    Point p = g.node(sub, i, j);
                    if (g.spec.distance_to_interface(p) <= epsilon0 + 1e-12)
                        s[sub - 1] = std::max(s[sub - 1], std::abs(lw.psi(sub)(t, p).value));
                }
    w.psi_sup = std::max(s[0], s[1]);
    w.d = weights::default_d(s[0], s[1]);
    w.ta = 0.0;
    w.tb = g.spec.T;
    w.time_dependent = diff.time_dependent;
    w.support_radius = lw.epsilon1;
    if (out) *out = lw;
    return w;
}

struct CarlemanReport {
    Theorem theorem = Theorem::global_4_1;
    int ell = 0;
    double lambda = 0.0, mu = 0.0;
    std::array<double, term_count> value{};     ///< exp(log_value), may underflow to 0
    std::array<double, term_count> log_value{}; ///< natural log, -inf for an empty term
    double log_lhs = 0.0, log_rhs = 0.0;
    double lhs_total = 0.0, rhs_total = 0.0;
    double ratio = 0.0; ///< lhs_total / rhs_total, 0 when both vanish
    double C_fit = 0.0;
    bool infeasible = false; ///< rhs_total = 0 < lhs_total

    double operator[](Term t) const { return value[static_cast<std::size_t>(t)]; }
};

namespace detail {

inline bool on_level(double t, double dt) {
    double r = t / dt;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

inline double psi_t(const ScalarField& f, double t, const Point& p, double ta, double tb) {
    const double h = 1e-6 * std::max(1.0, tb - ta);
    double lo = std::max(ta, t - h), hi = std::min(tb, t + h);
    return (f(hi, p).value - f(lo, p).value) / (hi - lo);
}

inline double node_dx(const Grid& g, const PiecewiseField& u, int sub, int i, int j) {
    if (i == 0) return domain::one_sided_dx(g, u, sub, i, j, +1);
    if (i == g.cols(sub) - 1) return domain::one_sided_dx(g, u, sub, i, j, -1);
    return (u.at(g, sub, i + 1, j) - u.at(g, sub, i - 1, j)) / (2.0 * g.hx);
}

inline PiecewiseField average(const PiecewiseField& a, const PiecewiseField& b) {
    PiecewiseField r = a;
    for (std::size_t k = 0; k < r.v1.size(); ++k) r.v1[k] = 0.5 * (a.v1[k] + b.v1[k]);
    for (std::size_t k = 0; k < r.v2.size(); ++k) r.v2[k] = 0.5 * (a.v2[k] + b.v2[k]);
    return r;
}

/// Adds |exp(logamp) * mult * beta|^2_{H^s} computed with the largest
/// amplitude factored out.
inline void add_fractional(LogSum& acc, const Grid& g, const std::vector<double>& logamp, const std::vector<double>& mult,
                           const std::vector<double>& beta, double s, double log_scale) {
    double m = -std::numeric_limits<double>::infinity();
    for (double l : logamp) m = std::max(m, l);
    if (!std::isfinite(m)) return;
    std::vector<double> v(logamp.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::exp(logamp[j] - m) * mult[j] * beta[j];
    double n = fractional_norm(lattice_trace(g, v), s);
    acc.add(log_scale + 2.0 * m, n * n);
}

} // namespace detail

/// Evaluates every term of the chosen estimate by the cell-midpoint rule in
/// time over [window_a, window_b] (defaults to the weight window). y_t is the
/// centered difference across each cell, y and the data the cell average.
inline CarlemanReport eval_carleman_report(const TransmissionState& st, const EstimateWeights& w,
                                           const CarlemanParams& params, double window_a = -1.0,
                                           double window_b = -1.0) {
    params.validate();
    const Grid& g = st.grid;
    const double wa = window_a < 0.0 ? w.ta : window_a, wb = window_b < 0.0 ? w.tb : window_b;
    require(wa >= w.ta - 1e-12 && wb <= w.tb + 1e-12 && wb > wa, ErrorKind::precondition,
            "integration window must lie inside the weight window");
    require(detail::on_level(wa, g.dt) && detail::on_level(wb, g.dt), ErrorKind::precondition,
            "integration window must start and end on time levels");
    const bool local = w.theorem == Theorem::local_5_2;
    if (local) {
        require(w.support_radius > 0.0, ErrorKind::precondition, "local estimate needs the O(S) radius");
        double outside = 0.0;
        for (int k = 0; k <= g.nt; ++k)
            for (int sub = 1; sub <= 2; ++sub)
                for (int j = 0; j < g.rows(); ++j)
                    for (int i = 0; i < g.cols(sub); ++i)
                        if (g.spec.distance_to_interface(g.node(sub, i, j)) > w.support_radius + 1e-12)
                            outside = std::max(outside, std::abs(st.at(k).at(g, sub, i, j)));
        require(outside <= 1e-12, ErrorKind::precondition,
                "state is not supported in O(S): max |y| outside is " + std::to_string(outside));
    }

    CarlemanParams p = params;
    p.d = w.d;
    weights::ThetaFamily fam(p, w.psi_sup, w.ta, w.tb);
    const double lam = p.lambda, mu = p.mu;
    const double llam = std::log(lam), lmu = std::log(mu);
    std::array<LogSum, term_count> acc;

    const int k0 = static_cast<int>(std::lround(wa / g.dt)), k1 = static_cast<int>(std::lround(wb / g.dt));
    const double ldt = std::log(g.dt);
    for (int k = k0; k < k1; ++k) {
        const double tm = 0.5 * (g.t[static_cast<std::size_t>(k)] + g.t[static_cast<std::size_t>(k + 1)]);
        const PiecewiseField& ya = st.at(k);
        const PiecewiseField& yb = st.at(k + 1);
        PiecewiseField ym = detail::average(ya, yb);
        PiecewiseField fm = detail::average(st.f[static_cast<std::size_t>(k)], st.f[static_cast<std::size_t>(k + 1)]);

        for (int sub = 1; sub <= 2; ++sub) {
            const ScalarField& psi = w.psi(sub);
            const int off = sub - 1;
            for (int j = 0; j < g.rows(); ++j)
                for (int i = 0; i < g.cols(sub); ++i) {
                    const double nw = g.node_weight(sub, i, j);
                    if (nw == 0.0) continue;
                    Point x = g.node(sub, i, j);
                    if (local && g.spec.distance_to_interface(x) > w.support_radius + 1e-12) continue;
                    double ps = psi(tm, x).value;
                    double pst = w.time_dependent ? detail::psi_t(psi, tm, x, w.ta, w.tb) : 0.0;
                    weights::ThetaSample th = fam.at(tm, ps, pst);
                    const double base = ldt + std::log(nw) + 2.0 * th.log_theta;
                    const double lphi = std::log(th.varphi);
                    double yv = ym.at(g, sub, i, j);
                    double yt = (yb.at(g, sub, i, j) - ya.at(g, sub, i, j)) / g.dt;
                    double gx = detail::node_dx(g, ym, sub, i, j), gy = domain::periodic_dy(g, ym, sub, i, j);
                    double fv = fm.at(g, sub, i, j);
                    acc[lhs_time1 + off].add(base - llam - lphi, yt * yt);
                    acc[lhs_grad1 + off].add(base + llam + 2.0 * lmu + lphi, gx * gx + gy * gy);
                    const double lzero = base + 3.0 * llam + 4.0 * lmu + 3.0 * lphi;
                    acc[lhs_zero1 + off].add(lzero, yv * yv);
                    acc[rhs_f1 + off].add(base, fv * fv);
                    if (!local && g.spec.omega.contains(x, g.dim)) acc[rhs_obs1 + off].add(lzero, yv * yv);
                }
        }

        // interface data on the unique rows of S
        const auto& b1a = st.beta1[static_cast<std::size_t>(k)];
        const auto& b1b = st.beta1[static_cast<std::size_t>(k + 1)];
        const auto& b2a = st.beta2[static_cast<std::size_t>(k)];
        const auto& b2b = st.beta2[static_cast<std::size_t>(k + 1)];
        const int rows = g.dim == 1 ? 1 : g.ny;
        std::vector<double> b1(rows), b1t(rows), lt2(rows), sqrt_phi2(rows), at2(rows), phi2_52(rows);
        for (int j = 0; j < rows; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            Point x = g.node(1, g.s, j);
            b1[jj] = 0.5 * (b1a[jj] + b1b[jj]);
            b1t[jj] = (b1b[jj] - b1a[jj]) / g.dt;
            double b2 = 0.5 * (b2a[jj] + b2b[jj]);
            double b2t = (b2b[jj] - b2a[jj]) / g.dt;

            double ps2 = w.psi2(tm, x).value;
            double ps2t = w.time_dependent ? detail::psi_t(w.psi2, tm, x, w.ta, w.tb) : 0.0;
            weights::ThetaSample th2 = fam.at(tm, ps2, ps2t);
            lt2[jj] = th2.log_theta;
            sqrt_phi2[jj] = std::sqrt(th2.varphi);
            at2[jj] = std::sqrt(th2.varphi) * std::abs(th2.alpha_t);
            phi2_52[jj] = std::pow(th2.varphi, 2.5);

            double ps1 = w.psi1(tm, x).value;
            double ps1t = w.time_dependent ? detail::psi_t(w.psi1, tm, x, w.ta, w.tb) : 0.0;
            weights::ThetaSample th1 = fam.at(tm, ps1, ps1t);
            const double base = ldt + std::log(g.interface_weight(j)) + 2.0 * th1.log_theta;
            const double lphi = std::log(th1.varphi);
            acc[rhs_beta2_block].add(base + 2.0 * std::log(std::abs(th1.alpha_t)) - lmu - lphi, b2 * b2);
            acc[rhs_beta2_block].add(base - llam - lmu - lphi, b2t * b2t);
            acc[rhs_beta2_block].add(base + 3.0 * llam + 3.0 * lmu + 3.0 * lphi, b2 * b2);
        }
        detail::add_fractional(acc[rhs_beta1_block], g, lt2, sqrt_phi2, b1t, 0.5, ldt + llam);
        detail::add_fractional(acc[rhs_beta1_block], g, lt2, at2, b1, 1.5, ldt + 3.0 * llam);
        detail::add_fractional(acc[rhs_beta1_block], g, lt2, phi2_52, b1, 1.5, ldt + 5.0 * llam + 4.0 * lmu);
    }

    CarlemanReport r;
    r.theorem = w.theorem;
    r.ell = w.ell;
    r.lambda = lam;
    r.mu = mu;
    LogSum lhs, rhs;
    for (int t = 0; t < term_count; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        r.log_value[tt] = acc[tt].log_value();
        r.value[tt] = std::exp(r.log_value[tt]);
        (is_lhs(t) ? lhs : rhs).merge(acc[tt]);
    }
    r.log_lhs = lhs.log_value();
    r.log_rhs = rhs.log_value();
    r.lhs_total = std::exp(r.log_lhs);
    r.rhs_total = std::exp(r.log_rhs);
    if (rhs.empty()) {
        r.infeasible = !lhs.empty();
        r.ratio = r.infeasible ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
        r.ratio = lhs.empty() ? 0.0 : std::exp(r.log_lhs - r.log_rhs);
    }
    r.C_fit = r.ratio;
    return r;
}

/// Term-wise sum of the slab reports of one (lambda, mu).
inline CarlemanReport eval_slab_sum(const std::vector<CarlemanReport>& slabs) {
    require(!slabs.empty(), ErrorKind::precondition, "no slab reports to sum");
    const CarlemanReport& f = slabs.front();
    for (const auto& s : slabs)
        require(s.lambda == f.lambda && s.mu == f.mu && s.theorem == f.theorem, ErrorKind::precondition,
                "slab reports mix parameters (lambda, mu or theorem)");
    CarlemanReport r = f;
    r.ell = -1;
    LogSum lhs, rhs;
    for (int t = 0; t < term_count; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        LogSum a;
        for (const auto& s : slabs) a.add(s.log_value[tt], 1.0);
        r.log_value[tt] = a.log_value();
        r.value[tt] = std::exp(r.log_value[tt]);
        (is_lhs(t) ? lhs : rhs).merge(a);
    }
    r.log_lhs = lhs.log_value();
    r.log_rhs = rhs.log_value();
    r.lhs_total = std::exp(r.log_lhs);
    r.rhs_total = std::exp(r.log_rhs);
    r.infeasible = rhs.empty() && !lhs.empty();
    r.ratio = rhs.empty() ? (r.infeasible ? std::numeric_limits<double>::infinity() : 0.0)
                          : (lhs.empty() ? 0.0 : std::exp(r.log_lhs - r.log_rhs));
    r.C_fit = r.ratio;
    return r;
}

struct SweepVerdict {
    double mu = 0.0;
    double spread = 0.0; ///< max / min C_fit over the upper half of the ladder
    bool pass = false;
};

struct SweepResult {
    std::vector<CarlemanReport> reports; ///< mu-major, lambda ascending
    std::vector<SweepVerdict> verdicts;
    bool pass = false;
};

/// Verdict per mu: C_fit spread over the upper half of the lambda ladder at most `threshold`.
inline std::vector<SweepVerdict> sweep_verdicts(const std::vector<CarlemanReport>& reports, const std::vector<double>& mus,
                                                std::size_t n_lambda, double threshold = 1.25) {
    std::vector<SweepVerdict> out;
    for (std::size_t m = 0; m < mus.size(); ++m) {
        SweepVerdict v;
        v.mu = mus[m];
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        bool bad = false;
        for (std::size_t l = n_lambda / 2; l < n_lambda; ++l) {
            const auto& r = reports[m * n_lambda + l];
            bad = bad || r.infeasible || !std::isfinite(r.C_fit);
            lo = std::min(lo, r.C_fit);
            hi = std::max(hi, r.C_fit);
        }
        if (bad) v.spread = std::numeric_limits<double>::infinity();
        else if (hi == 0.0) v.spread = 1.0;
        else v.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        v.pass = v.spread <= threshold;
        out.push_back(v);
    }
    return out;
}

/// Reports over the (lambda, mu) ladder on a fixed state, computed by up to
/// `threads` workers and stored in ladder order.
inline SweepResult lambda_mu_sweep(const TransmissionState& st, const EstimateWeights& w, std::vector<double> lambdas,
                                   const std::vector<double>& mus, double epsilon = 0.1, int threads = 1,
                                   double threshold = 1.25) {
    require(lambdas.size() >= 4, ErrorKind::precondition, "sweep needs at least 4 lambda values per mu");
    require(mus.size() >= 2, ErrorKind::precondition, "sweep needs at least 2 mu values");
    std::sort(lambdas.begin(), lambdas.end());
    const std::size_t n = lambdas.size() * mus.size();
    SweepResult res;
    res.reports.resize(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t q = next++; q < n; q = next++) {
            try {
                CarlemanParams p{lambdas[q % lambdas.size()], mus[q / lambdas.size()], w.d, epsilon};
                res.reports[q] = eval_carleman_report(st, w, p);
            } catch (...) {
                errs[q] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int k = 1; k < nt; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    res.verdicts = sweep_verdicts(res.reports, mus, lambdas.size(), threshold);
    res.pass = std::all_of(res.verdicts.begin(), res.verdicts.end(), [](const SweepVerdict& v) { return v.pass; });
    return res;
}

/// Sweep table: theorem, ell, lambda, mu, term_name, value, ratio, C_fit. Log
/// totals are appended as the terms log_lhs_total and log_rhs_total.
inline void write_sweep_csv(std::ostream& out, const std::vector<CarlemanReport>& reports, bool header = true) {
    if (header) out << "theorem,ell,lambda,mu,term_name,value,ratio,C_fit\n";
    for (const auto& r : reports) {
        auto row = [&](const std::string& name, double v) {
            out << theorem_name(r.theorem) << ',' << r.ell << ',' << io::fmt(r.lambda) << ',' << io::fmt(r.mu) << ','
                << name << ',' << io::fmt(v) << ',' << io::fmt(r.ratio) << ',' << io::fmt(r.C_fit) << '\n';
        };
        for (int t = 0; t < term_count; ++t) row(term_names[static_cast<std::size_t>(t)], r.value[static_cast<std::size_t>(t)]);
        row("log_lhs_total", r.log_lhs);
        row("log_rhs_total", r.log_rhs);
    }
}

} // namespace carleman::estimate
