#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "carleman/control/control.hpp"
#include "carleman/estimate/carleman.hpp"
#include "carleman/pointwise/pointwise.hpp"
#include "carleman/scenarios.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using namespace carleman;
using ojson = nlohmann::ordered_json;

namespace {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string num(double v) { return io::fmt(v); }

class Run {
public:
    Run(lab::Config cfg, fs::path out, std::uint64_t seed, int threads)
        : cfg_(std::move(cfg)), out_(std::move(out)), seed_(seed), threads_(threads) {
        fs::create_directories(out_);
    }

    void check(const std::string& name, bool pass, const std::string& detail) {
        checks_.push_back({name, pass, detail});
        std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    }

    /// Runs one stage; library errors other than config errors become failed checks.
    void stage(const std::string& name, const std::function<void()>& f) {
        try {
            f();
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::config) throw;
            check(name + ".completed", false, e.what());
        }
    }

    std::ofstream open(const std::string& rel) {
        files_.push_back(rel);
        std::ofstream f(out_ / rel, std::ios::binary);
        require(static_cast<bool>(f), ErrorKind::config, "cannot write output file " + (out_ / rel).string());
        return f;
    }

    domain::Grid grid() const {
        const auto& g = cfg_.grid;
        return domain::build_grid(cfg_.geometry, g.nx, g.nt, cfg_.geometry.dimension == 2 ? g.ny : -1);
    }

    weights::WeightOptions weight_options() const {
        weights::WeightOptions o;
        o.modulation = cfg_.weights.modulation;
        o.slab_override = cfg_.weights.slab_override;
        o.seed = seed_;
        o.min_sep_cells = cfg_.weights.min_sep_cells;
        return o;
    }

    void build_weights() {
        stage("weights", [&] {
            auto g = grid();
            auto diff = lab::make_diffusion(cfg_);
            auto geo = domain::check_geometry(g);
            check("weights.geometry", geo.pass(),
                  std::string("omega meets both subdomains: ") + (geo.omega_meets_both ? "yes" : "no") +
                      ", omega_i inside omega: " + (geo.omega_i_inside ? "yes" : "no"));
            auto wc = weights::construct_weights(g, diff, weight_options());
            const auto& sp = g.spec;
            auto cert = weights::verify_weight_conditions(wc.global, diff, g, sp.omega1, sp.omega2);
            const int cn = cfg_.weights.certify_nx;
            auto gc = domain::build_grid(sp, cn, cfg_.grid.nt, g.dim == 2 ? cn : -1);
            auto wcc = weights::construct_weights(gc, diff, weight_options());
            auto certg = weights::verify_weight_conditions(wcc.global, diff, gc, sp.omega1, sp.omega2, true);
            check("weights.positivity", cert.positivity.pass, "min interior value " + num(cert.positivity.value));
            check("weights.boundary", cert.boundary.pass, "max |value| on Gamma_i " + num(cert.boundary.value));
            check("weights.gradient", cert.gradient.pass, "min gradient outside omega_i " + num(cert.gradient.value));
            check("weights.interface", cert.interface.pass, "analytic relative residual " + num(cert.interface.value));
            check("weights.interface_grid", certg.interface.pass, "grid relative residual " + num(certg.interface.value) + " at nx = " + std::to_string(cn));

            auto crit = weights::find_critical_points(wc.global.phi, wc.global.t_begin, g, 1);
            const double cell = std::max(g.hx, g.dim == 2 ? g.hy : 0.0);
            double worst = 0.0;
            for (const auto& c : crit) {
                double dbest = std::numeric_limits<double>::infinity();
                for (const auto& b : sp.omega1.boxes) {
                    double dx = std::max({b.x0 - c.x[0], 0.0, c.x[0] - b.x1});
                    double dy = g.dim == 2 ? std::max({b.y0 - c.x[1], 0.0, c.x[1] - b.y1}) : 0.0;
                    dbest = std::min(dbest, std::hypot(dx, dy));
                }
                worst = std::max(worst, dbest);
            }
            check("weights.critical_points_in_omega1", worst <= cell,
                  std::to_string(crit.size()) + " critical points, max distance to omega1 " + num(worst));

            auto report = [](const weights::ConditionReport& r) {
                return ojson{{"pass", r.pass}, {"value", r.value}, {"witness", {r.witness[0], r.witness[1]}},
                             {"subdomain", r.witness_subdomain}, {"time", r.witness_time}};
            };
            ojson j;
            j["positivity"] = report(cert.positivity);
            j["boundary"] = report(cert.boundary);
            j["gradient"] = report(cert.gradient);
            j["interface"] = report(cert.interface);
            j["interface_grid"] = report(certg.interface);
            j["gradient_bound_1"] = cert.gradient_bound_1;
            j["gradient_bound_2"] = cert.gradient_bound_2;
            j["delta1"] = wc.delta1;
            j["morse_tilt"] = wc.tilted;
            j["slabs"] = wc.partition.L;
            j["d"] = weights::pair_d(wc.global, g);
            ojson cj = ojson::array();
            for (const auto& c : crit) cj.push_back({{"x", c.x[0]}, {"y", c.x[1]}, {"nondegenerate", c.nondegenerate}});
            j["critical_points"] = cj;
            open("weights_certification.json") << j.dump(2) << "\n";
            auto f = open("weights.csv");
            weights::write_weight_csv(f, wc.global, g, wc.global.t_begin);
        });
    }

    void verify_pointwise() {
        stage("pointwise", [&] {
            const auto& pc = cfg_.pointwise;
            std::vector<weights::CarlemanParams> ladder, margin;
            for (double l : pc.lambda)
                for (double m : pc.mu) ladder.push_back({l, m, 0.0, cfg_.weights.epsilon});
            for (double l : pc.margin_lambda) margin.push_back({l, pc.margin_mu, 0.0, cfg_.weights.epsilon});
            for (const auto& tc : pointwise::catalog()) {
                for (auto& p : ladder) p.d = tc.d;
                for (auto& p : margin) p.d = tc.d;
                auto samples = pointwise::sample_set(tc, pc.space_samples, pc.random_samples, seed_);
                double worst = 0.0;
                for (const auto& p : ladder) {
                    auto fam = pointwise::family_for(tc, p);
                    for (const auto& s : samples) {
                        auto e = pointwise::detail::evaluate(tc, fam, s);
                        worst = std::max({worst, e.I.relative, e.J.product_residual, e.J.full_residual});
                        for (double r : e.J.identity_residual) worst = std::max(worst, r);
                    }
                }
                check("pointwise." + tc.name + ".identities", worst <= 1e-10, "max relative residual " + num(worst));
                auto rows = pointwise::pointwise_margin(tc, margin, samples);
                double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
                bool feasible = true;
                for (const auto& r : rows) {
                    feasible = feasible && r.feasible;
                    lo = std::min(lo, r.C_min);
                    hi = std::max(hi, r.C_min);
                }
                double spread = feasible && lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
                check("pointwise." + tc.name + ".constant_stability", spread <= 2.0,
                      "C_min spread " + num(spread) + " over " + std::to_string(rows.size()) + " lambda values");
                auto fr = open("pointwise_residuals_" + tc.name + ".csv");
                pointwise::write_residual_csv(fr, tc, ladder, samples);
                auto fm = open("pointwise_margin_" + tc.name + ".csv");
                pointwise::write_margin_csv(fm, rows);
            }
        });
    }

    void solve() {
        stage("solver", [&] {
            require(cfg_.coefficients.kind != "tabulated", ErrorKind::config,
                    "solve: the manufactured study needs spatially constant tensors (piecewise_constant or smooth_in_t)");
            const auto& sc = cfg_.solver;
            const auto& sp = cfg_.geometry;
            auto diff = lab::make_diffusion(cfg_);
            auto ex = scenarios::smooth_jump_solution(sp);
            const int dim = sp.dimension;
            auto conv = open("convergence.csv");
            conv << "study,level,nx,nt,step,error\n";
            auto make = [&](int nx, int nt) {
                auto g = domain::build_grid(sp, nx, nt, dim == 2 ? nx : -1);
                auto pb = solver::manufactured_problem(g, diff, ex);
                pb.cg_tol = sc.cg_tol;
                return pb;
            };
            std::vector<double> hs, flux;
            auto space = solver::convergence_study(
                [&](int l) {
                    int nx = sc.space_nx << l, nt = std::max(1, nx * nx / 4);
                    auto pb = make(nx, nt);
                    auto st = solver::solve(pb);
                    double e = solver::max_error(st, ex);
                    double fr = 0.0;
                    for (int k = 0; k <= pb.grid.nt; ++k) {
                        auto jmp = domain::interface_trace_jump(st, k);
                        for (std::size_t j = 0; j < jmp.flux_jump.size(); ++j)
                            fr = std::max(fr, std::abs(jmp.flux_jump[j] - pb.beta2[static_cast<std::size_t>(k)][j]));
                    }
                    hs.push_back(pb.grid.hx);
                    flux.push_back(fr);
                    conv << "space," << l << ',' << nx << ',' << nt << ',' << num(pb.grid.hx) << ',' << num(e) << '\n';
                    return std::make_pair(pb.grid.hx, e);
                },
                sc.refinements);
            auto time = solver::convergence_study(
                [&](int l) {
                    int nt = sc.time_nt << l, nx = sc.time_nx;
                    auto pb = make(nx, nt);
                    double e = solver::max_error(solver::solve(pb), ex);
                    conv << "time," << l << ',' << nx << ',' << nt << ',' << num(pb.grid.dt) << ',' << num(e) << '\n';
                    return std::make_pair(pb.grid.dt, e);
                },
                sc.refinements);
            check("solver.space_order", !space.exact && std::abs(space.order - 2.0) <= 0.3,
                  "observed order " + num(space.order));
            check("solver.time_order", !time.exact && std::abs(time.order - 1.0) <= 0.3,
                  "observed order " + num(time.order));
            double flux_order = flux.front() < 1e-13 ? std::numeric_limits<double>::infinity() : log_log_slope(hs, flux);
            check("solver.interface_flux_order", flux_order >= 1.0 - 0.3,
                  "flux jump residual order " + num(flux_order) + " (at least first order required)");

            if (dim == 1 && sp.x0 == 0.0 && sp.x1 == 1.0 && sp.interface_x == 0.5) {
                auto pb = scenarios::steady_jump_problem(grid());
                pb.cg_tol = sc.cg_tol;
                auto st = solver::solve(pb);
                double e = 0.0;
                for (int k = 0; k <= pb.grid.nt; ++k)
                    for (int sub = 1; sub <= 2; ++sub)
                        for (int i = 0; i < pb.grid.cols(sub); ++i)
                            e = std::max(e, std::abs(st.at(k).at(pb.grid, sub, i, 0) - pb.boundary(sub, 0.0, pb.grid.node(sub, i, 0))));
                check("solver.steady_jump", e <= 1e-10, "max deviation " + num(e));
            }

            auto g = grid();
            auto pb = solver::manufactured_problem(g, diff, ex);
            pb.cg_tol = sc.cg_tol;
            auto st = solver::solve(pb);
            auto f = open("state.csv");
            solver::write_state_csv(f, st, {0, g.nt / 2, g.nt});
        });
    }

    void verify_carleman() {
        stage("carleman", [&] {
            auto g = grid();
            auto diff = lab::make_diffusion(cfg_);
            const auto& wcfg = cfg_.weights;
            auto wc = weights::construct_weights(g, diff, weight_options());
            std::vector<estimate::CarlemanReport> all;
            ojson summary = ojson::object();
            bool finite = true;
            auto record = [&](const std::string& key, const estimate::SweepResult& r) {
                ojson v = ojson::array();
                for (const auto& x : r.verdicts) v.push_back({{"mu", x.mu}, {"spread", x.spread}, {"pass", x.pass}});
                summary[key] = {{"pass", r.pass}, {"verdicts", v}};
                std::string d;
                for (const auto& x : r.verdicts) d += "mu=" + num(x.mu) + " spread=" + num(x.spread) + "; ";
                check("carleman." + key, r.pass, d);
                for (const auto& rep : r.reports) {
                    for (double t : rep.value) finite = finite && std::isfinite(t) && t >= 0.0;
                    all.push_back(rep);
                }
            };
            auto wants = [&](const std::string& t) {
                return std::find(cfg_.carleman.theorems.begin(), cfg_.carleman.theorems.end(), t) != cfg_.carleman.theorems.end();
            };
            auto ex = scenarios::smooth_jump_solution(g.spec);
            solver::TransmissionState st;
            if (wants("global_4_1") || wants("slab_5_1")) {
                require(cfg_.coefficients.kind != "tabulated", ErrorKind::config,
                        "verify-carleman: the manufactured state needs spatially constant tensors");
                auto pb = solver::manufactured_problem(g, diff, ex);
                pb.cg_tol = cfg_.solver.cg_tol;
                st = solver::solve(pb);
            }
            if (wants("global_4_1"))
                record("global_4_1", estimate::lambda_mu_sweep(st, estimate::global_weights(wc, g), wcfg.lambda, wcfg.mu,
                                                               wcfg.epsilon, threads_, cfg_.carleman.threshold));
            if (wants("slab_5_1")) {
                std::vector<estimate::SweepResult> slabs;
                for (int l = 0; l < static_cast<int>(wc.slabs.size()); ++l) {
                    slabs.push_back(estimate::lambda_mu_sweep(st, estimate::slab_weights(wc, l, g), wcfg.lambda, wcfg.mu,
                                                              wcfg.epsilon, threads_, cfg_.carleman.threshold));
                    record("slab_5_1.ell" + std::to_string(l), slabs.back());
                }
                for (std::size_t q = 0; q < slabs.front().reports.size(); ++q) {
                    std::vector<estimate::CarlemanReport> parts;
                    for (const auto& s : slabs) parts.push_back(s.reports[q]);
                    all.push_back(estimate::eval_slab_sum(parts));
                }
            }
            if (wants("local_5_2")) {
                auto w = estimate::local_weights(wc, diff, g, wcfg.epsilon0);
                auto local = solver::sampled_state(g, diff, scenarios::local_bump_solution(g.spec, w.support_radius));
                record("local_5_2", estimate::lambda_mu_sweep(local, w, wcfg.lambda, wcfg.mu, wcfg.epsilon, threads_,
                                                              cfg_.carleman.threshold));
                summary["local_5_2"]["support_radius"] = w.support_radius;
            }
            check("carleman.finite_nonnegative", finite, "every report value finite and nonnegative");
            auto f = open("carleman_sweep.csv");
            estimate::write_sweep_csv(f, all);
            open("carleman_summary.json") << summary.dump(2) << "\n";
        });
    }

    void control() {
        stage("control", [&] {
            const auto& cc = cfg_.control;
            auto g = grid();
            control::ControlProblem cp;
            cp.forward.grid = g;
            cp.forward.diffusion = lab::make_diffusion(cfg_);
            cp.forward.direction = solver::Direction::forward;
            cp.forward.end_data = scenarios::sine_initial(g);
            cp.forward.cg_tol = cfg_.solver.cg_tol;
            cp.cg_tol = cc.cg_tol;
            cp.max_iter = cc.max_iter;

            cp.epsilon_pen = cc.epsilon_pen.front();
            auto z = control::random_datum(g, seed_);
            auto grad = control::compute_gradient(cp, z);
            double worst = 0.0;
            for (int k = 0; k < cc.fd_directions; ++k) {
                auto v = control::random_datum(g, seed_ + 1 + static_cast<std::uint64_t>(k));
                const double h = 1e-3;
                double fd = (control::objective(cp, control::axpy(h, v, z)) - control::objective(cp, control::axpy(-h, v, z))) /
                            (2.0 * h);
                double an = control::inner(g, grad, v);
                worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
            }
            check("control.gradient_check", worst <= 1e-5, "max relative error " + num(worst));

            auto summary = open("control_summary.csv");
            summary << "epsilon_pen,final_norm,initial_norm,cost,iterations,converged,hypothesis_violated\n";
            std::vector<double> finals;
            bool monotone = true, converged = true, violated = false;
            control::ControlResult last;
            for (std::size_t e = 0; e < cc.epsilon_pen.size(); ++e) {
                cp.epsilon_pen = cc.epsilon_pen[e];
                auto r = control::hum_null_control(cp);
                for (std::size_t i = 1; i < r.history.size(); ++i)
                    monotone = monotone && r.history[i].J <= r.history[i - 1].J + 1e-12 * std::max(1.0, std::abs(r.history[i - 1].J));
                converged = converged && r.converged;
                violated = violated || r.hypothesis_violated;
                finals.push_back(r.final_norm);
                summary << num(cp.epsilon_pen) << ',' << num(r.final_norm) << ',' << num(r.initial_norm) << ','
                        << num(r.cost) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
                        << (r.hypothesis_violated ? 1 : 0) << '\n';
                auto h = open("control_history_" + std::to_string(e) + ".csv");
                control::write_history_csv(h, r.history);
                last = r;
            }
            bool decreasing = true;
            for (std::size_t e = 1; e < finals.size(); ++e)
                decreasing = decreasing && (cc.epsilon_pen[e] < cc.epsilon_pen[e - 1]) == (finals[e] < finals[e - 1]);
            check("control.monotone_J", monotone, "J non-increasing over CG iterations");
            check("control.converged", converged, "HUM conjugate gradients reached tolerance");
            check("control.decreasing_in_epsilon", decreasing, "final norms decrease with the penalty");
            check("control.null_target", last.final_norm <= cc.target * last.initial_norm,
                  "||y(T)|| = " + num(last.final_norm) + " vs " + num(cc.target) + " ||y(0)|| = " +
                      num(cc.target * last.initial_norm) + (violated ? " (omega misses a subdomain)" : ""));
            domain::TransmissionState cs = domain::zero_state(g, cp.forward.diffusion);
            cs.y = last.control;
            std::vector<int> levels;
            for (int k = 1; k <= g.nt; ++k) levels.push_back(k);
            auto f = open("control.csv");
            solver::write_state_csv(f, cs, levels);
        });
    }

    int finish() {
        ojson m;
        m["config_hash"] = sha256_hex(cfg_.text);
        m["seed"] = seed_;
        ojson cj = ojson::array();
        bool ok = true;
        for (const auto& c : checks_) {
            cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
            ok = ok && c.pass;
        }
        m["checks"] = cj;
        ojson fj = ojson::array();
        for (const auto& f : files_) fj.push_back({{"path", f}, {"sha256", sha256_hex(read_file(out_ / f))}});
        m["files"] = fj;
        std::ofstream(out_ / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
        return ok ? 0 : 1;
    }

private:
    lab::Config cfg_;
    fs::path out_;
    std::uint64_t seed_;
    int threads_;
    std::vector<Check> checks_;
    std::vector<std::string> files_;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carleman estimate laboratory for parabolic transmission problems"};
    app.require_subcommand(1, 1);
    std::string config, out = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    const std::vector<std::string> names{"build-weights", "verify-pointwise", "solve", "verify-carleman", "control", "all"};
    for (const auto& n : names) {
        auto* sub = app.add_subcommand(n);
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    try {
        Run run(lab::load_config(config), out, seed, threads);
        if (cmd == "build-weights" || cmd == "all") run.build_weights();
        if (cmd == "verify-pointwise" || cmd == "all") run.verify_pointwise();
        if (cmd == "solve" || cmd == "all") run.solve();
        if (cmd == "verify-carleman" || cmd == "all") run.verify_carleman();
        if (cmd == "control" || cmd == "all") run.control();
        return run.finish();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) {
            std::cerr << e.what() << "\n";
            return 2;
        }
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
