#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carleman/scenarios.hpp"
#include "carleman/weights/theta.hpp"

namespace lab {

using json = nlohmann::json;
using carleman::ErrorKind;
using carleman::require;

struct GridConfig {
    int nx = 64, nt = 64, ny = 64;
};

struct CoefficientConfig {
    std::string kind = "piecewise_constant";
    std::vector<double> a{2.0, 0.0, 2.0}, a_tilde{1.0, 0.0, 1.0}; ///< a11, a12, a22
    double s0 = 0.5;
    double amplitude = 0.2, frequency = 3.0;
    std::string a_path, a_tilde_path;
};

struct WeightsConfig {
    double modulation = 0.3;
    int slab_override = 2;
    double epsilon0 = 0.15;
    double min_sep_cells = 3.0;
    int certify_nx = 256; ///< lattice for the grid-gradient interface check
    std::vector<double> lambda{200.0, 400.0, 800.0, 1600.0};
    std::vector<double> mu{2.0, 4.0};
    double epsilon = 0.1;
};

struct PointwiseConfig {
    std::vector<double> lambda{1.0, 10.0, 100.0};
    std::vector<double> mu{1.0, 2.0, 4.0};
    std::vector<double> margin_lambda{1e2, 1e3, 1e4};
    double margin_mu = 4.0;
    int space_samples = 8;
    int random_samples = 100;
};

struct SolverConfig {
    int refinements = 3;
    int space_nx = 16;   ///< coarsest space level
    int time_nt = 8;     ///< coarsest time level
    int time_nx = 512;   ///< spatial cells of the time study
    double cg_tol = 1e-10;
};

struct CarlemanConfig {
    std::vector<std::string> theorems{"global_4_1", "slab_5_1", "local_5_2"};
    double threshold = 1.25;
};

struct ControlConfig {
    std::vector<double> epsilon_pen{1e-2, 1e-4, 1e-6};
    double cg_tol = 1e-10;
    int max_iter = 500;
    int fd_directions = 5;
    double target = 1e-3;
};

struct Config {
    carleman::domain::GeometrySpec geometry;
    GridConfig grid;
    CoefficientConfig coefficients;
    WeightsConfig weights;
    PointwiseConfig pointwise;
    SolverConfig solver;
    CarlemanConfig carleman;
    ControlConfig control;
    std::string text; ///< raw config bytes
};

namespace detail {

inline void config_error(const std::string& where, const std::string& what) {
    throw carleman::Error(ErrorKind::config, where + ": " + what);
}

inline void allow(const json& j, const std::string& where, std::set<std::string> keys) {
    if (!j.is_object()) config_error(where, "expected an object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) config_error(where, "unknown key '" + k + "'");
}

template <class T>
void get(const json& j, const std::string& where, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(where + "." + key, std::string("wrong type (") + e.what() + ")");
    }
}

inline carleman::domain::Region region(const json& j, const std::string& where, int dim) {
    carleman::domain::Region r;
    if (!j.is_array()) config_error(where, "expected an array of boxes");
    for (const auto& b : j) {
        auto v = b.get<std::vector<double>>();
        if (v.size() != static_cast<std::size_t>(dim == 1 ? 2 : 4))
            config_error(where, dim == 1 ? "boxes are [x0, x1]" : "boxes are [x0, x1, y0, y1]");
        carleman::domain::Box box{v[0], v[1]};
        if (dim == 2) {
            box.y0 = v[2];
            box.y1 = v[3];
        }
        if (!(box.x1 > box.x0) || (dim == 2 && !(box.y1 > box.y0))) config_error(where, "empty box");
        r.boxes.push_back(box);
    }
    return r;
}

inline void positive(int v, const std::string& where) {
    if (v <= 0) config_error(where, "must be a positive integer");
}

inline carleman::Mat2 tensor(const std::vector<double>& v, const std::string& where) {
    if (v.size() != 3) config_error(where, "tensor is [a11, a12, a22]");
    return carleman::Mat2::symmetric(v[0], v[1], v[2]);
}

} // namespace detail

inline Config parse_config_unchecked(const std::string& text);

/// Parses and validates a config; every error is a config error naming its key.
inline Config parse_config(const std::string& text) {
    try {
        return parse_config_unchecked(text);
    } catch (const json::exception& e) {
        throw carleman::Error(ErrorKind::config, std::string("malformed value (") + e.what() + ")");
    }
}

inline Config parse_config_unchecked(const std::string& text) {
    using namespace detail;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        config_error("config", std::string("not valid JSON (") + e.what() + ")");
    }
    allow(j, "config", {"geometry", "grid", "coefficients", "weights", "pointwise", "solver", "carleman", "control"});
    Config c;
    c.text = text;
    c.geometry = carleman::scenarios::default_geometry_1d();

    auto& g = c.geometry;
    if (j.contains("geometry")) {
        const json& jg = j["geometry"];
        allow(jg, "geometry", {"dimension", "x0", "x1", "y0", "y1", "interface", "interface_x", "circle_center",
                               "circle_radius", "T", "omega", "omega1", "omega2"});
        int dim = 1;
        get(jg, "geometry", "dimension", dim);
        if (dim != 1 && dim != 2) config_error("geometry.dimension", "must be 1 or 2");
        g = dim == 1 ? carleman::scenarios::default_geometry_1d() : carleman::scenarios::default_geometry_2d();
        get(jg, "geometry", "x0", g.x0);
        get(jg, "geometry", "x1", g.x1);
        get(jg, "geometry", "y0", g.y0);
        get(jg, "geometry", "y1", g.y1);
        get(jg, "geometry", "interface_x", g.interface_x);
        get(jg, "geometry", "circle_radius", g.circle_radius);
        get(jg, "geometry", "T", g.T);
        std::string shape = g.dimension == 1 ? "point" : "line";
        get(jg, "geometry", "interface", shape);
        if (shape == "point") g.shape = carleman::domain::InterfaceShape::point;
        else if (shape == "line") g.shape = carleman::domain::InterfaceShape::vertical_line;
        else if (shape == "circle") g.shape = carleman::domain::InterfaceShape::circle;
        else config_error("geometry.interface", "must be point, line or circle");
        if (jg.contains("circle_center")) {
            auto v = jg["circle_center"].get<std::vector<double>>();
            if (v.size() != 2) config_error("geometry.circle_center", "expected [x, y]");
            g.circle_center = {v[0], v[1]};
        }
        for (const char* k : {"omega", "omega1", "omega2"})
            if (jg.contains(k)) {
                auto r = region(jg[k], std::string("geometry.") + k, g.dimension);
                (std::string(k) == "omega" ? g.omega : std::string(k) == "omega1" ? g.omega1 : g.omega2) = r;
            }
    }
    try {
        carleman::domain::validate(g);
    } catch (const carleman::Error& e) {
        config_error("geometry", e.what());
    }
    for (const auto* r : {&g.omega1, &g.omega2})
        for (const auto& b : r->boxes)
            if (!g.omega.contains(b.center(g.dimension), g.dimension))
                config_error("geometry", "omega1 and omega2 boxes must lie inside omega");

    if (j.contains("grid")) {
        const json& jg = j["grid"];
        allow(jg, "grid", {"nx", "nt", "ny"});
        get(jg, "grid", "nx", c.grid.nx);
        get(jg, "grid", "nt", c.grid.nt);
        get(jg, "grid", "ny", c.grid.ny);
    }
    positive(c.grid.nx, "grid.nx");
    positive(c.grid.nt, "grid.nt");
    positive(c.grid.ny, "grid.ny");

    auto& co = c.coefficients;
    if (j.contains("coefficients")) {
        const json& jc = j["coefficients"];
        allow(jc, "coefficients", {"kind", "a", "a_tilde", "s0", "amplitude", "frequency", "a_path", "a_tilde_path"});
        get(jc, "coefficients", "kind", co.kind);
        get(jc, "coefficients", "a", co.a);
        get(jc, "coefficients", "a_tilde", co.a_tilde);
        get(jc, "coefficients", "s0", co.s0);
        get(jc, "coefficients", "amplitude", co.amplitude);
        get(jc, "coefficients", "frequency", co.frequency);
        get(jc, "coefficients", "a_path", co.a_path);
        get(jc, "coefficients", "a_tilde_path", co.a_tilde_path);
    }
    if (co.kind != "piecewise_constant" && co.kind != "smooth_in_t" && co.kind != "tabulated")
        config_error("coefficients.kind", "must be piecewise_constant, smooth_in_t or tabulated");
    tensor(co.a, "coefficients.a");
    tensor(co.a_tilde, "coefficients.a_tilde");
    if (!(co.s0 > 0.0)) config_error("coefficients.s0", "ellipticity constant must be positive");
    if (co.kind == "tabulated" && (co.a_path.empty() || co.a_tilde_path.empty()))
        config_error("coefficients", "tabulated coefficients need a_path and a_tilde_path");
    if (co.kind == "smooth_in_t" && !(std::abs(co.amplitude) < 1.0))
        config_error("coefficients.amplitude", "must satisfy |amplitude| < 1");

    auto& w = c.weights;
    if (j.contains("weights")) {
        const json& jw = j["weights"];
        allow(jw, "weights", {"modulation", "slab_override", "epsilon0", "min_sep_cells", "certify_nx", "lambda", "mu",
                              "epsilon"});
        get(jw, "weights", "modulation", w.modulation);
        get(jw, "weights", "slab_override", w.slab_override);
        get(jw, "weights", "epsilon0", w.epsilon0);
        get(jw, "weights", "min_sep_cells", w.min_sep_cells);
        get(jw, "weights", "certify_nx", w.certify_nx);
        get(jw, "weights", "lambda", w.lambda);
        get(jw, "weights", "mu", w.mu);
        get(jw, "weights", "epsilon", w.epsilon);
    }
    if (w.slab_override < 0) config_error("weights.slab_override", "must be nonnegative");
    if (!(w.epsilon0 > 0.0)) config_error("weights.epsilon0", "must be positive");
    if (w.certify_nx < 8) config_error("weights.certify_nx", "must be at least 8");

    auto& p = c.pointwise;
    if (j.contains("pointwise")) {
        const json& jp = j["pointwise"];
        allow(jp, "pointwise", {"lambda", "mu", "margin_lambda", "margin_mu", "space_samples", "random_samples"});
        get(jp, "pointwise", "lambda", p.lambda);
        get(jp, "pointwise", "mu", p.mu);
        get(jp, "pointwise", "margin_lambda", p.margin_lambda);
        get(jp, "pointwise", "margin_mu", p.margin_mu);
        get(jp, "pointwise", "space_samples", p.space_samples);
        get(jp, "pointwise", "random_samples", p.random_samples);
    }
    positive(p.space_samples, "pointwise.space_samples");
    if (p.random_samples < 0) config_error("pointwise.random_samples", "must be nonnegative");

    auto check_params = [&](const std::vector<double>& ls, const std::vector<double>& ms, const std::string& where) {
        if (ls.empty() || ms.empty()) config_error(where, "lambda and mu lists must be nonempty");
        for (double l : ls)
            for (double m : ms) {
                try {
                    carleman::weights::CarlemanParams{l, m, 1.0, w.epsilon}.validate();
                } catch (const carleman::Error& e) {
                    config_error(where, e.what());
                }
            }
    };
    check_params(w.lambda, w.mu, "weights");
    check_params(p.lambda, p.mu, "pointwise");
    check_params(p.margin_lambda, {p.margin_mu}, "pointwise");

    auto& s = c.solver;
    if (j.contains("solver")) {
        const json& js = j["solver"];
        allow(js, "solver", {"refinements", "space_nx", "time_nt", "time_nx", "cg_tol"});
        get(js, "solver", "refinements", s.refinements);
        get(js, "solver", "space_nx", s.space_nx);
        get(js, "solver", "time_nt", s.time_nt);
        get(js, "solver", "time_nx", s.time_nx);
        get(js, "solver", "cg_tol", s.cg_tol);
    }
    positive(s.refinements, "solver.refinements");
    positive(s.space_nx, "solver.space_nx");
    positive(s.time_nt, "solver.time_nt");
    positive(s.time_nx, "solver.time_nx");
    if (!(s.cg_tol > 0.0 && s.cg_tol < 1.0)) config_error("solver.cg_tol", "must lie in (0, 1)");

    auto& k = c.carleman;
    if (j.contains("carleman")) {
        const json& jk = j["carleman"];
        allow(jk, "carleman", {"theorems", "threshold"});
        get(jk, "carleman", "theorems", k.theorems);
        get(jk, "carleman", "threshold", k.threshold);
    }
    for (const auto& t : k.theorems)
        if (t != "global_4_1" && t != "slab_5_1" && t != "local_5_2")
            config_error("carleman.theorems", "unknown theorem '" + t + "'");
    if (!(k.threshold >= 1.0)) config_error("carleman.threshold", "must be at least 1");

    auto& ct = c.control;
    if (j.contains("control")) {
        const json& jc = j["control"];
        allow(jc, "control", {"epsilon_pen", "cg_tol", "max_iter", "fd_directions", "target"});
        get(jc, "control", "epsilon_pen", ct.epsilon_pen);
        get(jc, "control", "cg_tol", ct.cg_tol);
        get(jc, "control", "max_iter", ct.max_iter);
        get(jc, "control", "fd_directions", ct.fd_directions);
        get(jc, "control", "target", ct.target);
    }
    if (ct.epsilon_pen.empty()) config_error("control.epsilon_pen", "must be nonempty");
    for (double e : ct.epsilon_pen)
        if (!(e > 0.0)) config_error("control.epsilon_pen", "penalties must be positive");
    positive(ct.max_iter, "control.max_iter");
    positive(ct.fd_directions, "control.fd_directions");
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw carleman::Error(ErrorKind::config, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline carleman::domain::DiffusionPair make_diffusion(const Config& c) {
    const auto& co = c.coefficients;
    auto a = detail::tensor(co.a, "coefficients.a"), at = detail::tensor(co.a_tilde, "coefficients.a_tilde");
    if (co.kind == "smooth_in_t") return carleman::domain::smooth_in_t(a, at, co.amplitude, co.frequency, co.s0);
    if (co.kind == "tabulated")
        return carleman::domain::tabulated(co.a_path, co.a_tilde_path, c.geometry.dimension, co.s0);
    return carleman::domain::piecewise_constant(a, at, co.s0);
}

} // namespace lab
