#pragma once

#include <nlohmann/json.hpp>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "vshock/core.hpp"
#include "vshock/evolve.hpp"
#include "vshock/model.hpp"
#include "vshock/profile.hpp"
#include "vshock/spectral.hpp"

namespace vshock {

// Run configuration: JSON with a strict schema.  Unknown keys anywhere in
// the document are rejected so that runs referenced by reports stay
// reproducible.

struct TemplateOverrides {
    double L = 0.0;    // 0 => derived from the endstate viscosities
    double M = 0.0;
    double eta = 0.0;  // 0 => fitted profile decay rate
};

struct InitialDataSpec {
    std::string shape = "gaussian";  // gaussian | bump | dipole
    double amplitude = 0.01;         // E0
    double center = 0.0;
    double width = 2.0;
    int component = 0;
};

struct TrackControls {
    double tol_track = 0.05;
};

struct RunConfig {
    std::string model_name = "burgers";
    std::vector<std::vector<PolynomialTerm>> flux_terms;  // inline model
    std::vector<std::vector<PolynomialTerm>> visc_terms;
    int inline_n = 0;
    Vec inline_u_minus, inline_u_plus;

    ProfileOptions profile;
    EvansOptions evans;
    double contour_r0 = 1e-2, contour_R = 8.0;
    TemplateOverrides templates;
    EvolveControls evolve;
    InitialDataSpec u0;
    TrackControls track;
    std::vector<std::string> lemmas;  // empty => all
    std::string out_dir = ".";
    unsigned seed = 0;
    int threads = 1;

    FluxModel make_model() const {
        if (inline_n > 0)
            return make_polynomial_model(inline_n, flux_terms, visc_terms,
                                         inline_u_minus, inline_u_plus,
                                         model_name.empty() ? "custom"
                                                            : model_name);
        return registry(model_name);
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw ConfigError("'" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double num_in(const nlohmann::json& j, const char* key, double fallback,
                     double lo, double hi, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw ConfigError(std::string(key) + " in " + where + " must be numeric");
    double v = j[key].get<double>();
    if (v < lo || v > hi)
        throw ConfigError(std::string(key) + " in " + where + " out of range [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

inline std::vector<PolynomialTerm> parse_poly(const nlohmann::json& j,
                                              const std::string& where) {
    std::vector<PolynomialTerm> terms;
    if (!j.is_array()) throw ConfigError(where + " must be a term array");
    for (const auto& t : j) {
        require_keys(t, where, {"coef", "powers"});
        PolynomialTerm pt;
        pt.coef = t.at("coef").get<double>();
        pt.powers = t.at("powers").get<std::vector<int>>();
        terms.push_back(std::move(pt));
    }
    return terms;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::num_in;
    using detail::require_keys;
    RunConfig c;
    require_keys(j, "config",
                 {"model", "profile", "spectral", "templates", "evolve", "u0",
                  "track", "lemmas", "out", "seed", "threads"});

    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.is_string()) {
            c.model_name = m.get<std::string>();
        } else {
            require_keys(m, "model",
                         {"name", "n", "flux", "viscosity", "u_minus", "u_plus"});
            c.model_name = m.value("name", std::string("custom"));
            c.inline_n = m.at("n").get<int>();
            if (c.inline_n < 1 || c.inline_n > 8)
                throw ConfigError("model.n out of range [1, 8]");
            for (const auto& row : m.at("flux"))
                c.flux_terms.push_back(detail::parse_poly(row, "model.flux"));
            for (const auto& row : m.at("viscosity"))
                c.visc_terms.push_back(detail::parse_poly(row, "model.viscosity"));
            if (static_cast<int>(c.flux_terms.size()) != c.inline_n ||
                static_cast<int>(c.visc_terms.size()) != c.inline_n * c.inline_n)
                throw ConfigError("model flux/viscosity term counts must be n and n*n");
            auto um = m.at("u_minus").get<std::vector<double>>();
            auto up = m.at("u_plus").get<std::vector<double>>();
            if (static_cast<int>(um.size()) != c.inline_n ||
                static_cast<int>(up.size()) != c.inline_n)
                throw ConfigError("endstate dimensions must equal n");
            c.inline_u_minus = Eigen::Map<Vec>(um.data(), c.inline_n);
            c.inline_u_plus = Eigen::Map<Vec>(up.data(), c.inline_n);
        }
    }
    if (j.contains("profile")) {
        const auto& p = j["profile"];
        require_keys(p, "profile",
                     {"x_inf", "grid_points", "tol_profile", "tol_tail"});
        c.profile.x_inf = num_in(p, "x_inf", 0.0, 0.0, 1e4, "profile");
        c.profile.grid_points =
            static_cast<int>(num_in(p, "grid_points", 400, 16, 100000, "profile"));
        c.profile.tol_profile =
            num_in(p, "tol_profile", 1e-8, 1e-14, 1e-2, "profile");
        c.profile.tol_tail = num_in(p, "tol_tail", 1e-8, 1e-14, 1e-2, "profile");
    }
    if (j.contains("spectral")) {
        const auto& s = j["spectral"];
        require_keys(s, "spectral",
                     {"r0", "R", "lambda_ref", "chunks", "splitting_gap"});
        c.contour_r0 = num_in(s, "r0", 1e-2, 1e-6, 1.0, "spectral");
        c.contour_R = num_in(s, "R", 8.0, 1.0, 1e3, "spectral");
        c.evans.lambda_ref = num_in(s, "lambda_ref", 1.0, 1e-4, 1e3, "spectral");
        c.evans.chunks =
            static_cast<int>(num_in(s, "chunks", 32, 4, 4096, "spectral"));
        c.evans.splitting_gap =
            num_in(s, "splitting_gap", 1e-8, 1e-14, 1.0, "spectral");
    }
    if (j.contains("templates")) {
        const auto& t = j["templates"];
        require_keys(t, "templates", {"L", "M", "eta"});
        c.templates.L = num_in(t, "L", 0.0, 0.0, 1e4, "templates");
        c.templates.M = num_in(t, "M", 0.0, 0.0, 1e4, "templates");
        c.templates.eta = num_in(t, "eta", 0.0, 0.0, 1e2, "templates");
    }
    if (j.contains("evolve")) {
        const auto& e = j["evolve"];
        require_keys(e, "evolve",
                     {"T", "dx", "cfl", "x_dom", "snapshots", "blowup_factor"});
        c.evolve.T = num_in(e, "T", 100.0, 1e-3, 1e6, "evolve");
        c.evolve.dx = num_in(e, "dx", 0.1, 1e-4, 10.0, "evolve");
        c.evolve.cfl = num_in(e, "cfl", 0.4, 1e-3, 0.9, "evolve");
        c.evolve.x_dom = num_in(e, "x_dom", 0.0, 0.0, 1e7, "evolve");
        c.evolve.snapshots =
            static_cast<int>(num_in(e, "snapshots", 150, 4, 5000, "evolve"));
        c.evolve.blowup_factor =
            num_in(e, "blowup_factor", 10.0, 1.1, 1e6, "evolve");
    }
    if (j.contains("u0")) {
        const auto& u = j["u0"];
        require_keys(u, "u0", {"shape", "amplitude", "center", "width", "component"});
        c.u0.shape = u.value("shape", std::string("gaussian"));
        if (c.u0.shape != "gaussian" && c.u0.shape != "bump" &&
            c.u0.shape != "dipole")
            throw ConfigError("u0.shape must be gaussian, bump, or dipole");
        c.u0.amplitude = num_in(u, "amplitude", 0.01, 0.0, 1e3, "u0");
        c.u0.center = num_in(u, "center", 0.0, -1e6, 1e6, "u0");
        c.u0.width = num_in(u, "width", 2.0, 1e-3, 1e4, "u0");
        c.u0.component =
            static_cast<int>(num_in(u, "component", 0, 0, 7, "u0"));
    }
    if (j.contains("track")) {
        const auto& t = j["track"];
        require_keys(t, "track", {"tol_track"});
        c.track.tol_track = num_in(t, "tol_track", 0.05, 1e-8, 1.0, "track");
    }
    if (j.contains("lemmas")) {
        if (!j["lemmas"].is_array())
            throw ConfigError("'lemmas' must be an array of identifiers");
        for (const auto& l : j["lemmas"]) c.lemmas.push_back(l.get<std::string>());
    }
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ConfigError("'seed' must be a nonnegative integer");
        c.seed = j["seed"].get<unsigned>();
    }
    if (j.contains("threads"))
        c.threads = static_cast<int>(num_in(j, "threads", 1, 1, 256, "config"));
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

/// Initial perturbation factory from the config shape.
inline std::function<Vec(double)> make_initial_data(const InitialDataSpec& s, int n) {
    if (s.component >= n) throw ConfigError("u0.component exceeds model dimension");
    double A = s.amplitude, x0 = s.center, w = s.width;
    int comp = s.component;
    std::string shape = s.shape;
    return [=](double x) {
        Vec u = Vec::Zero(n);
        double z = (x - x0) / w;
        if (shape == "gaussian")
            u[comp] = A * std::exp(-0.5 * z * z);
        else if (shape == "bump")
            u[comp] = (std::abs(z) < 1.0) ? A * std::exp(-1.0 / (1.0 - z * z)) *
                                                std::exp(1.0)
                                          : 0.0;
        else  // dipole
            u[comp] = -A * z * std::exp(-0.5 * z * z);
        return u;
    };
}

}  // namespace vshock
