#pragma once

#include <nlohmann/json.hpp>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vshock/core.hpp"
#include "vshock/evolve.hpp"
#include "vshock/profile.hpp"
#include "vshock/templates.hpp"

namespace vshock {

// CSV/JSON artifact writers.  All floating-point output uses the shortest
// round-trip representation so identical runs produce byte-identical files.

namespace io {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << body;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

/// Profile samples: x, u_1..u_n, du_1..du_n.
inline void write_profile_csv(const std::filesystem::path& path, const Profile& p) {
    const int n = static_cast<int>(p.values.rows());
    std::string body = "x";
    for (int i = 0; i < n; ++i) body += ",u_" + std::to_string(i + 1);
    for (int i = 0; i < n; ++i) body += ",du_" + std::to_string(i + 1);
    body += "\n";
    for (int k = 0; k < p.size(); ++k) {
        body += fmt(p.grid[k]);
        for (int i = 0; i < n; ++i) body += "," + fmt(p.values(i, k));
        for (int i = 0; i < n; ++i) body += "," + fmt(p.derivative(i, k));
        body += "\n";
    }
    write_text(path, body);
}

inline nlohmann::json profile_sidecar(const FluxModel& m, const Profile& p) {
    auto vec = [](const Vec& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    return {{"model", m.name},
            {"u_minus", vec(p.u_minus)},
            {"u_plus", vec(p.u_plus)},
            {"eta", p.eta},
            {"ell", p.ell},
            {"residual", p.residual}};
}

/// Template field dump on a rectangular (x,t) grid.
inline void write_template_csv(const std::filesystem::path& path,
                               const TemplateParams& p, const Vec& xs,
                               const Vec& ts) {
    std::string body = "x,t,theta,psi1,psi2,psi_total\n";
    for (int j = 0; j < ts.size(); ++j)
        for (int i = 0; i < xs.size(); ++i) {
            double x = xs[i], t = ts[j];
            body += fmt(x) + "," + fmt(t) + "," + fmt(theta(x, t, p)) + "," +
                    fmt(psi1(x, t, p)) + "," + fmt(psi2(x, t, p)) + "," +
                    fmt(psi_total(x, t, p)) + "\n";
        }
    write_text(path, body);
}

/// Trajectory snapshots: x, t, components.
inline void write_field_csv(const std::filesystem::path& path,
                            const PerturbationField& f) {
    const int n = f.dim();
    std::string body = "x,t";
    for (int i = 0; i < n; ++i) body += ",u_" + std::to_string(i + 1);
    body += "\n";
    for (std::size_t j = 0; j < f.times.size(); ++j)
        for (int k = 0; k < f.size(); ++k) {
            body += fmt(f.grid[k]) + "," + fmt(f.times[j]);
            for (int i = 0; i < n; ++i) body += "," + fmt(f.values[j](i, k));
            body += "\n";
        }
    write_text(path, body);
}

}  // namespace io
}  // namespace vshock
