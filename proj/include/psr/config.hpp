#pragma once

// JSON configuration: a single structured-text file resolves to a ScanSpec.
// Every physics default (splittings, Doppler width inputs, toy detuning) is
// an explicit key, mirrored in configs/default.json, so no constant hides in
// code. CLI flags override individual keys after the file is loaded.

#include <fstream>

#include "psr/scan.hpp"

namespace psr {

inline json default_config() {
    json c;
    c["gamma_MHz"] = constants::default_gamma_MHz;
    c["scheme"] = {
        {"preset", "rb87-d1-Fg2"},
        {"file", ""},
        {"excited_splitting_Gamma",
         constants::rb87_d1_excited_splitting_MHz / constants::default_gamma_MHz},
        {"ground_splitting_Gamma",
         constants::rb87_ground_splitting_MHz / constants::default_gamma_MHz},
        {"include_excited", json::array({1, 2})},
        {"toy_delta2_Gamma", 50.0},
        {"pump_angle_rad", 0.0},
    };
    c["drive"] = {
        {"Omega_f_Gamma", 10.0}, {"Delta_Gamma", 0.0}, {"gamma0_Gamma", 0.01}, {"C", 100.0}};
    c["noise"] = {
        {"delta_Gamma", 0.2},
        {"grid", {{"min", 0.01}, {"max", 2.0}, {"points", 40}, {"spacing", "log"}}}};
    c["scan"] = {
        {"detuning", {{"min", -250.0}, {"max", 250.0}, {"points", 251}, {"spacing", "linear"}}},
        {"omega", {{"min", 1.0}, {"max", 40.0}, {"points", 20}, {"spacing", "linear"}}},
        {"cooperativity", {{"min", 1.0}, {"max", 1000.0}, {"points", 20}, {"spacing", "log"}}}};
    c["doppler"] = {{"enabled", false},
                    {"temperature_K", 332.15},
                    {"width_Gamma", -1.0},
                    {"classes", 40},
                    {"weighting", "boltzmann"}};
    c["loss_channel"] = "recycle";
    c["oracle"] = {{"tolerance", 1e-3}};
    c["workers"] = 1;
    c["output"] = {{"csv", "result.csv"}, {"json", "result.json"}};
    return c;
}

namespace config_detail {

inline void merge(json& base, const json& overlay) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

inline GridSpec grid_from(const json& g, const std::string& what) {
    GridSpec spec;
    try {
        spec.min = g.at("min").get<double>();
        spec.max = g.at("max").get<double>();
        spec.points = g.at("points").get<int>();
        const std::string sp = g.value("spacing", "linear");
        if (sp == "log")
            spec.log_spacing = true;
        else if (sp != "linear")
            throw ConfigError(what + ": spacing must be 'linear' or 'log'");
    } catch (const json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
    if (spec.points < 1) throw ConfigError(what + ": points must be >= 1");
    if (spec.points > 1 && !(spec.max > spec.min))
        throw ConfigError(what + ": max must exceed min");
    return spec;
}

}  // namespace config_detail

inline json load_config_file(const std::string& path) {
    json c = default_config();
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        json user;
        try {
            user = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        config_detail::merge(c, user);
    }
    return c;
}

/// Resolves a configuration JSON into a validated ScanSpec.
inline ScanSpec resolve_config(const json& c, ScanKind kind) {
    ScanSpec spec;
    spec.kind = kind;
    try {
        spec.gamma_MHz = c.at("gamma_MHz").get<double>();

        const json& s = c.at("scheme");
        spec.scheme.preset = s.at("preset").get<std::string>();
        spec.scheme.custom_file = s.value("file", "");
        spec.scheme.rb87.excited_splitting = s.at("excited_splitting_Gamma").get<double>();
        spec.scheme.rb87.ground_splitting = s.at("ground_splitting_Gamma").get<double>();
        spec.scheme.rb87.include_Fe1 = false;
        spec.scheme.rb87.include_Fe2 = false;
        for (const auto& fe : s.at("include_excited")) {
            const int v = fe.get<int>();
            if (v == 1) spec.scheme.rb87.include_Fe1 = true;
            else if (v == 2) spec.scheme.rb87.include_Fe2 = true;
            else throw ConfigError("scheme.include_excited entries must be 1 or 2");
        }
        spec.scheme.toy.delta2 = s.at("toy_delta2_Gamma").get<double>();
        spec.scheme.pump_angle_rad = s.at("pump_angle_rad").get<double>();
        spec.scheme.rb87.pump_angle_rad = spec.scheme.pump_angle_rad;

        const json& d = c.at("drive");
        spec.drive.Omega_f = d.at("Omega_f_Gamma").get<double>();
        spec.drive.Delta = d.at("Delta_Gamma").get<double>();
        spec.drive.gamma0 = d.at("gamma0_Gamma").get<double>();
        spec.drive.C = d.at("C").get<double>();

        spec.delta = c.at("noise").at("delta_Gamma").get<double>();
        spec.delta_grid = config_detail::grid_from(c.at("noise").at("grid"), "noise.grid");
        spec.detuning_grid = config_detail::grid_from(c.at("scan").at("detuning"), "scan.detuning");
        spec.omega_grid = config_detail::grid_from(c.at("scan").at("omega"), "scan.omega");
        spec.C_grid = config_detail::grid_from(c.at("scan").at("cooperativity"),
                                               "scan.cooperativity");

        const json& dop = c.at("doppler");
        spec.doppler.enabled = dop.at("enabled").get<bool>();
        spec.doppler.temperature_K = dop.at("temperature_K").get<double>();
        spec.doppler.width = dop.at("width_Gamma").get<double>();
        spec.doppler.classes = dop.at("classes").get<int>();
        const std::string wmode = dop.at("weighting").get<std::string>();
        if (wmode == "boltzmann")
            spec.doppler.weighting = ClassWeighting::Boltzmann;
        else if (wmode == "uniform")
            spec.doppler.weighting = ClassWeighting::Uniform;
        else
            throw ConfigError("doppler.weighting must be 'boltzmann' or 'uniform'");
        if (spec.doppler.classes < 1) throw ConfigError("doppler.classes must be >= 1");

        const std::string loss = c.at("loss_channel").get<std::string>();
        if (loss == "recycle")
            spec.loss_mode = LossChannel::Recycle;
        else if (loss == "open")
            spec.loss_mode = LossChannel::Open;
        else
            throw ConfigError("loss_channel must be 'recycle' or 'open'");

        spec.oracle_tolerance = c.at("oracle").at("tolerance").get<double>();
        spec.workers = c.at("workers").get<int>();
        spec.out_csv = c.at("output").at("csv").get<std::string>();
        spec.out_json = c.at("output").at("json").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }

    try {
        spec.drive.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("drive: ") + e.what());
    }
    if (spec.workers < 1) throw ConfigError("workers must be >= 1");
    spec.resolved = c;
    return spec;
}

/// Custom scheme file: manifolds with F values and energy offsets (units of
/// Gamma), hyperfine couplings from (I, J) or explicit coupling overrides.
inline LevelScheme load_custom_scheme(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scheme file '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scheme parse error: ") + e.what());
    }

    LevelScheme s;
    try {
        s.name = doc.value("name", "custom");
        s.gamma_MHz = doc.value("gamma_MHz", constants::default_gamma_MHz);

        // ground manifolds first, preserving file order within each group
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& m : doc.at("manifolds")) {
                const bool ground = m.at("ground").get<bool>();
                if ((pass == 0) != ground) continue;
                const double F = m.at("F").get<double>();
                const int F2 = static_cast<int>(std::lround(2.0 * F));
                const double energy = m.at("energy_Gamma").get<double>();
                const std::string id = m.at("id").get<std::string>();
                for (int m2 = -F2; m2 <= F2; m2 += 2) s.levels.push_back({id, F2, m2, energy});
                if (pass == 0) s.n_ground = static_cast<int>(s.levels.size());
            }
        }
        if (s.n_ground == 0 || s.n_ground == s.n_levels())
            throw ConfigError("scheme file must declare ground and excited manifolds");

        const int ne = s.n_excited(), ng = s.n_ground;
        for (int k = 0; k < 3; ++k) s.coupling.d[k] = MatrixXd::Zero(ne, ng);

        const json& cp = doc.at("couplings");
        const std::string mode = cp.at("mode").get<std::string>();
        if (mode == "hyperfine") {
            const double I = cp.at("I").get<double>();
            const double Jg = cp.at("Jg").get<double>();
            const double Je = cp.at("Je").get<double>();
            for (int e = 0; e < ne; ++e)
                for (int g = 0; g < ng; ++g)
                    for (int q = -1; q <= 1; ++q)
                        s.coupling.q(q)(e, g) = angular::dipole_weight(
                            0.5 * s.ground(g).F2, 0.5 * s.ground(g).m2, 0.5 * s.excited(e).F2,
                            0.5 * s.excited(e).m2, q, I, Jg, Je);
        } else if (mode == "explicit") {
            auto find_level = [&](const std::string& id, double m, bool ground) {
                const int m2 = static_cast<int>(std::lround(2.0 * m));
                for (int i = 0; i < s.n_levels(); ++i)
                    if (s.levels[i].manifold == id && s.levels[i].m2 == m2 &&
                        s.is_ground(i) == ground)
                        return i;
                throw ConfigError("scheme file references unknown level " + id);
            };
            for (const auto& e : cp.at("entries")) {
                const int ie = find_level(e.at("e_manifold").get<std::string>(),
                                          e.at("me").get<double>(), false);
                const int ig = find_level(e.at("g_manifold").get<std::string>(),
                                          e.at("mg").get<double>(), true);
                const int q = e.at("q").get<int>();
                s.coupling.q(q)(ie - ng, ig) = e.at("weight").get<double>();
            }
        } else {
            throw ConfigError("couplings.mode must be 'hyperfine' or 'explicit'");
        }

        s.loss = VectorXd::Zero(ne);
        if (doc.contains("loss")) {
            int e = 0;
            for (const auto& v : doc.at("loss")) {
                if (e >= ne) throw ConfigError("loss vector longer than the excited level count");
                s.loss(e++) = v.get<double>();
            }
        } else {
            for (int e = 0; e < ne; ++e) {
                double modeled = 0.0;
                for (int k = 0; k < 3; ++k) modeled += s.coupling.d[k].row(e).squaredNorm();
                s.loss(e) = 1.0 - modeled;
            }
        }

        const json& ref = doc.at("reference");
        bool found_g = false, found_e = false;
        for (int i = 0; i < s.n_levels(); ++i) {
            if (!found_g && s.is_ground(i) &&
                s.levels[i].manifold == ref.at("g_manifold").get<std::string>()) {
                s.reference_ground = i;
                found_g = true;
            }
            if (!found_e && !s.is_ground(i) &&
                s.levels[i].manifold == ref.at("e_manifold").get<std::string>()) {
                s.reference_excited = i;
                found_e = true;
            }
        }
        if (!found_g || !found_e) throw ConfigError("reference transition not found in scheme");
        s.reference_name = ref.at("g_manifold").get<std::string>() + "->" +
                           ref.at("e_manifold").get<std::string>();
        s.absolute_offset = doc.value("absolute_offset_Gamma", 0.0);

        if (doc.contains("pump_angle_rad"))
            s.default_geometry = polarization_decompose(doc.at("pump_angle_rad").get<double>());
        else
            s.default_geometry = polarization_decompose(0.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scheme file error: ") + e.what());
    }

    try {
        validate_scheme(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid custom scheme: ") + e.what());
    }
    return s;
}

}  // namespace psr
