// psrnoise: phase-dependent quantum noise spectra of the vacuum polarization
// mode behind a pumped multilevel vapor. Subcommands evaluate single points,
// detuning / noise-frequency / power-cooperativity scans, stitch per-manifold
// scans onto one absolute axis, and cross-check the engine against the
// time-domain regression oracle.
//
// Exit codes: 0 success, 1 partial row failures (or failed oracle check),
// 2 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "psr/config.hpp"
#include "psr/version.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<double> Omega, Delta, gamma0, C, delta, pump_angle;
    std::optional<std::string> preset, scheme_file, weighting, loss_channel;
    std::optional<bool> doppler;
    std::optional<int> classes, workers;
    std::optional<double> temperature, width;
    std::optional<std::string> out_csv, out_json;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON configuration file");
    cmd->add_option("--Omega-f", f.Omega, "pump Rabi frequency Omega_f [Gamma]");
    cmd->add_option("--detuning", f.Delta, "pump detuning from the reference transition [Gamma]");
    cmd->add_option("--gamma0", f.gamma0, "ground-state decoherence rate [Gamma]");
    cmd->add_option("--C", f.C, "cooperativity");
    cmd->add_option("--noise-freq", f.delta, "analysis sideband frequency delta [Gamma]");
    cmd->add_option("--preset", f.preset,
                    "scheme preset: rb87-d1-Fg1 | rb87-d1-Fg2 | four-level-toy | custom");
    cmd->add_option("--scheme-file", f.scheme_file, "custom scheme JSON file");
    cmd->add_option("--pump-angle", f.pump_angle, "pump polarization angle [rad]");
    cmd->add_flag("--doppler,!--no-doppler", f.doppler, "Doppler averaging on/off");
    cmd->add_option("--classes", f.classes, "velocity class count");
    cmd->add_option("--temperature", f.temperature, "cell temperature [K]");
    cmd->add_option("--doppler-width", f.width, "k.v standard deviation [Gamma]");
    cmd->add_option("--weighting", f.weighting, "velocity weighting: boltzmann | uniform");
    cmd->add_option("--loss-channel", f.loss_channel, "loss handling: recycle | open");
    cmd->add_option("--workers", f.workers, "worker thread count");
    cmd->add_option("--out-csv", f.out_csv, "CSV output path");
    cmd->add_option("--out-json", f.out_json, "JSON output path");
}

void apply_overrides(psr::json& c, const CommonFlags& f) {
    if (f.Omega) c["drive"]["Omega_f_Gamma"] = *f.Omega;
    if (f.Delta) c["drive"]["Delta_Gamma"] = *f.Delta;
    if (f.gamma0) c["drive"]["gamma0_Gamma"] = *f.gamma0;
    if (f.C) c["drive"]["C"] = *f.C;
    if (f.delta) c["noise"]["delta_Gamma"] = *f.delta;
    if (f.preset) c["scheme"]["preset"] = *f.preset;
    if (f.scheme_file) c["scheme"]["file"] = *f.scheme_file;
    if (f.pump_angle) c["scheme"]["pump_angle_rad"] = *f.pump_angle;
    if (f.doppler) c["doppler"]["enabled"] = *f.doppler;
    if (f.classes) c["doppler"]["classes"] = *f.classes;
    if (f.temperature) c["doppler"]["temperature_K"] = *f.temperature;
    if (f.width) c["doppler"]["width_Gamma"] = *f.width;
    if (f.weighting) c["doppler"]["weighting"] = *f.weighting;
    if (f.loss_channel) c["loss_channel"] = *f.loss_channel;
    if (f.workers) c["workers"] = *f.workers;
    if (f.out_csv) c["output"]["csv"] = *f.out_csv;
    if (f.out_json) c["output"]["json"] = *f.out_json;
}

struct GridFlags {
    std::optional<double> min, max;
    std::optional<int> points;
    std::optional<std::string> spacing;
};

void add_grid(CLI::App* cmd, GridFlags& g, const std::string& what) {
    cmd->add_option("--min", g.min, what + " grid minimum");
    cmd->add_option("--max", g.max, what + " grid maximum");
    cmd->add_option("--points", g.points, what + " grid point count");
    cmd->add_option("--spacing", g.spacing, what + " grid spacing: linear | log");
}

void apply_grid(psr::json& grid, const GridFlags& g) {
    if (g.min) grid["min"] = *g.min;
    if (g.max) grid["max"] = *g.max;
    if (g.points) grid["points"] = *g.points;
    if (g.spacing) grid["spacing"] = *g.spacing;
}

int emit_and_report(const psr::ResultTable& table, const psr::ScanSpec& spec) {
    if (!spec.out_csv.empty()) psr::write_csv(table, spec.out_csv);
    if (!spec.out_json.empty()) psr::write_json(table, spec.out_json);
    const int failed = table.failed_rows();
    std::printf("%zu rows (%d failed)", table.rows.size(), failed);
    if (!spec.out_csv.empty()) std::printf("  csv: %s", spec.out_csv.c_str());
    if (!spec.out_json.empty()) std::printf("  json: %s", spec.out_json.c_str());
    std::printf("\n");
    return failed > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum noise spectra of vacuum polarization in pumped alkali vapor"};
    app.set_version_flag("--version", std::string("psrnoise ") + psr::version);
    app.require_subcommand(1);

    CommonFlags common;
    GridFlags scan_grid, noise_grid, omega_grid, c_grid;

    auto* point = app.add_subcommand("point", "single parameter point at one noise frequency");
    add_common(point, common);

    auto* scan_det = app.add_subcommand("scan-detuning", "noise extrema versus pump detuning");
    add_common(scan_det, common);
    add_grid(scan_det, scan_grid, "detuning");

    auto* scan_nf = app.add_subcommand("scan-noise-freq", "noise extrema versus sideband frequency");
    add_common(scan_nf, common);
    add_grid(scan_nf, noise_grid, "noise-frequency");

    auto* scan_2d =
        app.add_subcommand("scan-2d", "noise extrema over the pump power x cooperativity plane");
    add_common(scan_2d, common);
    scan_2d->add_option("--omega-min", omega_grid.min, "Omega_f grid minimum");
    scan_2d->add_option("--omega-max", omega_grid.max, "Omega_f grid maximum");
    scan_2d->add_option("--omega-points", omega_grid.points, "Omega_f grid point count");
    scan_2d->add_option("--C-min", c_grid.min, "cooperativity grid minimum");
    scan_2d->add_option("--C-max", c_grid.max, "cooperativity grid maximum");
    scan_2d->add_option("--C-points", c_grid.points, "cooperativity grid point count");

    auto* oracle = app.add_subcommand("oracle-check",
                                      "frequency-domain engine versus time-domain regression");
    add_common(oracle, common);
    add_grid(oracle, noise_grid, "noise-frequency");
    std::optional<double> oracle_tol;
    oracle->add_option("--tolerance", oracle_tol, "relative agreement tolerance");

    auto* stitch = app.add_subcommand("stitch",
                                      "concatenate two per-manifold scans on the absolute axis");
    std::string stitch_a, stitch_b, stitch_csv, stitch_json;
    stitch->add_option("lower", stitch_a, "first result JSON")->required();
    stitch->add_option("upper", stitch_b, "second result JSON")->required();
    stitch->add_option("--out-csv", stitch_csv, "CSV output path");
    stitch->add_option("--out-json", stitch_json, "JSON output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stitch->parsed()) {
            const auto a = psr::read_json(stitch_a);
            const auto b = psr::read_json(stitch_b);
            const auto merged = psr::stitch_manifolds(a, b);
            if (!stitch_csv.empty()) psr::write_csv(merged, stitch_csv);
            if (!stitch_json.empty()) psr::write_json(merged, stitch_json);
            std::printf("%zu rows stitched at boundary %g Gamma\n", merged.rows.size(),
                        merged.metadata["stitch"]["boundary_Gamma"].get<double>());
            return merged.failed_rows() > 0 ? 1 : 0;
        }

        psr::json cfg = psr::load_config_file(common.config_path);
        apply_overrides(cfg, common);
        if (scan_det->parsed()) apply_grid(cfg["scan"]["detuning"], scan_grid);
        if (scan_nf->parsed() || oracle->parsed()) apply_grid(cfg["noise"]["grid"], noise_grid);
        if (scan_2d->parsed()) {
            apply_grid(cfg["scan"]["omega"], omega_grid);
            apply_grid(cfg["scan"]["cooperativity"], c_grid);
        }
        if (oracle_tol) cfg["oracle"]["tolerance"] = *oracle_tol;

        psr::ScanKind kind = psr::ScanKind::Point;
        if (point->parsed()) kind = psr::ScanKind::Point;
        else if (scan_det->parsed()) kind = psr::ScanKind::Detuning;
        else if (scan_nf->parsed()) kind = psr::ScanKind::NoiseFreq;
        else if (scan_2d->parsed()) kind = psr::ScanKind::TwoD;
        else if (oracle->parsed()) kind = psr::ScanKind::OracleCheck;

        const psr::ScanSpec spec = psr::resolve_config(cfg, kind);

        if (kind == psr::ScanKind::OracleCheck) {
            const auto res = psr::run_oracle_check(spec);
            std::printf("%s\n", res.report.summary().c_str());
            for (const auto& row : res.report.rows)
                std::printf("  delta %-10g relCN %-12g relCA %-12g argCA diff %g\n", row.delta,
                            row.rel_CN, row.rel_CA, row.arg_CA_diff);
            return res.report.pass ? 0 : 1;
        }

        const auto table = psr::run_scan(spec);
        return emit_and_report(table, spec);
    } catch (const psr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
