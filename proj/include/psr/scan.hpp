#pragma once

// Scan orchestration: grid enumeration, parallel row evaluation, Doppler
// dispatch, manifold stitching. Rows are sharded statically over worker
// threads and written into preallocated slots ordered by coordinates, so
// the output is independent of the worker count. Engine errors are caught
// per row and recorded in the status column; one bad point never aborts a
// scan.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "psr/ensemble.hpp"
#include "psr/oracle.hpp"
#include "psr/result_table.hpp"
#include "psr/version.hpp"

namespace psr {

enum class ScanKind { Point, Detuning, NoiseFreq, TwoD, OracleCheck };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int points = 1;
    bool log_spacing = false;

    VectorXd values() const {
        if (points < 1) throw ConfigError("grid must contain at least one point");
        if (points == 1) return VectorXd::Constant(1, min);
        if (!(max > min)) throw ConfigError("grid bounds must satisfy max > min");
        if (log_spacing) {
            if (!(min > 0.0)) throw ConfigError("log-spaced grid requires min > 0");
            VectorXd v = VectorXd::LinSpaced(points, std::log(min), std::log(max));
            return v.array().exp();
        }
        return VectorXd::LinSpaced(points, min, max);
    }
};

struct SchemeSpec {
    std::string preset = "rb87-d1-Fg2";   // rb87-d1-Fg1 | rb87-d1-Fg2 | four-level-toy | custom
    std::string custom_file;
    Rb87Options rb87;
    ToyOptions toy;
    double pump_angle_rad = 0.0;
};

struct DopplerSpec {
    bool enabled = false;
    double temperature_K = 332.15;
    double width = -1.0;   // k.v standard deviation in Gamma; < 0 derives from temperature
    int classes = 40;
    ClassWeighting weighting = ClassWeighting::Boltzmann;

    double resolved_width(double gamma_MHz) const {
        if (!enabled) return 0.0;
        if (width >= 0.0) return width;
        return doppler_width_from_temperature(temperature_K, constants::rb87_d1_lambda_nm,
                                              constants::rb87_mass_amu, gamma_MHz);
    }
};

struct ScanSpec {
    ScanKind kind = ScanKind::Point;
    SchemeSpec scheme;
    DriveConfig drive;
    double delta = 0.2;        // noise frequency for single-frequency scans
    GridSpec detuning_grid;    // Detuning scans
    GridSpec delta_grid;       // NoiseFreq scans (and oracle-check)
    GridSpec omega_grid;       // TwoD scans
    GridSpec C_grid;
    DopplerSpec doppler;
    LossChannel loss_mode = LossChannel::Recycle;
    int workers = 1;
    double oracle_tolerance = 1e-3;
    double gamma_MHz = constants::default_gamma_MHz;
    std::string out_csv;
    std::string out_json;
    json resolved;             // full resolved configuration (provenance)
};

LevelScheme load_custom_scheme(const std::string& path);   // defined in config.hpp

inline LevelScheme build_scheme(const SchemeSpec& spec) {
    if (spec.preset == "rb87-d1-Fg1") {
        Rb87Options o = spec.rb87;
        o.pump_angle_rad = spec.pump_angle_rad;
        return build_rb87_d1(1, o);
    }
    if (spec.preset == "rb87-d1-Fg2") {
        Rb87Options o = spec.rb87;
        o.pump_angle_rad = spec.pump_angle_rad;
        return build_rb87_d1(2, o);
    }
    if (spec.preset == "four-level-toy") return build_four_level_toy(spec.toy);
    if (spec.preset == "custom") {
        if (spec.custom_file.empty()) throw ConfigError("custom scheme requires a scheme file");
        return load_custom_scheme(spec.custom_file);
    }
    throw ConfigError("unknown scheme preset '" + spec.preset + "'");
}

namespace scan_detail {

/// Correlations for one scan coordinate, Doppler-dispatched.
inline SidebandCorrelation evaluate(const LevelScheme& s, const DriveConfig& d,
                                    const VectorXd& delta_grid, const VelocityEnsemble& ve,
                                    const DissipatorCache& cache) {
    if (ve.n_classes() == 1 && ve.shift(0) == 0.0) {
        const auto ds = build_generator(s, d, s.default_geometry, &cache);
        const auto rho = steady_state(ds);
        const auto D = diffusion_matrix(ds, rho);
        const auto cc = build_collective(s, s.default_geometry, rho, d.C);
        return sideband_correlations(ds, D, cc, delta_grid);
    }
    return doppler_spectrum(s, s.default_geometry, d, ve, delta_grid, &cache);
}

inline void fill_result(ResultRow& row, const SidebandCorrelation& sc, int k) {
    const auto qs = quadrature_spectrum(sc);
    row.delta = sc.delta(k);
    row.CN = sc.CN(k);
    row.CA_abs = std::abs(sc.CA(k));
    row.CA_arg = std::arg(sc.CA(k));
    row.S_min_dB = to_dB(qs.S_min(k));
    row.S_max_dB = to_dB(qs.S_max(k));
    row.theta_min = qs.theta_min(k);
    row.status = "ok";
}

/// Static sharding over row indices; results land in index-ordered slots.
inline void parallel_rows(int n_rows, int workers, const std::function<void(int)>& work) {
    workers = std::max(1, workers);
    if (workers == 1 || n_rows <= 1) {
        for (int i = 0; i < n_rows; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_rows; i = next.fetch_add(1)) work(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace scan_detail

/// Evaluates the spec's grid; deterministic output independent of the worker
/// count; per-row errors are recorded and do not abort the scan.
inline ResultTable run_scan(const ScanSpec& spec) {
    spec.drive.validate();
    const LevelScheme scheme = build_scheme(spec.scheme);
    const DissipatorCache cache = build_dissipator(scheme, spec.drive.gamma0, spec.loss_mode);
    const double width = spec.doppler.resolved_width(spec.gamma_MHz);
    const VelocityEnsemble ve = spec.doppler.enabled
                                    ? velocity_grid(width, spec.doppler.classes,
                                                    spec.doppler.weighting)
                                    : velocity_grid(0.0, 1);

    ResultTable table;
    table.metadata["engine"] = std::string("psrnoise ") + version;
    table.metadata["scheme"] = scheme.name;
    table.metadata["reference_transition"] = scheme.reference_name;
    table.metadata["absolute_offset_Gamma"] = scheme.absolute_offset;
    table.metadata["doppler_width_Gamma"] = width;
    table.metadata["config"] = spec.resolved;
    {
        const auto now = std::chrono::system_clock::now();
        table.metadata["timestamp_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    }

    auto base_row = [&](const DriveConfig& d) {
        ResultRow r;
        r.detuning = d.Delta;
        r.Omega_f = d.Omega_f;
        r.C = d.C;
        r.gamma0 = d.gamma0;
        r.doppler = spec.doppler.enabled;
        r.delta = spec.delta;
        return r;
    };
    auto mark_failed = [](ResultRow& r, const std::exception& e) {
        r.status = std::string("error: ") + e.what();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.S_min_dB = r.S_max_dB = r.theta_min = r.CN = r.CA_abs = r.CA_arg = nan;
    };

    switch (spec.kind) {
        case ScanKind::Point: {
            ResultRow r = base_row(spec.drive);
            try {
                const auto sc = scan_detail::evaluate(scheme, spec.drive,
                                                      VectorXd::Constant(1, spec.delta), ve, cache);
                scan_detail::fill_result(r, sc, 0);
            } catch (const std::exception& e) {
                mark_failed(r, e);
            }
            table.rows.push_back(std::move(r));
            break;
        }
        case ScanKind::Detuning: {
            const VectorXd grid = spec.detuning_grid.values();
            table.rows.resize(grid.size());
            scan_detail::parallel_rows(static_cast<int>(grid.size()), spec.workers, [&](int i) {
                DriveConfig d = spec.drive;
                d.Delta = grid(i);
                ResultRow r = base_row(d);
                try {
                    const auto sc = scan_detail::evaluate(scheme, d,
                                                          VectorXd::Constant(1, spec.delta), ve,
                                                          cache);
                    scan_detail::fill_result(r, sc, 0);
                } catch (const std::exception& e) {
                    mark_failed(r, e);
                }
                table.rows[i] = std::move(r);
            });
            break;
        }
        case ScanKind::NoiseFreq: {
            const VectorXd grid = spec.delta_grid.values();
            table.rows.resize(grid.size());
            try {
                const auto sc = scan_detail::evaluate(scheme, spec.drive, grid, ve, cache);
                for (int k = 0; k < grid.size(); ++k) {
                    ResultRow r = base_row(spec.drive);
                    scan_detail::fill_result(r, sc, k);
                    table.rows[k] = std::move(r);
                }
            } catch (const std::exception& e) {
                for (int k = 0; k < grid.size(); ++k) {
                    ResultRow r = base_row(spec.drive);
                    r.delta = grid(k);
                    mark_failed(r, e);
                    table.rows[k] = std::move(r);
                }
            }
            break;
        }
        case ScanKind::TwoD: {
            const VectorXd og = spec.omega_grid.values();
            const VectorXd cg = spec.C_grid.values();
            const int nrows = static_cast<int>(og.size() * cg.size());
            table.rows.resize(nrows);
            scan_detail::parallel_rows(nrows, spec.workers, [&](int i) {
                const int io = i / static_cast<int>(cg.size());
                const int ic = i % static_cast<int>(cg.size());
                DriveConfig d = spec.drive;
                d.Omega_f = og(io);
                d.C = cg(ic);
                ResultRow r = base_row(d);
                try {
                    const auto sc = scan_detail::evaluate(scheme, d,
                                                          VectorXd::Constant(1, spec.delta), ve,
                                                          cache);
                    scan_detail::fill_result(r, sc, 0);
                } catch (const std::exception& e) {
                    mark_failed(r, e);
                }
                table.rows[i] = std::move(r);
            });
            break;
        }
        case ScanKind::OracleCheck:
            throw ConfigError("oracle-check is not a table scan; use run_oracle_check");
    }
    return table;
}

struct OracleCheckResult {
    DeviationReport report;
    RegressionResult regression;
    SidebandCorrelation engine;
};

inline OracleCheckResult run_oracle_check(const ScanSpec& spec) {
    spec.drive.validate();
    const LevelScheme scheme = build_scheme(spec.scheme);
    const VectorXd grid = spec.delta_grid.values();
    const auto ds = build_generator(scheme, spec.drive, scheme.default_geometry);
    const auto rho = steady_state(ds);
    const auto D = diffusion_matrix(ds, rho);
    const auto cc = build_collective(scheme, scheme.default_geometry, rho, spec.drive.C);
    OracleCheckResult res{{}, regression_spectrum(ds, rho, cc, grid),
                          sideband_correlations(ds, D, cc, grid)};
    res.report = compare_report(res.regression, res.engine, spec.oracle_tolerance);
    return res;
}

/// Concatenates two per-manifold detuning scans onto the shared absolute
/// frequency axis, split at the midpoint of the gap between them.
inline ResultTable stitch_manifolds(const ResultTable& a, const ResultTable& b) {
    auto offset_of = [](const ResultTable& t) -> double {
        if (!t.metadata.contains("absolute_offset_Gamma"))
            throw std::invalid_argument("stitch: input table lacks absolute-axis metadata");
        return t.metadata["absolute_offset_Gamma"].get<double>();
    };
    const double offa = offset_of(a), offb = offset_of(b);

    auto absolute_rows = [](const ResultTable& t, double off) {
        std::vector<ResultRow> rows = t.rows;
        for (auto& r : rows) r.detuning += off;
        return rows;
    };
    std::vector<ResultRow> ra = absolute_rows(a, offa), rb = absolute_rows(b, offb);
    if (ra.empty() || rb.empty()) throw std::invalid_argument("stitch: empty input table");

    auto range = [](const std::vector<ResultRow>& rows) {
        double lo = rows.front().detuning, hi = lo;
        for (const auto& r : rows) {
            lo = std::min(lo, r.detuning);
            hi = std::max(hi, r.detuning);
        }
        return std::pair<double, double>(lo, hi);
    };
    auto [lo_a, hi_a] = range(ra);
    auto [lo_b, hi_b] = range(rb);
    const ResultTable* lower = &a;
    const ResultTable* upper = &b;
    if (lo_a > lo_b) {
        std::swap(ra, rb);
        std::swap(lo_a, lo_b);
        std::swap(hi_a, hi_b);
        std::swap(lower, upper);
    }
    if (hi_a >= lo_b)
        throw std::invalid_argument("stitch: detuning ranges overlap on the absolute axis");

    ResultTable out;
    out.rows = std::move(ra);
    out.rows.insert(out.rows.end(), rb.begin(), rb.end());
    out.metadata["engine"] = std::string("psrnoise ") + version;
    out.metadata["stitch"] = {
        {"boundary_Gamma", 0.5 * (hi_a + lo_b)},
        {"lower", {{"scheme", lower->metadata.value("scheme", "?")}, {"rows", lower->rows.size()}}},
        {"upper", {{"scheme", upper->metadata.value("scheme", "?")}, {"rows", upper->rows.size()}}},
        {"axis", "absolute detuning, zero at the F=2 -> F'=2 transition"},
    };
    out.metadata["sources"] = json::array({a.metadata, b.metadata});
    return out;
}

}  // namespace psr
