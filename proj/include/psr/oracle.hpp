#pragma once

// Independent time-domain cross-validation of the frequency-domain engine.
//
// The same linearized network (drift M, field couplings, output projection)
// is solved by quantum-regression methods instead of resolvents: equal-time
// covariances come from operator contractions at rho_ss plus RK4 integration
// of the Lyapunov ODE, two-time kernels from row propagation of exp(M tau),
// and spectra from streaming trapezoid Fourier sums. The Einstein-relation
// code path is not used anywhere here: the atomic diffusion enters through
// the stationarity identity 2D = -(M_at Sigma_at + Sigma_at M_at^T), which
// is what short-time two-time correlations encode.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psr/noisespec.hpp"

namespace psr {

struct OracleOptions {
    double horizon = 0.0;        // correlation horizon (units 1/Gamma); 0 = auto
    double dt_fast = 0.0;        // step while fast modes are alive; 0 = auto
    double dt_slow = 0.0;        // step afterwards; 0 = auto
    double t_switch = 40.0;      // end of the fast phase
    double decay_floor = 1e-6;   // required kernel decay at the horizon
    int max_levels = 8;
};

struct OracleDiagnostics {
    double horizon = 0.0;
    double dt_fast = 0.0;
    double dt_slow = 0.0;
    double kernel_decay = 0.0;      // kernel magnitude at the horizon / peak
    double lyapunov_residual = 0.0; // relative stationarity residual of Sigma
    double slowest_rate = 0.0;
    double fastest_scale = 0.0;
};

struct RegressionResult {
    VectorXd delta;
    VectorXd CN;
    VectorXcd CA;
    OracleDiagnostics diag;
};

namespace oracle_detail {

// one RK4 step of dX/dt = F(X)
template <typename Mat, typename Rhs>
void rk4_step(Mat& x, double h, const Rhs& rhs) {
    const Mat k1 = rhs(x);
    const Mat k2 = rhs(x + (0.5 * h) * k1);
    const Mat k3 = rhs(x + (0.5 * h) * k2);
    const Mat k4 = rhs(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace oracle_detail

/// Two-time correlation spectra of the output vacuum mode on a sideband
/// grid, assembled from time-domain quantum regression. Feasible for small
/// schemes (dense K^2 propagation, K = n^2).
inline RegressionResult regression_spectrum(const DriftSystem& ds, const MatrixXcd& rho_ss,
                                            const CollectiveCoupling& cc, const VectorXd& delta_grid,
                                            const OracleOptions& opt = {}) {
    const int n = ds.n, K = n * n;
    const PairIndex idx(n);
    if (n > opt.max_levels)
        throw std::invalid_argument("regression oracle: scheme too large for dense time evolution");
    const double C = cc.C;
    const int nd = static_cast<int>(delta_grid.size());

    RegressionResult out;
    out.delta = delta_grid;
    out.CN = VectorXd::Zero(nd);
    out.CA = VectorXcd::Zero(nd);
    if (C == 0.0) return out;

    // drift of the linearized network, with the trace-gauge mode deflated
    MatrixXcd M = ds.heisenberg_drift() + cc.Mcoll;
    VectorXcd vI = VectorXcd::Zero(K), tr = VectorXcd::Zero(K);
    for (int i = 0; i < n; ++i) {
        vI(idx.flat(i, i)) = 1.0;
        tr(idx.flat(i, i)) = 1.0;
    }
    M -= (1.0 / n) * (vI * tr.transpose());

    // step and horizon from the spectrum of M
    Eigen::ComplexEigenSolver<MatrixXcd> es(M, false);
    double fastest = 1.0, slowest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        const Complex ev = es.eigenvalues()(k);
        fastest = std::max(fastest, std::abs(ev));
        if (ev.real() < -1e-12) slowest = std::min(slowest, -ev.real());
    }
    if (!std::isfinite(slowest))
        throw std::runtime_error("regression oracle: drift has no decaying modes");

    OracleDiagnostics diag;
    diag.slowest_rate = slowest;
    diag.fastest_scale = fastest;
    diag.horizon = opt.horizon > 0.0 ? opt.horizon : std::log(1.0 / opt.decay_floor) / slowest;
    // the step also limits the Fourier phase advance per sample at the
    // highest analyzed sideband frequency
    const double delta_max = delta_grid.cwiseAbs().maxCoeff();
    const double phase_cap = delta_max > 0.0 ? 0.03 / delta_max : 1e300;
    diag.dt_fast = opt.dt_fast > 0.0 ? opt.dt_fast : std::min(0.08 / fastest, phase_cap);
    diag.dt_slow =
        opt.dt_slow > 0.0 ? opt.dt_slow : std::min({0.6 / fastest, 0.02, phase_cap});
    const double t_switch = std::min(opt.t_switch, diag.horizon);

    // atomic diffusion from the stationarity identity (single-atom drift and
    // kinematic covariance), plus the vacuum-input noise of the field channels
    const MatrixXcd Mat_single = ds.heisenberg_drift();
    MatrixXcd Sigma(K, K);
    for (int a = 0; a < K; ++a) {
        const Complex ma = rho_ss(idx.col(a), idx.row(a));
        for (int b = 0; b < K; ++b) {
            Complex v = -ma * rho_ss(idx.col(b), idx.row(b));
            if (idx.col(a) == idx.row(b)) v += rho_ss(idx.col(b), idx.row(a));
            Sigma(a, b) = v;
        }
    }
    MatrixXcd twoD = -(Mat_single * Sigma + Sigma * Mat_single.transpose());
    twoD -= 2.0 * C * (cc.q_pump * cc.p_pump.transpose() + cc.q_vac * cc.p_vac.transpose());

    // stationary covariance of the full network: integrate the Lyapunov ODE
    auto lyap_rhs = [&](const MatrixXcd& S) -> MatrixXcd {
        return M * S + S * M.transpose() + twoD;
    };
    double t = 0.0;
    while (t < diag.horizon) {
        const double h = (t < t_switch) ? diag.dt_fast : diag.dt_slow;
        const double hh = std::min(h, diag.horizon - t);
        oracle_detail::rk4_step(Sigma, hh, lyap_rhs);
        t += hh;
    }
    diag.lyapunov_residual = lyap_rhs(Sigma).norm() / std::max(1e-300, twoD.norm());
    if (!(diag.lyapunov_residual < 1e-5))
        throw std::runtime_error(
            "regression oracle: correlations have not reached stationarity at the horizon "
            "(residual " + std::to_string(diag.lyapunov_residual) + ")");

    // two-time kernels: rows w^T exp(M tau) and u^T exp(M tau) with u = P conj(w)
    const VectorXcd w = cc.w;
    const VectorXcd u = swap_indices(w.conjugate(), idx);
    const VectorXcd Sw = Sigma * w;
    const VectorXcd StU = Sigma.transpose() * u;
    const VectorXcd StW = Sigma.transpose() * w;

    const MatrixXcd Mt = M.transpose();
    auto row_rhs = [&](const VectorXcd& z) -> VectorXcd { return Mt * z; };

    VectorXcd zw = w, zu = u;
    // streaming trapezoid accumulators: Fm[k](d) = int exp(-i d tau) k, Fp with +
    struct Acc {
        Complex f_N, g_N, f_A, g_A, h_p;
    };
    std::vector<Acc> Fm(nd), Fp(nd);
    for (auto* acc : {&Fm, &Fp})
        for (auto& a : *acc) a = {0, 0, 0, 0, 0};

    double max_kernel = 0.0, last_kernel = 0.0;
    auto sample = [&](double tau, double weight) {
        const Acc k{(zu.array() * Sw.array()).sum(), (zw.array() * StU.array()).sum(),
                    (zw.array() * Sw.array()).sum(), (zw.array() * StW.array()).sum(),
                    (zw.array() * cc.p_vac.array()).sum()};
        const double mag = std::abs(k.f_N) + std::abs(k.g_N) + std::abs(k.f_A) +
                           std::abs(k.g_A) + std::abs(k.h_p);
        max_kernel = std::max(max_kernel, mag);
        last_kernel = mag;
        for (int d = 0; d < nd; ++d) {
            const Complex em = std::polar(weight, -delta_grid(d) * tau);
            const Complex ep = std::conj(em);
            Fm[d].f_N += em * k.f_N;
            Fm[d].g_N += em * k.g_N;
            Fm[d].f_A += em * k.f_A;
            Fm[d].g_A += em * k.g_A;
            Fm[d].h_p += em * k.h_p;
            Fp[d].f_N += ep * k.f_N;
            Fp[d].g_N += ep * k.g_N;
            Fp[d].f_A += ep * k.f_A;
            Fp[d].g_A += ep * k.g_A;
            Fp[d].h_p += ep * k.h_p;
        }
    };

    // composite trapezoid over the two-phase grid: each node carries half of
    // the step behind plus half of the step ahead
    t = 0.0;
    double w_prev_half = 0.0;
    while (true) {
        const double h = (t < t_switch) ? diag.dt_fast : diag.dt_slow;
        const double hh = std::min(h, diag.horizon - t);
        const bool last = hh <= 1e-15;
        const double weight = last ? w_prev_half : w_prev_half + 0.5 * hh;
        sample(t, weight);
        if (last) break;
        oracle_detail::rk4_step(zw, hh, row_rhs);
        oracle_detail::rk4_step(zu, hh, row_rhs);
        t += hh;
        w_prev_half = 0.5 * hh;
    }

    diag.kernel_decay = last_kernel / std::max(1e-300, max_kernel);
    if (!(diag.kernel_decay < 10.0 * opt.decay_floor))
        throw std::runtime_error(
            "regression oracle: correlations have not decayed at the horizon (" +
            std::to_string(diag.kernel_decay) + " of peak); undamped mode or horizon too short");

    for (int d = 0; d < nd; ++d) {
        const Complex Np = 2.0 * C * (Fm[d].f_N + Fp[d].g_N);
        const Complex Nm = 2.0 * C * (Fp[d].f_N + Fm[d].g_N);
        const Complex Ap = -2.0 * C * (Fm[d].f_A + Fp[d].g_A + Fp[d].h_p);
        const Complex Am = -2.0 * C * (Fp[d].f_A + Fm[d].g_A + Fm[d].h_p);
        out.CN(d) = 0.5 * (Np + Nm).real();
        out.CA(d) = 0.5 * (Ap + Am);
    }
    out.diag = diag;
    return out;
}

struct DeviationRow {
    double delta;
    double rel_CN;
    double rel_CA;
    double arg_CA_diff;
};

struct DeviationReport {
    std::vector<DeviationRow> rows;
    double max_rel = 0.0;
    double rms_rel = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<double> offending;   // delta values exceeding the tolerance

    std::string summary() const {
        std::ostringstream os;
        os << (pass ? "PASS" : "FAIL") << ": max relative deviation " << max_rel << " (rms "
           << rms_rel << ") against tolerance " << tolerance;
        if (!offending.empty()) {
            os << "; offending delta:";
            for (double d : offending) os << " " << d;
        }
        return os.str();
    }
};

/// Per-frequency relative deviations between the regression oracle and the
/// frequency-domain engine.
inline DeviationReport compare_report(const RegressionResult& reg, const SidebandCorrelation& sc,
                                      double tolerance, double abs_floor = 1e-9) {
    if (reg.delta.size() != sc.delta.size() ||
        (reg.delta - sc.delta).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("compare_report: sideband grids do not match");

    DeviationReport rep;
    rep.tolerance = tolerance;
    double sq_sum = 0.0;
    for (int k = 0; k < reg.delta.size(); ++k) {
        DeviationRow row{};
        row.delta = reg.delta(k);
        const double scale_N =
            std::max({std::abs(reg.CN(k)), std::abs(sc.CN(k)), abs_floor});
        row.rel_CN = std::abs(reg.CN(k) - sc.CN(k)) / scale_N;
        const double scale_A = std::max({std::abs(reg.CA(k)), std::abs(sc.CA(k)), abs_floor});
        row.rel_CA = std::abs(reg.CA(k) - sc.CA(k)) / scale_A;
        double darg = std::arg(reg.CA(k)) - std::arg(sc.CA(k));
        while (darg > constants::pi) darg -= 2.0 * constants::pi;
        while (darg < -constants::pi) darg += 2.0 * constants::pi;
        row.arg_CA_diff = std::abs(darg);
        rep.rows.push_back(row);

        const double worst = std::max(row.rel_CN, row.rel_CA);
        rep.max_rel = std::max(rep.max_rel, worst);
        sq_sum += worst * worst;
        if (worst > tolerance) rep.offending.push_back(row.delta);
    }
    rep.rms_rel = std::sqrt(sq_sum / std::max<size_t>(1, rep.rows.size()));
    rep.pass = rep.max_rel <= tolerance;
    return rep;
}

}  // namespace psr
