#pragma once

// Linearized Heisenberg-Langevin noise engine.
//
// The medium is lumped: all atoms couple to the two forward field continua
// (pump- and vacuum-polarized modes) with a single effective strength set by
// the cooperativity C. Around the single-atom steady state the collective
// fluctuation vector x obeys
//
//   dx/dt = M x + F(t) + sum_m [ G_m a_in,m(t) + Gbar_m a_in,m^dag(t) ]
//   a_out,m = a_in,m + i sqrt(2 C Gamma) (w_m . x)
//
// with M = (atomic Heisenberg drift) + (collective forward-scattering
// damping), F the atomic Langevin forces whose diffusion D follows from the
// generalized Einstein relation, and vacuum inputs on both modes. The
// frequency-domain solve needs one transposed resolvent application per
// sideband frequency; detuning scans use an LU per point and noise-frequency
// scans reuse one complex Schur factorization across the grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psr/dynamics.hpp"

namespace psr {

struct DiffusionMatrix {
    MatrixXcd D;   // <F_a(t) F_b(t')> = 2 D_ab delta(t - t')
};

/// Generalized Einstein relation at the steady state:
/// 2 D_ab = <Ldag(s_a s_b)> - <Ldag(s_a) s_b> - <s_a Ldag(s_b)>.
inline DiffusionMatrix diffusion_matrix(const DriftSystem& ds, const MatrixXcd& rho_ss,
                                        double steady_tol = 1e-7) {
    const int n = ds.n, K = n * n;
    const PairIndex idx(n);

    const double steady_residual = (ds.L * vec_rm(rho_ss) + ds.b).norm();
    if (!(steady_residual < steady_tol * std::max(1.0, ds.L.norm())))
        throw std::invalid_argument(
            "diffusion_matrix: rho is not the steady state of the generator (residual " +
            std::to_string(steady_residual) + ")");

    const MatrixXcd M = ds.heisenberg_drift();

    // m1_e = <Ldag(s_e)>
    VectorXcd means(K);
    for (int a = 0; a < K; ++a) means(a) = rho_ss(idx.col(a), idx.row(a));
    const VectorXcd m1 = M * means;

    MatrixXcd D(K, K);
    for (int a = 0; a < K; ++a) {
        const int ia = idx.row(a), ja = idx.col(a);
        for (int b = 0; b < K; ++b) {
            const int ib = idx.row(b), jb = idx.col(b);
            Complex val = 0.0;
            if (ja == ib) val += m1(idx.flat(ia, jb));
            // <Ldag(s_a) s_b> : nonzero s_c s_b requires j_c = i_b
            for (int ic = 0; ic < n; ++ic) val -= M(a, idx.flat(ic, ib)) * rho_ss(jb, ic);
            // <s_a Ldag(s_b)> : nonzero s_a s_c requires i_c = j_a
            for (int jc = 0; jc < n; ++jc) val -= M(b, idx.flat(ja, jc)) * rho_ss(jc, ia);
            D(a, b) = 0.5 * val;
        }
    }
    return {std::move(D)};
}

/// Mode-resolved linearized coupling of the atoms to the forward continua.
struct CollectiveCoupling {
    double C = 0.0;
    VectorXcd w;                    // output projection: w_a = (X_v)_{i_a j_a}
    VectorXcd q_pump, p_pump;       // q_a = ([X^dag, rho])_{j_a i_a}, p_a = ([X, rho])_{j_a i_a}
    VectorXcd q_vac, p_vac;
    MatrixXcd Mcoll;                // collective forward-scattering damping
};

inline CollectiveCoupling build_collective(const LevelScheme& s, const PolarizationGeometry& geom,
                                           const MatrixXcd& rho_ss, double C) {
    const int n = s.n_levels(), K = n * n;
    const PairIndex idx(n);
    CollectiveCoupling cc;
    cc.C = C;

    const MatrixXcd Xp = mode_lowering(s, geom.pump);
    const MatrixXcd Xv = mode_lowering(s, geom.vacuum);

    auto comm_vec = [&](const MatrixXcd& X) {
        const MatrixXcd c = X * rho_ss - rho_ss * X;
        VectorXcd v(K);
        for (int a = 0; a < K; ++a) v(a) = c(idx.col(a), idx.row(a));
        return v;
    };
    auto elem_vec = [&](const MatrixXcd& X) {
        VectorXcd v(K);
        for (int a = 0; a < K; ++a) v(a) = X(idx.row(a), idx.col(a));
        return v;
    };

    cc.q_pump = comm_vec(Xp.adjoint());
    cc.p_pump = comm_vec(Xp);
    cc.q_vac = comm_vec(Xv.adjoint());
    cc.p_vac = comm_vec(Xv);
    cc.w = elem_vec(Xv);

    cc.Mcoll = MatrixXcd::Zero(K, K);
    if (C > 0.0) {
        const VectorXcd xp = elem_vec(Xp), xpd = elem_vec(Xp.adjoint());
        const VectorXcd xv = elem_vec(Xv), xvd = elem_vec(Xv.adjoint());
        cc.Mcoll -= C * (cc.q_pump * xp.transpose() - cc.p_pump * xpd.transpose());
        cc.Mcoll -= C * (cc.q_vac * xv.transpose() - cc.p_vac * xvd.transpose());
    }
    return cc;
}

struct SidebandCorrelation {
    VectorXd delta;          // noise frequencies, units of Gamma
    VectorXd CN;             // normal-ordered spectrum (vacuum = 0)
    VectorXcd CA;            // anomalous correlation
    VectorXd commutator;     // spectrum of [a_out, a_out^dag]; 1 when consistent
    VectorXd ca_asymmetry;   // |A(+d) - A(-d)| consistency diagnostic
};

namespace detail {

// bilinear contraction a^T b without complex conjugation
inline Complex bilinear(const VectorXcd& a, const VectorXcd& b) {
    return (a.array() * b.array()).sum();
}

/// Shifted transposed solves y(delta) = (-i delta I - M^T)^{-1} w.
/// One LU per shift, or one Schur factorization reused across a grid.
class ShiftedSolver {
  public:
    ShiftedSolver(const MatrixXcd& Mt, bool use_schur) : Mt_(Mt), schur_(use_schur) {
        if (schur_) {
            Eigen::ComplexSchur<MatrixXcd> dec(Mt_);
            if (dec.info() != Eigen::Success) throw std::runtime_error("Schur factorization failed");
            U_ = dec.matrixU();
            T_ = dec.matrixT();
        }
    }

    VectorXcd solve(Complex shift, const VectorXcd& rhs, double singular_tol) const {
        const int K = static_cast<int>(Mt_.rows());
        if (schur_) {
            MatrixXcd T = -T_;
            T.diagonal().array() += shift;
            const double scale = std::max(1.0, T_.norm());
            const double dmin = T.diagonal().cwiseAbs().minCoeff();
            if (dmin < singular_tol * scale)
                throw std::runtime_error(
                    "fluctuation solve is singular: an undamped mode sits at the requested "
                    "sideband frequency");
            VectorXcd y = U_.adjoint() * rhs;
            y = T.triangularView<Eigen::Upper>().solve(y);
            return U_ * y;
        }
        MatrixXcd A = -Mt_;
        A.diagonal().array() += shift;
        Eigen::PartialPivLU<MatrixXcd> lu(A);
        const VectorXcd y = lu.solve(rhs);
        const double rel = (A * y - rhs).norm() / std::max(1e-300, rhs.norm());
        if (!(rel < 1e-6) || !y.allFinite())
            throw std::runtime_error(
                "fluctuation solve is singular: an undamped mode sits at the requested "
                "sideband frequency");
        return y;
    }

  private:
    MatrixXcd Mt_;
    bool schur_;
    MatrixXcd U_, T_;
};

}  // namespace detail

/// Frequency-domain fluctuation solve and input-output assembly of the
/// normal-ordered and anomalous output correlations on a sideband grid.
inline SidebandCorrelation sideband_correlations(const DriftSystem& ds, const DiffusionMatrix& dm,
                                                 const CollectiveCoupling& cc,
                                                 const VectorXd& delta_grid) {
    const int n = ds.n, K = n * n;
    const PairIndex idx(n);
    const int nd = static_cast<int>(delta_grid.size());
    const double C = cc.C;

    SidebandCorrelation out;
    out.delta = delta_grid;
    out.CN = VectorXd::Zero(nd);
    out.CA = VectorXcd::Zero(nd);
    out.commutator = VectorXd::Ones(nd);
    out.ca_asymmetry = VectorXd::Zero(nd);
    if (C == 0.0) return out;   // empty medium: exact shot noise

    MatrixXcd M = ds.heisenberg_drift() + cc.Mcoll;

    // deflate the unphysical trace-gauge zero mode (right kernel vec(I),
    // left kernel trace-row); physics never excites it, and removing it
    // makes delta = 0 solvable
    {
        VectorXcd vI = VectorXcd::Zero(K), t = VectorXcd::Zero(K);
        for (int i = 0; i < n; ++i) {
            vI(idx.flat(i, i)) = 1.0;
            t(idx.flat(i, i)) = 1.0;
        }
        M -= (1.0 / n) * (vI * t.transpose());
    }

    detail::ShiftedSolver solver(M.transpose().eval(), nd >= 4);

    auto swap_conj = [&](const VectorXcd& y) { return swap_indices(y.conjugate(), idx); };

    struct Side {
        Complex Tv, Tbv, Tp, Tbp;
        VectorXcd y;
    };
    auto eval_side = [&](double deltaw) {
        Side sd;
        sd.y = solver.solve(Complex(0.0, -deltaw), cc.w, 1e-12);
        sd.Tv = 1.0 - 2.0 * C * detail::bilinear(sd.y, cc.q_vac);
        sd.Tbv = -2.0 * C * detail::bilinear(sd.y, cc.p_vac);
        sd.Tp = -2.0 * C * detail::bilinear(sd.y, cc.q_pump);
        sd.Tbp = -2.0 * C * detail::bilinear(sd.y, cc.p_pump);
        return sd;
    };

    for (int k = 0; k < nd; ++k) {
        const double d = delta_grid(k);
        const Side sp = eval_side(d);
        const Side sm = (d == 0.0) ? sp : eval_side(-d);

        auto Nfun = [&](const Side& sd) {
            const VectorXcd Py = swap_conj(sd.y);
            const Complex noise = 4.0 * C * detail::bilinear(Py, dm.D * sd.y);
            return std::norm(sd.Tbv) + std::norm(sd.Tbp) + noise.real();
        };
        auto Afun = [&](const Side& s1, const Side& s2) {
            const Complex noise = -4.0 * C * detail::bilinear(s1.y, dm.D * s2.y);
            return s1.Tv * s2.Tbv + s1.Tp * s2.Tbp + noise;
        };
        auto Kfun = [&](const Side& sd) {
            const VectorXcd Py = swap_conj(sd.y);
            const Complex t1 = detail::bilinear(sd.y, dm.D * Py);
            const Complex t2 = detail::bilinear(Py, dm.D * sd.y);
            return std::norm(sd.Tv) + std::norm(sd.Tp) - std::norm(sd.Tbv) - std::norm(sd.Tbp) +
                   4.0 * C * (t1 - t2).real();
        };

        out.CN(k) = 0.5 * (Nfun(sp) + Nfun(sm));
        const Complex Apm = Afun(sp, sm), Amp = Afun(sm, sp);
        out.CA(k) = 0.5 * (Apm + Amp);
        out.ca_asymmetry(k) = std::abs(Apm - Amp);
        out.commutator(k) = 0.5 * (Kfun(sp) + Kfun(sm));
    }
    return out;
}

struct QuadratureSpectrum {
    VectorXd delta;
    VectorXd S_min, S_max;    // linear units, vacuum = 1
    VectorXd theta_min;       // extremal phase, reported modulo pi in [0, pi)
};

inline double s_theta(double CN, Complex CA, double theta) {
    return 1.0 + 2.0 * CN + 2.0 * (CA * std::exp(Complex(0.0, -2.0 * theta))).real();
}

inline double to_dB(double linear) { return 10.0 * std::log10(linear); }

/// Analytic quadrature extrema: S_theta = 1 + 2 C_N + 2 Re[C_A exp(-2 i theta)],
/// so S_min/max = 1 + 2 C_N -/+ 2 |C_A| at phases a quarter period apart.
inline QuadratureSpectrum quadrature_spectrum(const SidebandCorrelation& sc) {
    const int nd = static_cast<int>(sc.delta.size());
    QuadratureSpectrum qs;
    qs.delta = sc.delta;
    qs.S_min.resize(nd);
    qs.S_max.resize(nd);
    qs.theta_min.resize(nd);
    for (int k = 0; k < nd; ++k) {
        const double cn = sc.CN(k);
        const double ca = std::abs(sc.CA(k));
        qs.S_min(k) = 1.0 + 2.0 * cn - 2.0 * ca;
        qs.S_max(k) = 1.0 + 2.0 * cn + 2.0 * ca;
        double th = 0.0;
        if (ca > 0.0) {
            th = 0.5 * std::arg(sc.CA(k)) - 0.5 * constants::pi;
            th = std::fmod(th, constants::pi);
            if (th < 0.0) th += constants::pi;
        }
        qs.theta_min(k) = th;
    }
    return qs;
}

}  // namespace psr
