#pragma once

// Rotating-frame Lindblad generator for a scheme under classical pump drive,
// its vectorized drift superoperators, and the steady-state solve.
//
// Schrodinger picture: d vec(rho)/dt = L vec(rho) + b, with the row-major
// pair index of basis.hpp. The Heisenberg (adjoint) drift acting on operator
// components, d<s_a>/dt = sum_b M_ab <s_b>, is M = (P L P)^T with P the
// index-swap permutation.

#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psr/basis.hpp"
#include "psr/scheme.hpp"

namespace psr {

enum class LossChannel { Recycle, Open };

struct DriveConfig {
    double Omega_f = 0.0;   // reduced fine-transition Rabi frequency, units of Gamma
    double Delta = 0.0;     // pump detuning from the scheme's reference transition
    double gamma0 = 0.01;   // ground-state decoherence / transit rate
    double C = 0.0;         // cooperativity

    void validate() const {
        if (Omega_f < 0.0) throw std::invalid_argument("Omega_f must be >= 0");
        if (!(gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be > 0");
        if (C < 0.0) throw std::invalid_argument("C must be >= 0");
    }
};

/// Drive-independent dissipative part of the generator. Caching it makes
/// detuning scans cheap: only the Hamiltonian commutator is rebuilt per point.
struct DissipatorCache {
    int n = 0;
    double gamma0 = 0.0;
    LossChannel loss_mode = LossChannel::Recycle;
    MatrixXcd L_diss;               // superoperator, n^2 x n^2
    std::vector<MatrixXcd> jumps;   // rates absorbed into the operators
};

inline DissipatorCache build_dissipator(const LevelScheme& s, double gamma0,
                                        LossChannel mode = LossChannel::Recycle) {
    const int n = s.n_levels(), ng = s.n_ground, ne = s.n_excited();
    DissipatorCache cache;
    cache.n = n;
    cache.gamma0 = gamma0;
    cache.loss_mode = mode;

    // excited decay into the modeled manifold: one vector jump per polarization
    for (int q = -1; q <= 1; ++q) {
        MatrixXcd A = MatrixXcd::Zero(n, n);
        for (int e = 0; e < ne; ++e)
            for (int g = 0; g < ng; ++g)
                A(g, ng + e) = s.coupling.q(q)(e, g);
        if (A.norm() > 0.0) cache.jumps.push_back(A);   // rate Gamma = 1 absorbed
    }
    // loss channel: uniform incoherent re-injection into the modeled ground
    // sublevels (Recycle), or true loss handled below (Open)
    if (mode == LossChannel::Recycle) {
        for (int e = 0; e < ne; ++e) {
            if (s.loss(e) <= 1e-14) continue;
            const double amp = std::sqrt(s.loss(e) / ng);
            for (int g = 0; g < ng; ++g) {
                MatrixXcd A = MatrixXcd::Zero(n, n);
                A(g, ng + e) = amp;
                cache.jumps.push_back(A);
            }
        }
    }
    // transit relaxation: uniformize the ground block at rate gamma0
    if (gamma0 > 0.0) {
        const double amp = std::sqrt(gamma0 / ng);
        for (int g = 0; g < ng; ++g)
            for (int gp = 0; gp < ng; ++gp) {
                MatrixXcd A = MatrixXcd::Zero(n, n);
                A(g, gp) = amp;
                cache.jumps.push_back(A);
            }
    }

    const MatrixXcd id = MatrixXcd::Identity(n, n);
    MatrixXcd L = MatrixXcd::Zero(n * n, n * n);
    for (const auto& A : cache.jumps) {
        const MatrixXcd AdA = A.adjoint() * A;
        L += kron(A, A.conjugate());
        L -= 0.5 * kron(AdA, id);
        L -= 0.5 * kron(id, AdA.transpose());
    }
    if (mode == LossChannel::Open) {
        // decay out of the simulation space: anticommutator only, no sandwich
        MatrixXcd lossdiag = MatrixXcd::Zero(n, n);
        for (int e = 0; e < ne; ++e) lossdiag(ng + e, ng + e) = s.loss(e);
        L -= 0.5 * kron(lossdiag, id);
        L -= 0.5 * kron(id, lossdiag.transpose());
    }
    cache.L_diss = L;
    return cache;
}

struct DriftSystem {
    int n = 0;
    int n_ground = 0;
    MatrixXcd H;          // rotating-frame Hamiltonian
    MatrixXcd L;          // Schrodinger drift on vec(rho)
    VectorXcd b;          // inhomogeneous term (uniform ground influx, Open mode)
    LossChannel loss_mode = LossChannel::Recycle;
    double gamma0 = 0.0;
    double Omega_f = 0.0;
    double Delta = 0.0;

    PairIndex index() const { return PairIndex(n); }

    /// Heisenberg-picture drift M with d<s_a>/dt = sum_b M_ab <s_b>;
    /// M = P L P with P the index-swap permutation, since <s_a> = rho_{j_a i_a}.
    MatrixXcd heisenberg_drift() const {
        const PairIndex idx(n);
        const int K = n * n;
        MatrixXcd M(K, K);
        for (int a = 0; a < K; ++a)
            for (int c = 0; c < K; ++c) M(a, c) = L(idx.swapped(a), idx.swapped(c));
        return M;
    }

    /// Adjoint generator applied to an operator given in the coherence basis:
    /// vec(Ldag(O)) = P L^T P vec(O), i.e. Tr[(L rho) O] = Tr[rho Ldag(O)].
    VectorXcd apply_adjoint(const VectorXcd& op) const {
        const PairIndex idx(n);
        const int K = n * n;
        VectorXcd out = VectorXcd::Zero(K);
        for (int a = 0; a < K; ++a) {
            Complex acc = 0.0;
            for (int c = 0; c < K; ++c) acc += L(idx.swapped(c), idx.swapped(a)) * op(c);
            out(a) = acc;
        }
        return out;
    }
};

/// Per-transition Rabi coupling of a field mode with polarization amplitudes
/// u_q: W[e][g] = sum_q u_q d_q[e][g].
inline MatrixXcd mode_coupling(const LevelScheme& s, const Eigen::Vector3cd& u) {
    const int ne = s.n_excited(), ng = s.n_ground;
    MatrixXcd W = MatrixXcd::Zero(ne, ng);
    for (int q = -1; q <= 1; ++q)
        if (std::abs(u(q + 1)) > 0.0) W += u(q + 1) * s.coupling.q(q).cast<Complex>();
    return W;
}

/// Lowering operator X_m = sum_q conj(u_q) D_q associated with a field mode.
inline MatrixXcd mode_lowering(const LevelScheme& s, const Eigen::Vector3cd& u) {
    const int n = s.n_levels(), ng = s.n_ground;
    const MatrixXcd W = mode_coupling(s, u);
    MatrixXcd X = MatrixXcd::Zero(n, n);
    for (int e = 0; e < s.n_excited(); ++e)
        for (int g = 0; g < ng; ++g) X(g, ng + e) = std::conj(W(e, g));
    return X;
}

/// Rotating frame at the pump frequency; the pump enters as classical Rabi
/// couplings Omega_f * d_q * u_q on its polarization components.
inline DriftSystem build_generator(const LevelScheme& s, const DriveConfig& drive,
                                   const PolarizationGeometry& geom,
                                   const DissipatorCache* cache = nullptr) {
    const int n = s.n_levels(), ng = s.n_ground, ne = s.n_excited();

    DissipatorCache local;
    if (cache == nullptr) {
        local = build_dissipator(s, drive.gamma0);
        cache = &local;
    }
    if (cache->n != n || cache->gamma0 != drive.gamma0)
        throw std::invalid_argument("dissipator cache does not match scheme/drive");

    DriftSystem ds;
    ds.n = n;
    ds.n_ground = ng;
    ds.loss_mode = cache->loss_mode;
    ds.gamma0 = drive.gamma0;
    ds.Omega_f = drive.Omega_f;
    ds.Delta = drive.Delta;

    MatrixXcd H = MatrixXcd::Zero(n, n);
    const double ref = s.reference_energy();
    for (int g = 0; g < ng; ++g) H(g, g) = s.ground(g).energy;
    for (int e = 0; e < ne; ++e)
        H(ng + e, ng + e) = s.excited(e).energy - ref - drive.Delta;

    const MatrixXcd Wp = mode_coupling(s, geom.pump);
    if (Wp.rows() != ne || Wp.cols() != ng)
        throw std::invalid_argument("coupling tensor dimensions do not match the geometry");
    for (int e = 0; e < ne; ++e)
        for (int g = 0; g < ng; ++g) {
            const Complex r = -0.5 * drive.Omega_f * Wp(e, g);
            H(ng + e, g) += r;
            H(g, ng + e) += std::conj(r);
        }
    ds.H = H;

    const MatrixXcd id = MatrixXcd::Identity(n, n);
    const Complex i01(0.0, 1.0);
    ds.L = cache->L_diss - i01 * (kron(H, id) - kron(id, H.transpose()));

    ds.b = VectorXcd::Zero(n * n);
    if (cache->loss_mode == LossChannel::Open) {
        // noiseless fresh-atom influx, uniform over the modeled ground
        // sublevels; its magnitude is fixed by unit trace in steady_state
        for (int g = 0; g < ng; ++g) ds.b(g * n + g) = 1.0 / ng;
    }
    return ds;
}

struct SteadyStateOptions {
    double residual_tol = 1e-9;
    double positivity_tol = 1e-8;
};

/// Solves L rho + b = 0 on the trace-one affine subspace. Requires gamma0 > 0
/// so the kernel of L is one-dimensional (trace gauge only).
inline MatrixXcd steady_state(const DriftSystem& ds, const SteadyStateOptions& opt = {}) {
    if (!(ds.gamma0 > 0.0))
        throw std::invalid_argument("steady state requires gamma0 > 0 (degenerate otherwise)");
    const int n = ds.n, K = n * n;

    VectorXcd r(K);
    if (ds.loss_mode == LossChannel::Open && ds.b.norm() > 0.0) {
        // influx magnitude is free: solve L r = -b, then normalize the trace
        Eigen::PartialPivLU<MatrixXcd> lu(ds.L);
        r = lu.solve(-ds.b);
        const double residual = (ds.L * r + ds.b).norm();
        if (!(residual < opt.residual_tol * std::max(1.0, ds.L.norm())))
            throw std::runtime_error("steady-state solve (open loss) is singular");
        Complex tr = 0.0;
        for (int i = 0; i < n; ++i) tr += r(i * n + i);
        if (std::abs(tr) < 1e-14) throw std::runtime_error("steady state has vanishing trace");
        r /= tr;
    } else {
        // stack the trace constraint under the drift and solve least squares
        MatrixXcd A(K + 1, K);
        A.topRows(K) = ds.L;
        A.row(K).setZero();
        for (int i = 0; i < n; ++i) A(K, i * n + i) = 1.0;
        VectorXcd rhs = VectorXcd::Zero(K + 1);
        rhs(K) = 1.0;

        Eigen::ColPivHouseholderQR<MatrixXcd> qr(A);
        r = qr.solve(rhs);

        const double residual = (A * r - rhs).norm();
        if (!(residual < opt.residual_tol * std::max(1.0, ds.L.norm()))) {
            std::ostringstream err;
            err << "steady-state solve is singular beyond the trace gauge: residual " << residual
                << ", rank " << qr.rank() << "/" << K;
            throw std::runtime_error(err.str());
        }
    }

    MatrixXcd rho = unvec_rm(r, n);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    rho /= tr;

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -opt.positivity_tol) {
        std::ostringstream err;
        err << "steady state is not positive semidefinite (min eigenvalue " << min_eig << ")";
        throw std::runtime_error(err.str());
    }
    return rho;
}

/// Eigenvalues of the Schrodinger drift (diagnostics: stability, zero modes).
inline VectorXcd drift_spectrum(const DriftSystem& ds) {
    Eigen::ComplexEigenSolver<MatrixXcd> es(ds.L, false);
    return es.eigenvalues();
}

}  // namespace psr
