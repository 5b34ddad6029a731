#pragma once

// Doppler averaging over the 1-D Maxwell-Boltzmann distribution of k.v
// shifts. Each velocity class is an independent medium at laser detuning
// Delta - k.v carrying its share of the total cooperativity; correlations
// are combined class by class, and only then are quadrature extrema formed.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psr/constants.hpp"
#include "psr/noisespec.hpp"

namespace psr {

enum class ClassWeighting { Boltzmann, Uniform };

struct VelocityEnsemble {
    VectorXd shift;     // k.v detuning shifts, units of Gamma
    VectorXd weight;    // Gaussian weights, sum to 1
    double width = 0.0; // standard deviation of k.v in units of Gamma
    ClassWeighting weighting = ClassWeighting::Boltzmann;

    int n_classes() const { return static_cast<int>(shift.size()); }
};

/// Standard deviation of k.v in units of Gamma for a vapor at temperature T.
inline double doppler_width_from_temperature(double T_kelvin,
                                             double lambda_nm = constants::rb87_d1_lambda_nm,
                                             double mass_amu = constants::rb87_mass_amu,
                                             double gamma_MHz = constants::default_gamma_MHz) {
    if (T_kelvin <= 0.0) throw std::invalid_argument("temperature must be positive");
    const double sigma_v =
        std::sqrt(constants::k_boltzmann * T_kelvin / (mass_amu * constants::atomic_mass_unit));
    return sigma_v / (lambda_nm * 1e-9 * gamma_MHz * 1e6);
}

namespace ensemble_detail {

// Gauss-Hermite nodes/weights by Golub-Welsch on the Jacobi matrix
inline void gauss_hermite(int n, VectorXd& nodes, VectorXd& weights) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * k);
        J(k - 1, k) = b;
        J(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        const double v0 = es.eigenvectors()(0, k);
        weights(k) = v0 * v0;   // normalized: sum = 1
    }
}

// inverse of the standard normal CDF (Acklam's rational approximation
// polished by one Newton step on erf)
inline double norm_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    x -= e * std::sqrt(2.0 * constants::pi) * std::exp(0.5 * x * x);
    return x;
}

}  // namespace ensemble_detail

/// Quadrature sampling of the Gaussian k.v distribution. Boltzmann weighting
/// uses Gauss-Hermite nodes and weights; Uniform uses equal-mass classes at
/// Gaussian quantile shifts.
inline VelocityEnsemble velocity_grid(double width, int n_classes,
                                      ClassWeighting weighting = ClassWeighting::Boltzmann) {
    if (n_classes < 1) throw std::invalid_argument("n_classes must be >= 1");
    if (width < 0.0) throw std::invalid_argument("Doppler width must be >= 0");

    VelocityEnsemble ve;
    ve.width = width;
    ve.weighting = weighting;
    if (width == 0.0 || n_classes == 1) {
        ve.shift = VectorXd::Zero(1);
        ve.weight = VectorXd::Ones(1);
        return ve;
    }
    if (weighting == ClassWeighting::Boltzmann) {
        VectorXd t, w;
        ensemble_detail::gauss_hermite(n_classes, t, w);
        ve.shift = std::sqrt(2.0) * width * t;
        ve.weight = w;
    } else {
        ve.shift.resize(n_classes);
        ve.weight = VectorXd::Constant(n_classes, 1.0 / n_classes);
        for (int k = 0; k < n_classes; ++k)
            ve.shift(k) = width * ensemble_detail::norm_quantile((k + 0.5) / n_classes);
    }
    return ve;
}

/// Correlation-level Doppler combination. Class i must have been computed at
/// laser detuning Delta - shift_i with cooperativity share weight_i * C_total,
/// so the combination is a plain sum; extrema are computed afterwards, never
/// averaged directly.
inline SidebandCorrelation doppler_average(const std::vector<SidebandCorrelation>& classes,
                                           const VelocityEnsemble& ve) {
    if (classes.empty()) throw std::invalid_argument("doppler_average: no classes");
    if (static_cast<int>(classes.size()) != ve.n_classes())
        throw std::invalid_argument("doppler_average: class count does not match the ensemble");

    const VectorXd& grid = classes.front().delta;
    SidebandCorrelation avg;
    avg.delta = grid;
    avg.CN = VectorXd::Zero(grid.size());
    avg.CA = VectorXcd::Zero(grid.size());
    avg.commutator = VectorXd::Ones(grid.size());
    avg.ca_asymmetry = VectorXd::Zero(grid.size());
    for (const auto& cls : classes) {
        if (cls.delta.size() != grid.size() || (cls.delta - grid).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("doppler_average: sideband grids do not match");
        avg.CN += cls.CN;
        avg.CA += cls.CA;
        avg.commutator += cls.commutator - VectorXd::Ones(grid.size());
        avg.ca_asymmetry = avg.ca_asymmetry.cwiseMax(cls.ca_asymmetry);
    }
    return avg;
}

/// Convenience driver: runs every velocity class through the stationary
/// pipeline and combines the correlations.
inline SidebandCorrelation doppler_spectrum(const LevelScheme& s, const PolarizationGeometry& geom,
                                            const DriveConfig& drive, const VelocityEnsemble& ve,
                                            const VectorXd& delta_grid,
                                            const DissipatorCache* cache = nullptr) {
    std::vector<SidebandCorrelation> classes;
    classes.reserve(ve.n_classes());
    for (int i = 0; i < ve.n_classes(); ++i) {
        DriveConfig d = drive;
        d.Delta = drive.Delta - ve.shift(i);
        d.C = ve.weight(i) * drive.C;
        const auto ds = build_generator(s, d, geom, cache);
        const auto rho = steady_state(ds);
        const auto D = diffusion_matrix(ds, rho);
        const auto cc = build_collective(s, geom, rho, d.C);
        classes.push_back(sideband_correlations(ds, D, cc, delta_grid));
    }
    return doppler_average(classes, ve);
}

}  // namespace psr
