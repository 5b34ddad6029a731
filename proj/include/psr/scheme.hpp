#pragma once

// Atomic level schemes: hyperfine/Zeeman level lists, dipole coupling
// tensors per spherical polarization, and the pump/vacuum polarization
// geometry. All energies are in units of the excited-state decay rate Gamma.

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "psr/angular.hpp"
#include "psr/basis.hpp"
#include "psr/constants.hpp"

namespace psr {

struct Level {
    std::string manifold;  // manifold id, e.g. "F=1" or "F'=2"
    int F2;                // 2F
    int m2;                // 2m_F
    double energy;         // offset in units of Gamma
};

/// Dimensionless dipole weights d_q[excited][ground] for q = -1, 0, +1
/// (index q+1), relative to the reduced fine-structure matrix element.
struct CouplingTensor {
    std::array<MatrixXd, 3> d;

    const MatrixXd& q(int qq) const { return d[qq + 1]; }
    MatrixXd& q(int qq) { return d[qq + 1]; }
};

/// Decomposition amplitudes u_q of the pump and vacuum field modes onto the
/// spherical components q = -1, 0, +1 (index q+1). Orthonormal.
struct PolarizationGeometry {
    Eigen::Vector3cd pump;
    Eigen::Vector3cd vacuum;
};

struct LevelScheme {
    std::string name;
    std::vector<Level> levels;       // ground levels first, then excited
    int n_ground = 0;
    CouplingTensor coupling;         // (n_excited x n_ground) per q
    VectorXd loss;                   // per-excited branching into the unmodeled manifold
    double gamma_MHz = constants::default_gamma_MHz;

    // reference transition for the pump detuning, and its position on the
    // absolute frequency axis shared by all presets (used when stitching)
    int reference_ground = 0;        // index into levels
    int reference_excited = 0;       // index into levels (absolute)
    std::string reference_name;
    double absolute_offset = 0.0;    // units of Gamma

    PolarizationGeometry default_geometry;

    int n_levels() const { return static_cast<int>(levels.size()); }
    int n_excited() const { return n_levels() - n_ground; }
    bool is_ground(int i) const { return i < n_ground; }
    const Level& ground(int g) const { return levels[g]; }
    const Level& excited(int e) const { return levels[n_ground + e]; }
    double reference_energy() const {
        return levels[reference_excited].energy - levels[reference_ground].energy;
    }
};

/// Spherical decomposition of a linear polarization axis, quantization axis
/// along the propagation direction z. The pump axis must be transverse.
inline PolarizationGeometry polarization_decompose(const Eigen::Vector3d& pump_axis) {
    const double norm = pump_axis.norm();
    if (norm <= 0.0) throw std::invalid_argument("pump axis must be a nonzero vector");
    const Eigen::Vector3d a = pump_axis / norm;
    if (std::abs(a.z()) > 1e-12)
        throw std::invalid_argument(
            "pump axis has a longitudinal component; only transverse polarization is supported");
    const double phi = std::atan2(a.y(), a.x());
    const Complex i01(0.0, 1.0);
    PolarizationGeometry g;
    // linear axis at angle phi: e(phi) = (e_{-1} exp(+i phi) - e_{+1} exp(-i phi))/sqrt(2)
    const double s = 1.0 / std::sqrt(2.0);
    g.pump << -s * std::exp(-i01 * phi), 0.0, s * std::exp(i01 * phi);
    const double phiv = phi + constants::pi / 2.0;
    g.vacuum << -s * std::exp(-i01 * phiv), 0.0, s * std::exp(i01 * phiv);
    return g;
}

inline PolarizationGeometry polarization_decompose(double pump_angle_rad) {
    return polarization_decompose(
        Eigen::Vector3d(std::cos(pump_angle_rad), std::sin(pump_angle_rad), 0.0));
}

/// Checks all LevelScheme invariants; throws with a diagnostic on failure.
inline void validate_scheme(const LevelScheme& s) {
    std::ostringstream err;
    if (s.n_ground <= 0 || s.n_ground >= s.n_levels())
        throw std::invalid_argument("scheme must contain at least one ground and one excited level");

    std::map<std::string, double> manifold_energy;
    for (const auto& lv : s.levels) {
        if (std::abs(lv.m2) > lv.F2) {
            err << "level " << lv.manifold << " has |m_F| > F (2m=" << lv.m2 << ", 2F=" << lv.F2 << ")";
            throw std::invalid_argument(err.str());
        }
        auto [it, inserted] = manifold_energy.emplace(lv.manifold, lv.energy);
        if (!inserted && std::abs(it->second - lv.energy) > 1e-12) {
            err << "manifold " << lv.manifold << " is not degenerate at zero field";
            throw std::invalid_argument(err.str());
        }
    }

    const int ne = s.n_excited(), ng = s.n_ground;
    for (int k = 0; k < 3; ++k) {
        if (s.coupling.d[k].rows() != ne || s.coupling.d[k].cols() != ng)
            throw std::invalid_argument("coupling tensor dimensions do not match the level lists");
    }
    if (s.loss.size() != ne)
        throw std::invalid_argument("loss vector length does not match the excited level count");

    for (int e = 0; e < ne; ++e) {
        double total = s.loss(e);
        if (s.loss(e) < -1e-12) {
            err << "negative loss fraction on excited level " << e;
            throw std::invalid_argument(err.str());
        }
        for (int q = -1; q <= 1; ++q) {
            for (int g = 0; g < ng; ++g) {
                const double d = s.coupling.q(q)(e, g);
                if (d != 0.0 && s.excited(e).m2 != s.ground(g).m2 + 2 * q) {
                    err << "coupling d_" << q << "[" << e << "][" << g
                        << "] violates the m_e = m_g + q selection rule";
                    throw std::invalid_argument(err.str());
                }
                total += d * d;
            }
        }
        if (std::abs(total - 1.0) > 1e-12) {
            err << "branching out of excited level " << e << " sums to " << total
                << " instead of 1 (including the loss channel)";
            throw std::invalid_argument(err.str());
        }
    }

    if (s.reference_ground < 0 || s.reference_ground >= s.n_ground ||
        s.reference_excited < s.n_ground || s.reference_excited >= s.n_levels())
        throw std::invalid_argument("reference transition indices out of range");
}

struct Rb87Options {
    double excited_splitting = constants::rb87_d1_excited_splitting_MHz /
                               constants::default_gamma_MHz;  // units of Gamma
    double ground_splitting = constants::rb87_ground_splitting_MHz /
                              constants::default_gamma_MHz;
    bool include_Fe1 = true;   // keep the F'=1 manifold
    bool include_Fe2 = true;   // keep the F'=2 manifold
    double pump_angle_rad = 0.0;
};

/// 87Rb D1 line with one ground hyperfine manifold (F = 1 or 2) and, by
/// default, both excited manifolds F' = 1, 2 with complete Zeeman structure.
/// Dropping an excited manifold gives the single-transition comparison
/// schemes; the branching lost with it goes into the loss channel, as does
/// the decay into the unmodeled ground manifold.
inline LevelScheme build_rb87_d1(int Fg, const Rb87Options& opt = {}) {
    if (Fg != 1 && Fg != 2) throw std::invalid_argument("ground manifold F must be 1 or 2");
    if (!opt.include_Fe1 && !opt.include_Fe2)
        throw std::invalid_argument("at least one excited manifold must be included");

    const double I = 1.5, Jg = 0.5, Je = 0.5;
    LevelScheme s;
    s.name = "rb87-d1-Fg" + std::to_string(Fg);
    if (!opt.include_Fe1) s.name += "-Fe2";
    if (!opt.include_Fe2) s.name += "-Fe1";

    for (int m2 = -2 * Fg; m2 <= 2 * Fg; m2 += 2)
        s.levels.push_back({"F=" + std::to_string(Fg), 2 * Fg, m2, 0.0});
    s.n_ground = static_cast<int>(s.levels.size());

    std::vector<int> excited_F;
    if (opt.include_Fe1) excited_F.push_back(1);
    if (opt.include_Fe2) excited_F.push_back(2);
    for (int Fe : excited_F) {
        const double energy = (Fe == 1) ? 0.0 : opt.excited_splitting;
        for (int m2 = -2 * Fe; m2 <= 2 * Fe; m2 += 2)
            s.levels.push_back({"F'=" + std::to_string(Fe), 2 * Fe, m2, energy});
    }

    const int ne = s.n_excited(), ng = s.n_ground;
    for (int k = 0; k < 3; ++k) s.coupling.d[k] = MatrixXd::Zero(ne, ng);
    for (int e = 0; e < ne; ++e) {
        const Level& le = s.excited(e);
        for (int g = 0; g < ng; ++g) {
            const Level& lg = s.ground(g);
            for (int q = -1; q <= 1; ++q) {
                s.coupling.q(q)(e, g) = angular::dipole_weight(
                    0.5 * lg.F2, 0.5 * lg.m2, 0.5 * le.F2, 0.5 * le.m2, q, I, Jg, Je);
            }
        }
    }
    s.loss = VectorXd::Zero(ne);
    for (int e = 0; e < ne; ++e) {
        double modeled = 0.0;
        for (int k = 0; k < 3; ++k) modeled += s.coupling.d[k].row(e).squaredNorm();
        s.loss(e) = 1.0 - modeled;
    }

    // reference transition: Fg -> F' = Fg (the manifold quoted in the figures)
    const int Fe_ref = opt.include_Fe1 && (Fg == 1 || !opt.include_Fe2) ? 1 : 2;
    s.reference_ground = 0;
    for (int e = 0; e < ne; ++e)
        if (s.excited(e).F2 == 2 * Fe_ref) { s.reference_excited = s.n_ground + e; break; }
    // prefer F' = Fg when both manifolds are present
    if (opt.include_Fe1 && opt.include_Fe2) {
        for (int e = 0; e < ne; ++e)
            if (s.excited(e).F2 == 2 * Fg) { s.reference_excited = s.n_ground + e; break; }
    }
    const int Fe_named = s.levels[s.reference_excited].F2 / 2;
    s.reference_name = "F=" + std::to_string(Fg) + "->F'=" + std::to_string(Fe_named);

    // absolute axis: zero at F=2 -> F'=2; F=1 sits a ground splitting below
    const double ref_excited_energy = s.levels[s.reference_excited].energy;
    const double e22 = opt.excited_splitting;
    s.absolute_offset = (ref_excited_energy - e22) + (Fg == 1 ? opt.ground_splitting : 0.0);

    s.default_geometry = polarization_decompose(opt.pump_angle_rad);
    validate_scheme(s);
    return s;
}

struct ToyOptions {
    // detuning of the |-> -> |e2> transition above the |+> -> |e1> reference
    double delta2 = 50.0;
};

/// Four-level scheme |+>, |->, |e1>, |e2>: the pump drives |+> -> |e1> and
/// |-> -> |e2>; the orthogonal vacuum polarization drives the cross
/// transitions. Quantization axis along the pump polarization, so the pump
/// legs are q = 0 and the vacuum legs are q = +/-1; the coupling tensor has
/// exactly four nonzero entries of 1/sqrt(2).
inline LevelScheme build_four_level_toy(const ToyOptions& opt = {}) {
    LevelScheme s;
    s.name = "four-level-toy";
    s.levels = {
        {"g", 1, +1, 0.0},            // |+>
        {"g", 1, -1, 0.0},            // |->
        {"e1", 1, +1, 0.0},
        {"e2", 1, -1, -opt.delta2},   // pump detuning from |->->|e2> is Delta + delta2
    };
    s.n_ground = 2;
    const double w = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < 3; ++k) s.coupling.d[k] = MatrixXd::Zero(2, 2);
    s.coupling.q(0)(0, 0) = w;    // |+> -> |e1>, pi
    s.coupling.q(0)(1, 1) = w;    // |-> -> |e2>, pi
    s.coupling.q(+1)(0, 1) = w;   // |-> -> |e1>, sigma+
    s.coupling.q(-1)(1, 0) = w;   // |+> -> |e2>, sigma-
    s.loss = VectorXd::Zero(2);
    s.reference_ground = 0;
    s.reference_excited = 2;
    s.reference_name = "+->e1";
    s.absolute_offset = 0.0;

    const double sq = 1.0 / std::sqrt(2.0);
    s.default_geometry.pump << 0.0, 1.0, 0.0;
    s.default_geometry.vacuum << -sq, 0.0, sq;
    validate_scheme(s);
    return s;
}

}  // namespace psr
