#pragma once

// Angular-momentum algebra: Wigner 3-j / 6-j symbols, Clebsch-Gordan
// coefficients, and hyperfine dipole weights in the Condon-Shortley
// convention. Quantum numbers are accepted as doubles (integers or
// half-integers) and handled internally as doubled integers, so all
// selection rules are exact and forbidden combinations return an exact 0.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace psr::angular {

namespace detail {

// factorials up to 170! fit in double
inline const double* factorial_table() {
    static const std::array<double, 171> table = [] {
        std::array<double, 171> f{};
        f[0] = 1.0;
        for (int i = 1; i <= 170; ++i) f[i] = f[i - 1] * static_cast<double>(i);
        return f;
    }();
    return table.data();
}

inline double fact(int n) {
    if (n < 0 || n > 170) throw std::invalid_argument("factorial argument out of range");
    return factorial_table()[n];
}

// round a (half-)integer quantum number to its doubled integer form
inline int doubled(double j) {
    const double t = 2.0 * j;
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-9) throw std::invalid_argument("quantum number is not a half-integer");
    return static_cast<int>(r);
}

inline bool triangle_ok(int a2, int b2, int c2) {
    if ((a2 + b2 + c2) % 2 != 0) return false;   // perimeter must be integral
    return c2 >= std::abs(a2 - b2) && c2 <= a2 + b2;
}

inline int parity(int e) { return (e % 2 == 0) ? 1 : -1; }   // (-1)^e, e may be negative

// sqrt of the triangle coefficient Delta(abc)
inline double tri_coeff(int a2, int b2, int c2) {
    return std::sqrt(fact((a2 + b2 - c2) / 2) * fact((a2 - b2 + c2) / 2) *
                     fact((-a2 + b2 + c2) / 2) / fact((a2 + b2 + c2) / 2 + 1));
}

inline double wigner3j_d2(int j1, int j2, int j3, int m1, int m2, int m3) {
    if (m1 + m2 + m3 != 0) return 0.0;
    if (!triangle_ok(j1, j2, j3)) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
    if ((j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0) return 0.0;

    // Racah sum; all arguments below are true integers
    const int a1 = (j1 + j2 - j3) / 2;
    const int a2 = (j1 - m1) / 2;
    const int a3 = (j2 + m2) / 2;
    const int b1 = (j2 - j3 - m1) / 2;
    const int b2 = (j1 - j3 + m2) / 2;

    const int kmin = std::max({0, b1, b2});
    const int kmax = std::min({a1, a2, a3});
    if (kmin > kmax) return 0.0;

    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double term = 1.0 / (fact(k) * fact(a1 - k) * fact(a2 - k) * fact(a3 - k) *
                                   fact(k - b1) * fact(k - b2));
        sum += (k % 2 == 0) ? term : -term;
    }
    const double scale = tri_coeff(j1, j2, j3) *
                         std::sqrt(fact((j1 + m1) / 2) * fact((j1 - m1) / 2) *
                                   fact((j2 + m2) / 2) * fact((j2 - m2) / 2) *
                                   fact((j3 + m3) / 2) * fact((j3 - m3) / 2));
    return parity((j1 - j2 - m3) / 2) * scale * sum;
}

inline double wigner6j_d2(int j1, int j2, int j3, int j4, int j5, int j6) {
    if (!triangle_ok(j1, j2, j3) || !triangle_ok(j1, j5, j6) ||
        !triangle_ok(j4, j2, j6) || !triangle_ok(j4, j5, j3))
        return 0.0;

    const int t1 = (j1 + j2 + j3) / 2;
    const int t2 = (j1 + j5 + j6) / 2;
    const int t3 = (j4 + j2 + j6) / 2;
    const int t4 = (j4 + j5 + j3) / 2;
    const int q1 = (j1 + j2 + j4 + j5) / 2;
    const int q2 = (j2 + j3 + j5 + j6) / 2;
    const int q3 = (j3 + j1 + j6 + j4) / 2;

    const int kmin = std::max({t1, t2, t3, t4});
    const int kmax = std::min({q1, q2, q3});
    if (kmin > kmax) return 0.0;

    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double term = fact(k + 1) / (fact(k - t1) * fact(k - t2) * fact(k - t3) *
                                           fact(k - t4) * fact(q1 - k) * fact(q2 - k) *
                                           fact(q3 - k));
        sum += (k % 2 == 0) ? term : -term;
    }
    return tri_coeff(j1, j2, j3) * tri_coeff(j1, j5, j6) * tri_coeff(j4, j2, j6) *
           tri_coeff(j4, j5, j3) * sum;
}

}  // namespace detail

/// Wigner 3-j symbol. Violated selection rules give an exact 0.
inline double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3) {
    using detail::doubled;
    return detail::wigner3j_d2(doubled(j1), doubled(j2), doubled(j3),
                               doubled(m1), doubled(m2), doubled(m3));
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}. Triangle violations give an exact 0.
inline double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6) {
    using detail::doubled;
    return detail::wigner6j_d2(doubled(j1), doubled(j2), doubled(j3),
                               doubled(j4), doubled(j5), doubled(j6));
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3>.
inline double clebsch_gordan(double j1, double m1, double j2, double m2, double j3, double m3) {
    using detail::doubled;
    const int j1_2 = doubled(j1), j2_2 = doubled(j2), j3_2 = doubled(j3);
    const int m1_2 = doubled(m1), m2_2 = doubled(m2), m3_2 = doubled(m3);
    if (m1_2 + m2_2 != m3_2) return 0.0;
    const double tj = detail::wigner3j_d2(j1_2, j2_2, j3_2, m1_2, m2_2, -m3_2);
    return detail::parity((-j1_2 + j2_2 - m3_2) / 2) * std::sqrt(j3_2 + 1.0) * tj;
}

/// Dimensionless dipole weight of the hyperfine transition
/// |F_g m_g> -> |F_e m_e> driven with spherical polarization q, relative to
/// the reduced fine-structure matrix element <J_e||T||J_g>:
///
///   d_q = (-1)^(J_e+I+F_g+1) sqrt((2F_g+1)(2J_e+1)) {J_e F_e I; F_g J_g 1}
///         * <F_g m_g; 1 q | F_e m_e>
///
/// Real (Condon-Shortley), zero unless m_e = m_g + q, and normalized so that
/// the branching out of each excited sublevel sums to 1 over all ground
/// hyperfine manifolds, sublevels and polarizations.
inline double dipole_weight(double F_g, double m_g, double F_e, double m_e, int q,
                            double I, double J_g, double J_e) {
    if (q < -1 || q > 1) throw std::invalid_argument("polarization q must be -1, 0 or +1");
    using detail::doubled;
    if (doubled(m_e) != doubled(m_g) + 2 * q) return 0.0;
    const double six = wigner6j(J_e, F_e, I, F_g, J_g, 1.0);
    const double cg = clebsch_gordan(F_g, m_g, 1.0, q, F_e, m_e);
    const int phase = detail::parity((doubled(J_e) + doubled(I) + doubled(F_g)) / 2 + 1);
    return phase * std::sqrt((doubled(F_g) + 1.0) * (doubled(J_e) + 1.0)) * six * cg;
}

}  // namespace psr::angular
