#include <catch2/catch_amalgamated.hpp>

#include "psr/ensemble.hpp"
#include "support/test_schemes.hpp"

using namespace psr;

namespace {

DriveConfig drive(double Omega, double Delta, double gamma0, double C) {
    DriveConfig d;
    d.Omega_f = Omega;
    d.Delta = Delta;
    d.gamma0 = gamma0;
    d.C = C;
    return d;
}

SidebandCorrelation stationary(const LevelScheme& s, const DriveConfig& d, const VectorXd& grid) {
    const auto ds = build_generator(s, d, s.default_geometry);
    const auto rho = steady_state(ds);
    const auto D = diffusion_matrix(ds, rho);
    const auto cc = build_collective(s, s.default_geometry, rho, d.C);
    return sideband_correlations(ds, D, cc, grid);
}

}  // namespace

TEST_CASE("velocity grid: stationary limit and normalization", "[ensemble]") {
    const auto single = velocity_grid(0.0, 17);
    CHECK(single.n_classes() == 1);
    CHECK(single.weight(0) == 1.0);
    CHECK(single.shift(0) == 0.0);

    for (int n : {1, 2, 7, 20, 40, 80}) {
        for (auto wmode : {ClassWeighting::Boltzmann, ClassWeighting::Uniform}) {
            const auto ve = velocity_grid(3.7, n, wmode);
            CHECK_THAT(ve.weight.sum(), Catch::Matchers::WithinAbs(1.0, 1e-12));
            // symmetric grid
            CHECK_THAT(ve.shift.sum(), Catch::Matchers::WithinAbs(0.0, 1e-9));
        }
    }
}

TEST_CASE("velocity grid: second moment matches the Doppler variance", "[ensemble]") {
    const double width = 37.4;
    for (int n : {20, 40, 80}) {
        const auto ve = velocity_grid(width, n);
        const double m2 = (ve.weight.array() * ve.shift.array().square()).sum();
        CHECK_THAT(m2 / (width * width), Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("doppler width from temperature", "[ensemble]") {
    // 87Rb at 332 K, 795 nm, Gamma = 2 pi x 6 MHz: k sigma_v ~ 37.4 Gamma
    const double w = doppler_width_from_temperature(332.15);
    CHECK_THAT(w, Catch::Matchers::WithinAbs(37.4, 0.2));
}

TEST_CASE("single-class average is the identity", "[ensemble]") {
    const auto s = build_four_level_toy();
    VectorXd grid(3);
    grid << 0.05, 0.2, 1.0;
    const auto sc = stationary(s, drive(1.0, 0.0, 0.01, 10.0), grid);
    const auto ve = velocity_grid(0.0, 1);
    const auto avg = doppler_average({sc}, ve);
    CHECK((avg.CN - sc.CN).norm() == 0.0);
    CHECK((avg.CA - sc.CA).norm() == 0.0);
}

TEST_CASE("zero-width ensemble reproduces the stationary spectrum bit-for-bit", "[ensemble]") {
    const auto s = build_four_level_toy();
    const auto d = drive(2.0, 5.0, 0.01, 50.0);
    VectorXd grid(4);
    grid << 0.05, 0.2, 0.7, 1.5;
    const auto direct = stationary(s, d, grid);
    const auto ve = velocity_grid(0.0, 40);   // width 0 collapses to one class
    const auto avg = doppler_spectrum(s, s.default_geometry, d, ve, grid);
    CHECK((avg.CN - direct.CN).cwiseAbs().maxCoeff() == 0.0);
    CHECK((avg.CA - direct.CA).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("opposite velocity classes are conjugate for a symmetric scheme", "[ensemble]") {
    // degenerate excited levels make the toy symmetric under m -> -m plus
    // conjugation, which maps kv -> -kv: C_N is even in the shift and the
    // phase of C_A flips sign
    const auto s = build_four_level_toy({0.0});
    VectorXd grid(3);
    grid << 0.05, 0.3, 1.0;
    const double kv = 2.3;
    const auto plus = stationary(s, drive(1.5, -kv, 0.02, 8.0), grid);
    const auto minus = stationary(s, drive(1.5, +kv, 0.02, 8.0), grid);
    for (int k = 0; k < grid.size(); ++k) {
        CHECK(plus.CN(k) > 1e-4);   // real self-rotation noise, not a trivial zero
        CHECK_THAT(plus.CN(k), Catch::Matchers::WithinRel(minus.CN(k), 1e-10));
        CHECK(std::abs(plus.CA(k) - std::conj(minus.CA(k))) <
              1e-10 * std::max(1.0, std::abs(plus.CA(k))));
    }
}

TEST_CASE("doppler averaging rejects mismatched grids", "[ensemble]") {
    const auto s = build_four_level_toy();
    VectorXd g1(2), g2(2);
    g1 << 0.1, 0.2;
    g2 << 0.1, 0.25;
    const auto a = stationary(s, drive(1.0, 0.0, 0.01, 5.0), g1);
    auto b = stationary(s, drive(1.0, 1.0, 0.01, 5.0), g2);
    const auto ve = velocity_grid(1.0, 2);
    CHECK_THROWS_AS(doppler_average({a, b}, ve), std::invalid_argument);
}

TEST_CASE("averaged spectra stay physical", "[ensemble]") {
    const auto s = build_four_level_toy({50.0});
    const auto d = drive(3.0, 2.0, 0.01, 100.0);
    VectorXd grid(4);
    grid << 0.05, 0.2, 0.6, 1.5;
    const auto ve = velocity_grid(10.0, 24);
    const auto avg = doppler_spectrum(s, s.default_geometry, d, ve, grid);
    const auto qs = quadrature_spectrum(avg);
    for (int k = 0; k < grid.size(); ++k) {
        CHECK(avg.CN(k) >= -1e-10);
        CHECK(qs.S_min(k) * qs.S_max(k) >= 1.0 - 1e-6);
        CHECK_THAT(avg.commutator(k), Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("doppler averaging smooths and weakens spectral structure", "[ensemble]") {
    // moving atoms at matched total cooperativity: weaker extremes than the
    // stationary medium at the same drive
    const auto s = build_four_level_toy({50.0});
    const auto d = drive(3.0, 0.0, 0.01, 50.0);
    VectorXd grid(5);
    grid << 0.02, 0.05, 0.1, 0.3, 0.8;
    const auto still = quadrature_spectrum(stationary(s, d, grid));
    const auto ve = velocity_grid(20.0, 32);
    const auto moving =
        quadrature_spectrum(doppler_spectrum(s, s.default_geometry, d, ve, grid));
    CHECK(moving.S_max.maxCoeff() < still.S_max.maxCoeff());
}
