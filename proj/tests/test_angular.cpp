#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "psr/angular.hpp"
#include "support/wigner_exact.hpp"

using namespace psr::angular;

namespace {
// random (half-)integer spins for property tests, doubled representation
struct SpinGen {
    std::mt19937_64 rng{20240811};
    int spin2(int max2 = 8) {
        std::uniform_int_distribution<int> d(0, max2);
        return d(rng);
    }
    int proj2(int j2) {
        std::uniform_int_distribution<int> d(0, j2);
        return j2 - 2 * d(rng);   // same parity as j2
    }
};
}  // namespace

TEST_CASE("3j: selection-rule zeros are exact", "[angular]") {
    CHECK(wigner3j(1, 1, 1, 0, 0, 0) == 0.0);              // odd j-sum, all m = 0
    CHECK(wigner3j(1, 1, 1, 1, 0, 0) == 0.0);              // m-sum nonzero
    CHECK(wigner3j(1, 1, 3, 0, 0, 0) == 0.0);              // triangle violation
    CHECK(wigner3j(2, 1, 1, 2, -1, -1) != 0.0);
}

TEST_CASE("3j: closed-form column (j j 0)", "[angular]") {
    // (j j 0; m -m 0) = (-1)^(j-m)/sqrt(2j+1)
    CHECK_THAT(wigner3j(1, 1, 0, 0, 0, 0),
               Catch::Matchers::WithinAbs(-1.0 / std::sqrt(3.0), 1e-15));
    CHECK_THAT(wigner3j(1.5, 1.5, 0, 0.5, -0.5, 0),
               Catch::Matchers::WithinAbs(-1.0 / 2.0, 1e-15));
    CHECK_THAT(wigner3j(2, 2, 0, 2, -2, 0),
               Catch::Matchers::WithinAbs(1.0 / std::sqrt(5.0), 1e-15));
}

TEST_CASE("3j matches the exact-rational Racah oracle", "[angular]") {
    CHECK_THAT(wigner3j(2, 1, 1, 0, 0, 0),
               Catch::Matchers::WithinAbs(wigner_exact::threej(4, 2, 2, 0, 0, 0), 1e-15));

    SpinGen gen;
    for (int trial = 0; trial < 500; ++trial) {
        const int j1 = gen.spin2(), j2 = gen.spin2();
        std::uniform_int_distribution<int> dj(std::abs(j1 - j2), j1 + j2);
        int j3 = dj(gen.rng);
        if ((j1 + j2 + j3) % 2 != 0) {
            if (j3 > std::abs(j1 - j2)) --j3; else ++j3;
        }
        const int m1 = gen.proj2(j1), m2 = gen.proj2(j2), m3 = -m1 - m2;
        if (std::abs(m3) > j3) continue;
        const double got = wigner3j(0.5 * j1, 0.5 * j2, 0.5 * j3, 0.5 * m1, 0.5 * m2, 0.5 * m3);
        const double want = wigner_exact::threej(j1, j2, j3, m1, m2, m3);
        CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-13));
    }
}

TEST_CASE("3j symmetries: column permutations", "[angular]") {
    SpinGen gen;
    int tested = 0;
    while (tested < 200) {
        const int j1 = gen.spin2(), j2 = gen.spin2();
        std::uniform_int_distribution<int> dj(std::abs(j1 - j2), j1 + j2);
        int j3 = dj(gen.rng);
        if ((j1 + j2 + j3) % 2 != 0) continue;
        const int m1 = gen.proj2(j1), m2 = gen.proj2(j2), m3 = -m1 - m2;
        if (std::abs(m3) > j3) continue;
        ++tested;
        const double v = wigner3j(0.5 * j1, 0.5 * j2, 0.5 * j3, 0.5 * m1, 0.5 * m2, 0.5 * m3);
        // even (cyclic) permutation
        const double ve = wigner3j(0.5 * j2, 0.5 * j3, 0.5 * j1, 0.5 * m2, 0.5 * m3, 0.5 * m1);
        CHECK_THAT(ve, Catch::Matchers::WithinAbs(v, 1e-13));
        // odd permutation picks up (-1)^(j1+j2+j3)
        const double sign = ((j1 + j2 + j3) / 2) % 2 == 0 ? 1.0 : -1.0;
        const double vo = wigner3j(0.5 * j2, 0.5 * j1, 0.5 * j3, 0.5 * m2, 0.5 * m1, 0.5 * m3);
        CHECK_THAT(vo, Catch::Matchers::WithinAbs(sign * v, 1e-13));
    }
}

TEST_CASE("3j orthogonality sums", "[angular]") {
    // sum over m1, m2 of (2 j3 + 1) |3j|^2 = 1 for each allowed (j3, m3)
    SpinGen gen;
    for (int trial = 0; trial < 50; ++trial) {
        const int j1 = gen.spin2(6), j2 = gen.spin2(6);
        std::uniform_int_distribution<int> dj(std::abs(j1 - j2), j1 + j2);
        int j3 = dj(gen.rng);
        if ((j1 + j2 + j3) % 2 != 0) continue;
        const int m3 = gen.proj2(j3);
        double sum = 0.0;
        for (int m1 = -j1; m1 <= j1; m1 += 2) {
            const int m2 = -m3 - m1;
            if (std::abs(m2) > j2) continue;
            const double v = wigner3j(0.5 * j1, 0.5 * j2, 0.5 * j3, 0.5 * m1, 0.5 * m2, 0.5 * m3);
            sum += (j3 + 1) * v * v;
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("6j: triangle violations and Racah oracle", "[angular]") {
    CHECK(wigner6j(1, 1, 3, 1, 1, 1) == 0.0);   // triad (1,1,3) violates the triangle
    CHECK_THAT(wigner6j(1, 1, 1, 1, 1, 1),
               Catch::Matchers::WithinAbs(wigner_exact::sixj(2, 2, 2, 2, 2, 2), 1e-15));
    CHECK_THAT(wigner6j(1, 1, 1, 1, 1, 1), Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-14));

    SpinGen gen;
    for (int trial = 0; trial < 300; ++trial) {
        const int j1 = gen.spin2(6), j2 = gen.spin2(6), j3 = gen.spin2(6);
        const int j4 = gen.spin2(6), j5 = gen.spin2(6), j6 = gen.spin2(6);
        const double got = wigner6j(0.5 * j1, 0.5 * j2, 0.5 * j3, 0.5 * j4, 0.5 * j5, 0.5 * j6);
        const double want = wigner_exact::sixj(j1, j2, j3, j4, j5, j6);
        CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-13));
    }
}

TEST_CASE("6j orthogonality identity", "[angular]") {
    // sum_x (2x+1) {j1 j2 x; j3 j4 j5}{j1 j2 x; j3 j4 j6} = delta(j5,j6)/(2 j5 + 1)
    SpinGen gen;
    int tested = 0;
    while (tested < 60) {
        const int j1 = gen.spin2(5), j2 = gen.spin2(5), j3 = gen.spin2(5), j4 = gen.spin2(5);
        auto triangle = [](int a, int b, int c) {
            return (a + b + c) % 2 == 0 && c >= std::abs(a - b) && c <= a + b;
        };
        // j5, j6 must form triads with (j1,j4) and (j2,j3)
        std::vector<int> allowed;
        for (int x = 0; x <= j1 + j4; ++x)
            if (triangle(j1, j4, x) && triangle(j2, j3, x)) allowed.push_back(x);
        if (allowed.size() < 2) continue;
        ++tested;
        const int j5 = allowed[0], j6 = allowed[1];

        auto ortho = [&](int a, int b) {
            double sum = 0.0;
            for (int x = 0; x <= j1 + j2; ++x) {
                const double f1 = wigner6j(0.5 * j1, 0.5 * j2, 0.5 * x, 0.5 * j3, 0.5 * j4, 0.5 * a);
                const double f2 = wigner6j(0.5 * j1, 0.5 * j2, 0.5 * x, 0.5 * j3, 0.5 * j4, 0.5 * b);
                sum += (x + 1) * f1 * f2;
            }
            return sum;
        };
        CHECK_THAT(ortho(j5, j5), Catch::Matchers::WithinAbs(1.0 / (j5 + 1.0), 1e-12));
        CHECK_THAT(ortho(j5, j6), Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("dipole weights: selection rules and forbidden lines", "[angular]") {
    const double I = 1.5, J = 0.5;
    // m = 0 -> m' = 0 is forbidden on F=1 -> F'=1 (3j (1 1 1; 0 0 0) = 0)
    CHECK(dipole_weight(1, 0, 1, 0, 0, I, J, J) == 0.0);
    // Delta m = 2 has no polarization
    CHECK(dipole_weight(1, -1, 1, 1, 1, I, J, J) == 0.0);
    CHECK(dipole_weight(2, 0, 2, 1, 0, I, J, J) == 0.0);
    CHECK(dipole_weight(1, 0, 2, 1, 1, I, J, J) != 0.0);
}

TEST_CASE("dipole weights: 87Rb D1 normalization sum rule", "[angular]") {
    const double I = 1.5, Jg = 0.5, Je = 0.5;
    // summed over both ground manifolds, all sublevels and polarizations, the
    // branching out of every excited sublevel is exactly 1
    for (int Fe = 1; Fe <= 2; ++Fe) {
        for (int me2 = -2 * Fe; me2 <= 2 * Fe; me2 += 2) {
            double sum = 0.0;
            for (int Fg = 1; Fg <= 2; ++Fg)
                for (int mg2 = -2 * Fg; mg2 <= 2 * Fg; mg2 += 2)
                    for (int q = -1; q <= 1; ++q) {
                        const double d =
                            dipole_weight(Fg, 0.5 * mg2, Fe, 0.5 * me2, q, I, Jg, Je);
                        sum += d * d;
                    }
            CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
        }
    }
}
