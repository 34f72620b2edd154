#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modalsim/oracles.hpp"

#include <cmath>
#include <numbers>

using namespace modalsim::oracles;

// ----------------------------------------------------------------------------
// Square well
// ----------------------------------------------------------------------------

TEST_CASE("square-well spectrum is normalized and dominated by n = 1 for small aL") {
    const auto s = square_well_spectrum({100.0, 1.0, 40});
    CHECK(std::abs(s.p.sum() - 1.0) < 1e-12);
    for (int k = 1; k < s.p.size(); ++k) CHECK(s.p(k) <= s.p(k - 1));
    // p_n ~ exp(-pi^2 n^2 / (4 a L^2)).
    CHECK(s.p(1) / s.p(0) ==
          doctest::Approx(std::exp(-std::numbers::pi * std::numbers::pi * 3.0 / 400.0)).epsilon(1e-13));

    const auto tight = square_well_spectrum({0.01, 1.0, 5});
    CHECK(tight.p(0) > 1.0 - 1e-12);
}

TEST_CASE("insufficient cutoff is rejected with a suggestion") {
    CHECK_THROWS_WITH_AS(square_well_spectrum({1000.0, 1.0, 10}), doctest::Contains("n_max"), std::invalid_argument);
    CHECK_THROWS_AS(square_well_spectrum({-1.0, 1.0, 10}), std::invalid_argument);
}

TEST_CASE("square-well eigenfunctions are orthonormal sine modes") {
    const auto s = square_well_spectrum({1.0, 2.0, 20});
    const int m = 20000;
    const double h = 2.0 / m;
    for (int a = 1; a <= 4; ++a)
        for (int b = 1; b <= 4; ++b) {
            double sum = 0.0;
            for (int k = 0; k < m; ++k) {
                const double x = (k + 0.5) * h;
                sum += s.eigenfunction(a, x) * s.eigenfunction(b, x) * h;
            }
            CHECK(std::abs(sum - (a == b ? 1.0 : 0.0)) < 1e-8);
        }
    CHECK(s.eigenfunction(1, -0.1) == 0.0);
    CHECK(s.eigenfunction(1, 2.1) == 0.0);
}

TEST_CASE("thermal identification kT = 2 a / m^2") {
    CHECK(square_well_temperature(1.0, 1.0) == 2.0);
    CHECK(square_well_temperature(2.0, 1.3) == doctest::Approx(2 * square_well_temperature(1.0, 1.3)));
    CHECK(square_well_temperature(1.7, 2.0) == doctest::Approx(square_well_temperature(1.7, 1.0) / 4));
}

TEST_CASE("the lattice cross-check selects the Poisson-resummed reading") {
    const auto check = cross_check_square_well({100.0, 1.0, 40}, 400, 20);
    REQUIRE(check.readings.size() == 3);
    CHECK(check.selected == SquareWellReading::PoissonResummed);
    for (std::size_t r = 0; r < check.readings.size(); ++r) {
        if (check.readings[r] == SquareWellReading::PoissonResummed)
            CHECK(check.max_abs_error[r] < 1e-6);
        else
            CHECK(check.max_abs_error[r] > 1e-3);
    }
}

// ----------------------------------------------------------------------------
// Gaussian packet
// ----------------------------------------------------------------------------

TEST_CASE("Gaussian oracle closed forms") {
    const GaussianOracle pure{0.0, 1.5};
    CHECK(pure.p0() == 1.0);
    CHECK(gaussian_spread(pure) == 0.0);
    CHECK(gaussian_spectrum(pure, 3).p(1) == 0.0);

    const double b = 0.7;
    const GaussianOracle quarter{4 * b, b};
    CHECK(quarter.mu() == doctest::Approx(3 * b).epsilon(1e-15));
    CHECK(quarter.p0() == doctest::Approx(0.5).epsilon(1e-15));
    const auto s = gaussian_spectrum(quarter, 8);
    for (int n = 0; n <= 8; ++n) CHECK(s.p(n) == doctest::Approx(std::pow(2.0, -(n + 1))).epsilon(1e-14));
    CHECK(gaussian_spread(quarter) == doctest::Approx(1.0 / (3 * b)).epsilon(1e-14));

    const GaussianOracle some{2.3, 0.4};
    const auto g = gaussian_spectrum(some, 12);
    for (int n = 0; n < 12; ++n) CHECK(g.p(n + 1) / g.p(n) == doctest::Approx(1 - some.p0()).epsilon(1e-14));

    CHECK_THROWS_AS(GaussianOracle({-1.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(GaussianOracle({1.0, 0.0}).validate(), std::invalid_argument);
}

TEST_CASE("spread stays of order 1/b for strong decoherence") {
    for (double b : {0.3, 1.0, 5.0})
        for (double ratio = 1e2; ratio <= 1e6; ratio *= 10) {
            const double s = gaussian_spread({ratio * b, b});
            CHECK(s * b >= 0.25);
            CHECK(s * b <= 4.0);
        }
}

TEST_CASE("Hermite functions are orthonormal") {
    const int n_max = 10;
    const GaussianSpectrum g = gaussian_spectrum({1.0, 1.0}, n_max);
    const double half = (8.0 + std::sqrt(2.0 * n_max)) / std::sqrt(g.mu);
    const int m = 20000;
    const double h = 2 * half / m;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int k = 0; k <= m; ++k) {
        const double x = -half + k * h;
        const double w = (k == 0 || k == m) ? 0.5 * h : h;
        const Eigen::VectorXd phi = g.eigenfunctions(n_max, x);
        gram += w * phi * phi.transpose();
    }
    CHECK((gram - Eigen::MatrixXd::Identity(n_max + 1, n_max + 1)).cwiseAbs().maxCoeff() < 1e-8);
    for (int n = 0; n <= n_max; ++n) CHECK(g.eigenfunction(n, 0.37) == doctest::Approx(g.eigenfunctions(n_max, 0.37)(n)));

    // Against the explicit polynomials H_0..H_3.
    const double xi = 0.8;
    const Eigen::VectorXd psi = hermite_functions(3, xi);
    const double base = std::pow(std::numbers::pi, -0.25) * std::exp(-xi * xi / 2);
    CHECK(psi(0) == doctest::Approx(base).epsilon(1e-14));
    CHECK(psi(1) == doctest::Approx(base * std::sqrt(2.0) * xi).epsilon(1e-14));
    CHECK(psi(2) == doctest::Approx(base * (4 * xi * xi - 2) / std::sqrt(8.0)).epsilon(1e-14));
    CHECK(psi(3) == doctest::Approx(base * (8 * xi * xi * xi - 12 * xi) / std::sqrt(48.0)).epsilon(1e-14));

    // Deep levels stay finite.
    CHECK(hermite_functions(200, 5.0).allFinite());
}

TEST_CASE("Gaussian eigenfunctions diagonalize the continuum kernel") {
    // Integral of rho(x, y) phi_n(y) dy = p_n phi_n(x) with rho normalized to unit trace.
    const GaussianOracle o{1.5, 0.8};
    const auto g = gaussian_spectrum(o, 4);
    const double half = 8.0 / std::sqrt(2 * o.b);
    const int m = 4000;
    const double h = 2 * half / m;
    auto rho = [&](double x, double y) {
        return std::exp(-o.b * x * x - o.b * y * y - o.a * (x - y) * (x - y)) * std::sqrt(2 * o.b / std::numbers::pi);
    };
    for (int n = 0; n <= 4; ++n) {
        const double x = 0.3;
        double s = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double y = -half + k * h;
            s += rho(x, y) * g.eigenfunction(n, y) * h;
        }
        CHECK(s == doctest::Approx(g.p(n) * g.eigenfunction(n, x)).epsilon(1e-9));
    }
}

TEST_CASE("lattice diagonalization matches the Gaussian oracle") {
    for (double ratio : {0.1, 1.0, 4.0, 100.0}) {
        const auto check = gaussian_lattice_spectrum({ratio, 1.0}, 600, 11);
        CHECK(check.max_relative_error < 1e-6);
    }
}
