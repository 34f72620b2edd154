#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modalsim/lattice.hpp"
#include "modalsim/oracles.hpp"

#include <cmath>
#include <numbers>

using namespace modalsim;
using namespace modalsim::lattice;

namespace {

LatticeWaveFunction gaussian_packet(int n_sites, double epsilon, double sigma) {
    const LatticeGrid grid(epsilon, n_sites, -0.5 * (n_sites - 1) * epsilon);
    return LatticeWaveFunction::gaussian(grid, 0.0, sigma);
}

double mean_top_localization(const linalg::SpectralDecomposition& spec, double epsilon, int top) {
    double s = 0.0;
    for (int k = 0; k < top; ++k) s += localization_length(spec.vectors.col(k), epsilon);
    return s / top;
}

}  // namespace

// ----------------------------------------------------------------------------
// gaussian_decohered_rho
// ----------------------------------------------------------------------------

TEST_CASE("decohered rho keeps the diagonal exactly") {
    const auto psi = gaussian_packet(120, 1.0, 12.0);
    const auto rho = gaussian_decohered_rho(psi, 3.0);
    const Eigen::VectorXd p = psi.site_probabilities();
    for (int j = 0; j < 120; ++j) CHECK(rho.entries()(j, j).real() == p(j));
    CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
    CHECK_THROWS_AS(gaussian_decohered_rho(psi, 0.0), std::invalid_argument);
}

TEST_CASE("coherence-length extremes of the decohered spectrum") {
    const auto psi = gaussian_packet(150, 1.0, 15.0);
    const double span = psi.grid().span();

    const auto wide = linalg::eigen_decompose(gaussian_decohered_rho(psi, 1e12 * span));
    CHECK(std::abs(wide.probabilities(0) - 1.0) < 1e-9);
    const auto coherent = linalg::eigen_decompose(gaussian_decohered_rho(psi, 100.0 * span));
    // |psi|^2 of standard deviation sigma gives b = 1/(4 sigma^2); the kernel gives a = 1/ell^2.
    const oracles::GaussianOracle continuum{1.0 / std::pow(100.0 * span, 2), 1.0 / (4 * 15.0 * 15.0)};
    CHECK(std::abs(coherent.probabilities(0) - continuum.p0()) < 1e-8);
    CHECK(1.0 - coherent.probabilities(0) > 1e-6);

    const auto narrow = linalg::eigen_decompose(gaussian_decohered_rho(psi, 0.01));
    CHECK(std::abs(narrow.probabilities(0) - psi.site_probabilities().maxCoeff()) < 1e-6);
}

TEST_CASE("eigenvalues approach the site probabilities when ell is below the spacing") {
    const auto psi = gaussian_packet(200, 1.0, 20.0);
    const auto spec = linalg::eigen_decompose(gaussian_decohered_rho(psi, 0.1));
    Eigen::VectorXd sites = psi.site_probabilities();
    std::sort(sites.data(), sites.data() + sites.size(), std::greater<>());
    int compared = 0;
    for (int j = 0; j < sites.size(); ++j) {
        if (sites(j) <= 1e-4) continue;
        CHECK(std::abs(spec.probabilities(j) - sites(j)) / sites(j) < 0.01);
        ++compared;
    }
    CHECK(compared > 50);
}

TEST_CASE("localization length collapses from ell = 10 eps to ell = eps / 10") {
    const auto psi = gaussian_packet(200, 1.0, 20.0);
    const auto coherent = linalg::eigen_decompose(gaussian_decohered_rho(psi, 10.0));
    const auto localized = linalg::eigen_decompose(gaussian_decohered_rho(psi, 0.1));
    const double before = mean_top_localization(coherent, 1.0, 5);
    const double after = mean_top_localization(localized, 1.0, 5);
    CHECK(before / after >= 10.0);
}

// ----------------------------------------------------------------------------
// Image-sum kernel
// ----------------------------------------------------------------------------

TEST_CASE("image sum equals its Fourier sine series") {
    // sum_n [e^{-a(x-y-2nL)^2} - e^{-a(x+y-2nL)^2}]
    //   = (2/L) sqrt(pi/a) sum_{k>=1} e^{-pi^2 k^2/(4 a L^2)} sin(pi k x/L) sin(pi k y/L)
    const double width = 1.0;
    for (double a : {0.5, 3.0, 40.0}) {
        const auto grid = LatticeGrid::midpoints(0.0, width, 24);
        const auto psi = LatticeWaveFunction::uniform(grid);
        const auto img = image_sum_rho(psi, a, 0.0, width);
        Eigen::MatrixXd series = Eigen::MatrixXd::Zero(24, 24);
        const double pi = std::numbers::pi;
        for (int j = 0; j < 24; ++j)
            for (int k = 0; k < 24; ++k) {
                double s = 0.0;
                for (int m = 1; m < 400; ++m)
                    s += std::exp(-pi * pi * m * m / (4.0 * a * width * width)) * std::sin(pi * m * grid.x(j) / width) *
                         std::sin(pi * m * grid.x(k) / width);
                series(j, k) = s;
            }
        series /= series.trace();
        CHECK((img.rho.entries().real() - series).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(img.rho.entries().imag().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("image sum rejects a grid outside the well") {
    const auto grid = LatticeGrid::midpoints(-0.5, 2.0, 10);
    CHECK_THROWS_AS(image_sum_rho(LatticeWaveFunction::uniform(grid), 1.0, 0.0, 1.0), std::invalid_argument);
}

// ----------------------------------------------------------------------------
// Coherence length
// ----------------------------------------------------------------------------

TEST_CASE("coherence length power law") {
    CHECK(coherence_length(1e-4, 1e-18) == doctest::Approx(1e-16).epsilon(1e-14));
    CHECK(coherence_length(1.0, 3.7) == 3.7);
    CHECK(coherence_length(8.0, 2.0) / coherence_length(32.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(coherence_length(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(coherence_length(-1.0, 1.0), std::invalid_argument);

    const auto floor = coherence_length_clamped(100.0, 1.0, 0.5);
    CHECK(floor.clamped);
    CHECK(floor.ell == 0.5);
    CHECK_FALSE(floor.warning.empty());
    const auto free = coherence_length_clamped(1.0, 1.0, 0.5);
    CHECK_FALSE(free.clamped);
    CHECK(free.ell == 1.0);
}

// ----------------------------------------------------------------------------
// Localization length and coarse graining
// ----------------------------------------------------------------------------

TEST_CASE("localization length of simple vectors") {
    const double eps = 0.25;
    CHECK(localization_length(Eigen::VectorXcd::Unit(40, 7), eps) == doctest::Approx(eps));
    const Eigen::VectorXcd uniform = Eigen::VectorXcd::Constant(40, 1.0 / std::sqrt(40.0));
    CHECK(localization_length(uniform, eps) == doctest::Approx(40 * eps).epsilon(1e-12));
    CHECK_THROWS_AS(localization_length(Eigen::VectorXcd::Zero(5), eps), std::invalid_argument);
}

TEST_CASE("coarse-grained probabilities") {
    const auto psi = gaussian_packet(60, 0.5, 4.0);
    const Eigen::VectorXd all = coarse_grained_probabilities(psi, 60);
    REQUIRE(all.size() == 1);
    CHECK(all(0) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::VectorXd sites = coarse_grained_probabilities(psi, 1);
    CHECK((sites - psi.site_probabilities()).cwiseAbs().maxCoeff() == 0.0);

    // Merging blocks of 2 pairwise gives the blocks of 4.
    const Eigen::VectorXd b2 = coarse_grained_probabilities(psi, 2);
    const Eigen::VectorXd b4 = coarse_grained_probabilities(psi, 4);
    for (int j = 0; j < b4.size(); ++j) CHECK(b2(2 * j) + b2(2 * j + 1) == doctest::Approx(b4(j)).epsilon(1e-15));

    // A block size that does not divide n_sites pads the last block.
    const Eigen::VectorXd b7 = coarse_grained_probabilities(psi, 7);
    CHECK(b7.size() == 9);
    CHECK(std::abs(b7.sum() - 1.0) < 1e-10);
}

TEST_CASE("coarse-grained Gaussian blocks agree with the exact interval integrals") {
    // |psi|^2 is a normal density of width sigma; block j covers
    // [x_first - eps/2, x_last + eps/2] and its weight is a difference of erfs.
    const double sigma = 1.0;
    const double eps = 0.002;
    const int n = 8000;
    const auto psi = gaussian_packet(n, eps, sigma);
    const Eigen::VectorXd blocks = coarse_grained_probabilities(psi, 4);
    double worst = 0.0;
    for (int j = 0; j < blocks.size(); ++j) {
        const double lo = psi.grid().x(4 * j) - 0.5 * eps;
        const double hi = psi.grid().x(4 * j + 3) + 0.5 * eps;
        const double exact = 0.5 * (std::erf(hi / (sigma * std::sqrt(2.0))) - std::erf(lo / (sigma * std::sqrt(2.0))));
        worst = std::max(worst, std::abs(blocks(j) - exact));
    }
    CHECK(worst < 1e-8);
}

// ----------------------------------------------------------------------------
// Spin bath
// ----------------------------------------------------------------------------

TEST_CASE("spin bath overlap") {
    Eigen::VectorXd one(1);
    one << 0.7;
    const SpinBath single(one);
    const auto o = spin_bath_overlap(single, 1.3, 0.4);
    CHECK(o.exact == doctest::Approx(std::cos(2 * 0.7 * 0.4 * 1.3)).epsilon(1e-15));
    CHECK(single.lambda_sq() == doctest::Approx(2 * 0.49).epsilon(1e-15));

    const SpinBath equal(Eigen::VectorXd::Constant(5, 1.0));
    const double t = std::numbers::pi / 4.0;  // 2 g dx t = pi/2 with g = dx = 1
    CHECK(std::abs(spin_bath_overlap(equal, t, 1.0).exact) < 1e-15);

    const SpinBath bath = SpinBath::uniform(1000, 0.5, 1.5, 2024);
    CHECK(bath.lambda_sq() == doctest::Approx(2.0 * bath.couplings().squaredNorm() / 1000).epsilon(1e-12));
    const double dx = 1.0;
    const double t_max = 1.0 / std::sqrt(bath.size() * bath.lambda_sq());
    for (int k = 0; k <= 50; ++k) {
        const double tk = t_max * k / 50.0;
        const auto v = spin_bath_overlap(bath, tk, dx);
        CHECK(std::abs(v.exact - v.gaussian) <= 0.05);
        CHECK(v.exact >= -1.0);
        CHECK(v.exact <= 1.0);
        CHECK(v.gaussian > 0.0);
        CHECK(v.gaussian <= 1.0);
    }
}
