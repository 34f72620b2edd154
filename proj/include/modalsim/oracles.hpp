// oracles.hpp — closed-form Schmidt spectra for the square-well and Gaussian
// decoherence models, plus the lattice diagonalizations they are checked
// against.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace modalsim::oracles {

// --------------------------------------------------------------------------
// Square well
// --------------------------------------------------------------------------

// Candidate groupings of the square-well exponent, p_n ~ exp(-E(n)):
//   Literal          E = (n / (2 a L))^2
//   ProductGrouping  E = (n a L / 2)^2
//   PoissonResummed  E = pi^2 n^2 / (4 a L^2)
// The Poisson-resummed reading is the one the lattice cross-check selects.
enum class SquareWellReading { Literal, ProductGrouping, PoissonResummed };

inline constexpr SquareWellReading kSelectedSquareWellReading = SquareWellReading::PoissonResummed;

std::string to_string(SquareWellReading reading);
double square_well_exponent(SquareWellReading reading, int n, double a, double width);

struct SquareWellOracle {
    double a{1.0};      // decoherence strength (inverse length squared)
    double width{1.0};  // L
    int n_max{20};

    void validate() const;
};

struct SquareWellSpectrum {
    Eigen::VectorXd p;  // p(k) is level n = k + 1, normalized over n = 1..n_max
    SquareWellReading reading{kSelectedSquareWellReading};
    double tail_mass{0.0};  // weight beyond n_max relative to the full sum
    double width{1.0};

    // sqrt(2/L) sin(pi n x / L), zero outside [0, L].
    double eigenfunction(int n, double x) const;
};

// Throws std::invalid_argument naming a sufficient n_max when the tail mass exceeds 1e-10.
SquareWellSpectrum square_well_spectrum(const SquareWellOracle& oracle,
                                        SquareWellReading reading = kSelectedSquareWellReading);

// kT = 2 a / m^2 in natural units.
double square_well_temperature(double a, double mass);

struct SquareWellCrossCheck {
    Eigen::VectorXd numeric;  // top n_levels lattice eigenvalues
    std::vector<SquareWellReading> readings;
    std::vector<double> max_abs_error;  // per reading over the top n_levels
    SquareWellReading selected{kSelectedSquareWellReading};
    int n_images{0};
};

// Diagonalizes the image-sum density matrix of the uniform state on n_sites
// midpoints of [0, L] and scores every candidate reading against it. Readings
// whose own n_max cutoff is insufficient are scored with an enlarged cutoff.
SquareWellCrossCheck cross_check_square_well(const SquareWellOracle& oracle, int n_sites, int n_levels = 20);

// --------------------------------------------------------------------------
// Gaussian packet
// --------------------------------------------------------------------------

struct GaussianOracle {
    double a{0.0};  // kernel strength
    double b{1.0};  // packet psi(x) ~ exp(-b x^2)

    void validate() const;
    double mu() const;  // sqrt(b (b + 2 a))
    double p0() const;  // 2 sqrt(b) / (sqrt(b) + sqrt(2 a + b))
};

// Normalized Hermite functions psi_0..psi_{n_max}(xi) by the three-term recurrence
// psi_0 = pi^{-1/4} e^{-xi^2/2}, psi_{n+1} = sqrt(2/(n+1)) xi psi_n - sqrt(n/(n+1)) psi_{n-1}.
Eigen::VectorXd hermite_functions(int n_max, double xi);

struct GaussianSpectrum {
    Eigen::VectorXd p;  // p_n = p0 (1 - p0)^n, n = 0..n_max
    double mu{1.0};

    // phi_n(x) = (2 mu)^{1/4} psi_n(sqrt(2 mu) x), unit norm on the real line.
    double eigenfunction(int n, double x) const;
    Eigen::VectorXd eigenfunctions(int n_max, double x) const;
};

GaussianSpectrum gaussian_spectrum(const GaussianOracle& oracle, int n_max);

// (1 - p0) / (mu p0).
double gaussian_spread(const GaussianOracle& oracle);

struct GaussianLatticeCheck {
    Eigen::VectorXd numeric;         // leading eigenvalues of the trace-normalized lattice rho
    Eigen::VectorXd oracle;          // p0 (1 - p0)^n
    Eigen::VectorXd relative_error;  // |numeric - oracle| / oracle (absolute where oracle == 0)
    double max_relative_error{0.0};
    bool refined{false};             // quad-precision refinement was needed and applied
    double half_width{0.0};
};

// Discretizes rho(x, y) = psi(x) psi(y) exp(-a (x - y)^2) with psi = exp(-b x^2)
// on n_sites midpoints spanning +-8 standard deviations of psi, diagonalizes it
// and compares levels 0..n_levels-1 with the oracle.
GaussianLatticeCheck gaussian_lattice_spectrum(const GaussianOracle& oracle, int n_sites = 600, int n_levels = 11);

}  // namespace modalsim::oracles
