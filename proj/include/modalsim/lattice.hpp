// lattice.hpp — coarse-grained particle models on a one-dimensional lattice:
// the Gaussian decoherence kernel, localization diagnostics, coarse-grained
// interval probabilities and the spin-bath environment.

#pragma once

#include "modalsim/linalg.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace modalsim::lattice {

// --------------------------------------------------------------------------
// Grid and wave functions
// --------------------------------------------------------------------------

struct LatticeGrid {
    double epsilon{1.0};
    int n_sites{1};
    double origin{0.0};

    LatticeGrid() = default;
    LatticeGrid(double epsilon, int n_sites, double origin);

    // n_sites midpoints covering [-half_width, half_width].
    static LatticeGrid centered(double half_width, int n_sites);
    // n_sites midpoints covering [left, left + width].
    static LatticeGrid midpoints(double left, double width, int n_sites);

    double x(int j) const noexcept { return origin + j * epsilon; }
    double span() const noexcept { return n_sites * epsilon; }
};

class LatticeWaveFunction {
public:
    // Requires epsilon * sum |psi_j|^2 = 1 within 1e-10.
    LatticeWaveFunction(LatticeGrid grid, Eigen::VectorXcd amplitudes);

    // Samples `profile` on the grid and rescales to unit lattice norm.
    static LatticeWaveFunction from_profile(const LatticeGrid& grid,
                                            const std::function<std::complex<double>(double)>& profile);
    // psi(x) ~ exp(-(x - center)^2 / (4 sigma^2)), so |psi|^2 has standard deviation sigma.
    static LatticeWaveFunction gaussian(const LatticeGrid& grid, double center, double sigma);
    static LatticeWaveFunction uniform(const LatticeGrid& grid);

    const LatticeGrid& grid() const noexcept { return grid_; }
    const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    // epsilon * |psi(x_j)|^2 for every site.
    Eigen::VectorXd site_probabilities() const;

private:
    LatticeGrid grid_;
    Eigen::VectorXcd amplitudes_;
};

// --------------------------------------------------------------------------
// Decoherence kernels
// --------------------------------------------------------------------------

// rho_jk = eps psi_j conj(psi_k) exp(-(x_j - x_k)^2 / ell^2). The diagonal is
// left untouched, so the trace is one without renormalization.
linalg::DensityMatrix gaussian_decohered_rho(const LatticeWaveFunction& psi, double ell);

// Square-well boundary kernel for a particle confined to [well_left, well_left + width]:
//   D(x, y) = sum_n [exp(-a (x - y - 2nL)^2) - exp(-a (x + y - 2nL)^2)]
// (coordinates relative to the left wall), truncated once the dropped image
// term falls below `dropped_tolerance`; the result is trace-normalized.
struct ImageSumRho {
    linalg::DensityMatrix rho;
    int n_images;
};
ImageSumRho image_sum_rho(const LatticeWaveFunction& psi, double a, double well_left, double width,
                          double dropped_tolerance = 1e-14);

// --------------------------------------------------------------------------
// Coherence length
// --------------------------------------------------------------------------

// ell = prefactor * t^{-1/2}.
double coherence_length(double t, double ell_prefactor);

struct ClampedLength {
    double ell;
    bool clamped;
    std::string warning;  // empty unless clamped
};
// Same law, floored at ell_min (the scale below which the decoherence model
// is not trusted, e.g. the thermal de Broglie wavelength).
ClampedLength coherence_length_clamped(double t, double ell_prefactor, double ell_min);

// --------------------------------------------------------------------------
// Localization and coarse graining
// --------------------------------------------------------------------------

// epsilon / sum_j |v_j|^4 for the unit-normalized vector (inverse
// participation ratio expressed as a length).
double localization_length(const Eigen::VectorXcd& v, double epsilon);

// p_j = eps * sum over block j of |psi|^2; the last block is padded with
// zero-amplitude sites when `block` does not divide n_sites.
Eigen::VectorXd coarse_grained_probabilities(const LatticeWaveFunction& psi, int block);

// --------------------------------------------------------------------------
// Spin bath
// --------------------------------------------------------------------------

class SpinBath {
public:
    explicit SpinBath(Eigen::VectorXd couplings);
    // N couplings drawn uniformly from [lo, hi] with a seeded mt19937_64.
    static SpinBath uniform(int n, double lo, double hi, unsigned long long seed);

    int size() const noexcept { return static_cast<int>(couplings_.size()); }
    const Eigen::VectorXd& couplings() const noexcept { return couplings_; }
    double lambda_sq() const noexcept { return lambda_sq_; }

private:
    Eigen::VectorXd couplings_;
    double lambda_sq_;
};

struct SpinBathOverlap {
    double exact;      // prod_a cos(2 g_a dx t)
    double gaussian;   // exp(-N lambda^2 t^2 dx^2)
};
SpinBathOverlap spin_bath_overlap(const SpinBath& bath, double t, double dx);

}  // namespace modalsim::lattice
