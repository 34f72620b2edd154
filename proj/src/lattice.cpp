#include "modalsim/lattice.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace modalsim::lattice {

using linalg::cplx;

namespace {

constexpr double kLatticeNormTolerance = 1e-10;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid and wave functions
// ---------------------------------------------------------------------------

LatticeGrid::LatticeGrid(double epsilon_, int n_sites_, double origin_)
    : epsilon(epsilon_), n_sites(n_sites_), origin(origin_) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("LatticeGrid: epsilon must be positive and finite");
    if (n_sites < 1) throw std::invalid_argument("LatticeGrid: n_sites must be positive");
    if (!std::isfinite(origin)) throw std::invalid_argument("LatticeGrid: origin must be finite");
}

LatticeGrid LatticeGrid::centered(double half_width, int n_sites) {
    if (!(half_width > 0.0)) throw std::invalid_argument("LatticeGrid::centered: half_width must be positive");
    if (n_sites < 1) throw std::invalid_argument("LatticeGrid::centered: n_sites must be positive");
    const double eps = 2.0 * half_width / n_sites;
    return LatticeGrid(eps, n_sites, -half_width + 0.5 * eps);
}

LatticeGrid LatticeGrid::midpoints(double left, double width, int n_sites) {
    if (!(width > 0.0)) throw std::invalid_argument("LatticeGrid::midpoints: width must be positive");
    if (n_sites < 1) throw std::invalid_argument("LatticeGrid::midpoints: n_sites must be positive");
    const double eps = width / n_sites;
    return LatticeGrid(eps, n_sites, left + 0.5 * eps);
}

LatticeWaveFunction::LatticeWaveFunction(LatticeGrid grid, Eigen::VectorXcd amplitudes)
    : grid_(grid), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != grid_.n_sites)
        throw std::invalid_argument("LatticeWaveFunction: amplitude count does not match n_sites");
    const double norm = grid_.epsilon * amplitudes_.squaredNorm();
    if (!(std::abs(norm - 1.0) <= kLatticeNormTolerance))
        throw std::invalid_argument("LatticeWaveFunction: eps * sum |psi|^2 = " + fmt(norm) + " (expected 1)");
}

LatticeWaveFunction LatticeWaveFunction::from_profile(const LatticeGrid& grid,
                                                      const std::function<cplx(double)>& profile) {
    Eigen::VectorXcd amp(grid.n_sites);
    for (int j = 0; j < grid.n_sites; ++j) amp(j) = profile(grid.x(j));
    const double norm = std::sqrt(grid.epsilon * amp.squaredNorm());
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw std::invalid_argument("LatticeWaveFunction::from_profile: profile has zero or non-finite norm");
    amp /= norm;
    return LatticeWaveFunction(grid, std::move(amp));
}

LatticeWaveFunction LatticeWaveFunction::gaussian(const LatticeGrid& grid, double center, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("LatticeWaveFunction::gaussian: sigma must be positive");
    return from_profile(grid, [=](double x) {
        const double u = (x - center) / sigma;
        return cplx(std::exp(-0.25 * u * u), 0.0);
    });
}

LatticeWaveFunction LatticeWaveFunction::uniform(const LatticeGrid& grid) {
    return from_profile(grid, [](double) { return cplx(1.0, 0.0); });
}

Eigen::VectorXd LatticeWaveFunction::site_probabilities() const {
    return grid_.epsilon * amplitudes_.cwiseAbs2();
}

// ---------------------------------------------------------------------------
// Decoherence kernels
// ---------------------------------------------------------------------------

linalg::DensityMatrix gaussian_decohered_rho(const LatticeWaveFunction& psi, double ell) {
    if (!(ell > 0.0)) throw std::invalid_argument("gaussian_decohered_rho: ell must be positive (got " + fmt(ell) + ")");
    const LatticeGrid& g = psi.grid();
    const Eigen::VectorXcd& a = psi.amplitudes();
    const int n = g.n_sites;
    const double inv_ell2 = 1.0 / (ell * ell);
    Eigen::MatrixXcd rho(n, n);
    for (int j = 0; j < n; ++j) {
        rho(j, j) = cplx(g.epsilon * std::norm(a(j)), 0.0);
        for (int k = j + 1; k < n; ++k) {
            const double d = (j - k) * g.epsilon;
            const cplx v = g.epsilon * a(j) * std::conj(a(k)) * std::exp(-d * d * inv_ell2);
            rho(j, k) = v;
            rho(k, j) = std::conj(v);
        }
    }
    return linalg::DensityMatrix(std::move(rho));
}

ImageSumRho image_sum_rho(const LatticeWaveFunction& psi, double a, double well_left, double width,
                          double dropped_tolerance) {
    if (!(a > 0.0)) throw std::invalid_argument("image_sum_rho: a must be positive");
    if (!(width > 0.0)) throw std::invalid_argument("image_sum_rho: well width must be positive");
    if (!(dropped_tolerance > 0.0 && dropped_tolerance < 1.0))
        throw std::invalid_argument("image_sum_rho: dropped_tolerance must lie in (0, 1)");
    const LatticeGrid& g = psi.grid();
    const int n = g.n_sites;
    for (int j = 0; j < n; ++j) {
        const double u = g.x(j) - well_left;
        if (u < 0.0 || u > width) throw std::invalid_argument("image_sum_rho: grid extends outside the well");
    }

    // For x, y in [0, L]: x - y lies in [-L, L], so the direct image m is at
    // least (2|m| - 1) L away; x + y lies in [0, 2L], so the mirror images
    // m = 0 and m = 1 are both O(1) and the mirror image m is at least
    // 2 min(|m|, |m - 1|) L away. Summing direct images over |m| <= n_img and
    // mirror images over -n_img <= m <= n_img + 1 leaves out terms bounded by
    // exp(-a ((2 n_img + 1) L)^2).
    const double cutoff = -std::log(dropped_tolerance);
    int n_img = 0;
    while (a * std::pow((2.0 * n_img + 1.0) * width, 2) <= cutoff) ++n_img;

    auto kernel = [&](double x, double y) {
        double s = 0.0;
        for (int m = -n_img; m <= n_img; ++m) {
            const double d1 = x - y - 2.0 * m * width;
            s += std::exp(-a * d1 * d1);
        }
        for (int m = -n_img; m <= n_img + 1; ++m) {
            const double d2 = x + y - 2.0 * m * width;
            s -= std::exp(-a * d2 * d2);
        }
        return s;
    };

    const Eigen::VectorXcd& amp = psi.amplitudes();
    Eigen::MatrixXcd rho(n, n);
    for (int j = 0; j < n; ++j) {
        const double xj = g.x(j) - well_left;
        for (int k = j; k < n; ++k) {
            const double xk = g.x(k) - well_left;
            const cplx v = g.epsilon * amp(j) * std::conj(amp(k)) * kernel(xj, xk);
            rho(j, k) = v;
            rho(k, j) = std::conj(v);
        }
        rho(j, j) = cplx(rho(j, j).real(), 0.0);
    }
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw std::invalid_argument("image_sum_rho: kernel trace is not positive");
    rho /= tr;
    return ImageSumRho{linalg::DensityMatrix(std::move(rho)), n_img};
}

// ---------------------------------------------------------------------------
// Coherence length
// ---------------------------------------------------------------------------

double coherence_length(double t, double ell_prefactor) {
    if (!(t > 0.0)) throw std::invalid_argument("coherence_length: t must be positive (got " + fmt(t) + ")");
    return ell_prefactor / std::sqrt(t);
}

ClampedLength coherence_length_clamped(double t, double ell_prefactor, double ell_min) {
    const double ell = coherence_length(t, ell_prefactor);
    if (ell_min > 0.0 && ell < ell_min) {
        return {ell_min, true,
                "coherence length " + fmt(ell) + " at t = " + fmt(t) + " is below the floor " + fmt(ell_min) +
                    "; clamped"};
    }
    return {ell, false, {}};
}

// ---------------------------------------------------------------------------
// Localization and coarse graining
// ---------------------------------------------------------------------------

double localization_length(const Eigen::VectorXcd& v, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("localization_length: epsilon must be positive");
    const double n2 = v.squaredNorm();
    if (!(n2 > 0.0)) throw std::invalid_argument("localization_length: zero vector");
    const double ipr = v.cwiseAbs2().array().square().sum() / (n2 * n2);
    return epsilon / ipr;
}

Eigen::VectorXd coarse_grained_probabilities(const LatticeWaveFunction& psi, int block) {
    if (block < 1) throw std::invalid_argument("coarse_grained_probabilities: block must be positive");
    const int n = psi.grid().n_sites;
    const int n_blocks = (n + block - 1) / block;
    const Eigen::VectorXd site = psi.site_probabilities();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_blocks);
    for (int j = 0; j < n; ++j) p(j / block) += site(j);
    return p;
}

// ---------------------------------------------------------------------------
// Spin bath
// ---------------------------------------------------------------------------

SpinBath::SpinBath(Eigen::VectorXd couplings) : couplings_(std::move(couplings)) {
    if (couplings_.size() < 1) throw std::invalid_argument("SpinBath: at least one coupling is required");
    if (!couplings_.allFinite()) throw std::invalid_argument("SpinBath: couplings must be finite");
    lambda_sq_ = 2.0 * couplings_.squaredNorm() / static_cast<double>(couplings_.size());
}

SpinBath SpinBath::uniform(int n, double lo, double hi, unsigned long long seed) {
    if (n < 1) throw std::invalid_argument("SpinBath::uniform: n must be positive");
    if (!(hi >= lo)) throw std::invalid_argument("SpinBath::uniform: need lo <= hi");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd g(n);
    for (int a = 0; a < n; ++a) g(a) = dist(gen);
    return SpinBath(std::move(g));
}

SpinBathOverlap spin_bath_overlap(const SpinBath& bath, double t, double dx) {
    double exact = 1.0;
    for (Eigen::Index a = 0; a < bath.couplings().size(); ++a) exact *= std::cos(2.0 * bath.couplings()(a) * dx * t);
    const double approx = std::exp(-bath.size() * bath.lambda_sq() * t * t * dx * dx);
    return {exact, approx};
}

}  // namespace modalsim::lattice
