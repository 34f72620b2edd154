#include "modalsim/oracles.hpp"

#include "modalsim/extended.hpp"
#include "modalsim/lattice.hpp"
#include "modalsim/linalg.hpp"

extern "C" {
#include <quadmath.h>
}

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace modalsim::oracles {

using linalg::quad;

namespace {

constexpr double kTailTolerance = 1e-10;

// Unnormalized tail beyond n_max and the total, summed until terms are negligible.
struct TailSums {
    double head{0.0};
    double tail{0.0};
    int suggested_n_max{1};
};

TailSums tail_sums(SquareWellReading reading, double a, double width, int n_max) {
    TailSums s;
    // Shift every exponent by E(1) so the leading term is one.
    const double e1 = square_well_exponent(reading, 1, a, width);
    std::vector<double> terms;
    constexpr int kMaxTerms = 2000000;
    for (int n = 1;; ++n) {
        const double t = std::exp(-(square_well_exponent(reading, n, a, width) - e1));
        terms.push_back(t);
        if (n > n_max && t < 1e-18) break;
        if (n >= kMaxTerms)
            throw std::invalid_argument("square_well_spectrum: spectrum of reading '" + to_string(reading) +
                                        "' does not decay within " + std::to_string(kMaxTerms) + " levels");
    }
    double total = 0.0;
    for (double t : terms) total += t;
    for (std::size_t k = 0; k < terms.size(); ++k) (static_cast<int>(k) < n_max ? s.head : s.tail) += terms[k];
    double acc = total;
    s.suggested_n_max = static_cast<int>(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        acc -= terms[k];
        if (acc / total <= kTailTolerance) {
            s.suggested_n_max = static_cast<int>(k) + 1;
            break;
        }
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Square well
// ---------------------------------------------------------------------------

std::string to_string(SquareWellReading reading) {
    switch (reading) {
        case SquareWellReading::Literal: return "literal (n/(2aL))^2";
        case SquareWellReading::ProductGrouping: return "product (n a L/2)^2";
        case SquareWellReading::PoissonResummed: return "poisson pi^2 n^2/(4 a L^2)";
    }
    return "unknown";
}

double square_well_exponent(SquareWellReading reading, int n, double a, double width) {
    switch (reading) {
        case SquareWellReading::Literal: {
            const double r = n / (2.0 * a * width);
            return r * r;
        }
        case SquareWellReading::ProductGrouping: {
            const double r = n * a * width / 2.0;
            return r * r;
        }
        case SquareWellReading::PoissonResummed:
            return std::numbers::pi * std::numbers::pi * n * n / (4.0 * a * width * width);
    }
    throw std::invalid_argument("square_well_exponent: unknown reading");
}

void SquareWellOracle::validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("SquareWellOracle: a must be positive");
    if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("SquareWellOracle: L must be positive");
    if (n_max < 1) throw std::invalid_argument("SquareWellOracle: n_max must be >= 1");
}

double SquareWellSpectrum::eigenfunction(int n, double x) const {
    if (n < 1) throw std::invalid_argument("SquareWellSpectrum::eigenfunction: n must be >= 1");
    if (x < 0.0 || x > width) return 0.0;
    return std::sqrt(2.0 / width) * std::sin(std::numbers::pi * n * x / width);
}

SquareWellSpectrum square_well_spectrum(const SquareWellOracle& oracle, SquareWellReading reading) {
    oracle.validate();
    const TailSums sums = tail_sums(reading, oracle.a, oracle.width, oracle.n_max);
    SquareWellSpectrum s;
    s.reading = reading;
    s.width = oracle.width;
    s.tail_mass = sums.tail / (sums.head + sums.tail);
    if (s.tail_mass > kTailTolerance)
        throw std::invalid_argument("square_well_spectrum: n_max = " + std::to_string(oracle.n_max) +
                                    " leaves tail mass " + std::to_string(s.tail_mass) +
                                    " > 1e-10; use n_max >= " + std::to_string(sums.suggested_n_max));
    const double e1 = square_well_exponent(reading, 1, oracle.a, oracle.width);
    s.p.resize(oracle.n_max);
    for (int n = 1; n <= oracle.n_max; ++n)
        s.p(n - 1) = std::exp(-(square_well_exponent(reading, n, oracle.a, oracle.width) - e1));
    s.p /= s.p.sum();
    return s;
}

double square_well_temperature(double a, double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("square_well_temperature: mass must be positive");
    return 2.0 * a / (mass * mass);
}

SquareWellCrossCheck cross_check_square_well(const SquareWellOracle& oracle, int n_sites, int n_levels) {
    oracle.validate();
    if (n_levels < 1 || n_levels > n_sites)
        throw std::invalid_argument("cross_check_square_well: need 1 <= n_levels <= n_sites");
    const auto grid = lattice::LatticeGrid::midpoints(0.0, oracle.width, n_sites);
    const auto psi = lattice::LatticeWaveFunction::uniform(grid);
    const auto image = lattice::image_sum_rho(psi, oracle.a, 0.0, oracle.width);
    const auto spec = linalg::eigen_decompose(image.rho);

    SquareWellCrossCheck out;
    out.n_images = image.n_images;
    out.numeric = spec.probabilities.head(n_levels);
    double best = std::numeric_limits<double>::infinity();
    for (auto reading : {SquareWellReading::Literal, SquareWellReading::ProductGrouping,
                         SquareWellReading::PoissonResummed}) {
        SquareWellOracle o = oracle;
        o.n_max = std::max(o.n_max, n_levels);
        SquareWellSpectrum s;
        try {
            s = square_well_spectrum(o, reading);
        } catch (const std::invalid_argument&) {
            o.n_max = tail_sums(reading, o.a, o.width, o.n_max).suggested_n_max;
            s = square_well_spectrum(o, reading);
        }
        Eigen::VectorXd head = Eigen::VectorXd::Zero(n_levels);
        const int m = std::min<int>(n_levels, static_cast<int>(s.p.size()));
        head.head(m) = s.p.head(m);
        const double err = (head - out.numeric).cwiseAbs().maxCoeff();
        out.readings.push_back(reading);
        out.max_abs_error.push_back(err);
        if (err < best) {
            best = err;
            out.selected = reading;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian packet
// ---------------------------------------------------------------------------

void GaussianOracle::validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("GaussianOracle: a must be >= 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("GaussianOracle: b must be positive");
}

double GaussianOracle::mu() const { return std::sqrt(b * (b + 2.0 * a)); }

double GaussianOracle::p0() const { return 2.0 * std::sqrt(b) / (std::sqrt(b) + std::sqrt(2.0 * a + b)); }

Eigen::VectorXd hermite_functions(int n_max, double xi) {
    if (n_max < 0) throw std::invalid_argument("hermite_functions: n_max must be >= 0");
    Eigen::VectorXd h(n_max + 1);
    h(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
    if (n_max >= 1) h(1) = std::sqrt(2.0) * xi * h(0);
    for (int n = 1; n < n_max; ++n)
        h(n + 1) = std::sqrt(2.0 / (n + 1)) * xi * h(n) - std::sqrt(static_cast<double>(n) / (n + 1)) * h(n - 1);
    return h;
}

double GaussianSpectrum::eigenfunction(int n, double x) const { return eigenfunctions(n, x)(n); }

Eigen::VectorXd GaussianSpectrum::eigenfunctions(int n_max, double x) const {
    return std::pow(2.0 * mu, 0.25) * hermite_functions(n_max, std::sqrt(2.0 * mu) * x);
}

GaussianSpectrum gaussian_spectrum(const GaussianOracle& oracle, int n_max) {
    oracle.validate();
    if (n_max < 0) throw std::invalid_argument("gaussian_spectrum: n_max must be >= 0");
    GaussianSpectrum s;
    s.mu = oracle.mu();
    const double p0 = oracle.p0();
    s.p.resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n) s.p(n) = p0 * std::pow(1.0 - p0, n);
    return s;
}

double gaussian_spread(const GaussianOracle& oracle) {
    oracle.validate();
    const double p0 = oracle.p0();
    return (1.0 - p0) / (oracle.mu() * p0);
}

GaussianLatticeCheck gaussian_lattice_spectrum(const GaussianOracle& oracle, int n_sites, int n_levels) {
    oracle.validate();
    if (n_levels < 1 || n_levels > n_sites)
        throw std::invalid_argument("gaussian_lattice_spectrum: need 1 <= n_levels <= n_sites");

    // psi = exp(-b x^2) has standard deviation 1/sqrt(2b).
    GaussianLatticeCheck out;
    out.half_width = 8.0 / std::sqrt(2.0 * oracle.b);
    const quad hw = static_cast<quad>(out.half_width);
    const quad h = 2 * hw / n_sites;
    const quad qa = oracle.a, qb = oracle.b;

    std::vector<quad> x(n_sites), psi(n_sites);
    for (int i = 0; i < n_sites; ++i) {
        x[i] = -hw + (i + static_cast<quad>(0.5)) * h;
        psi[i] = expq(-qb * x[i] * x[i]);
    }
    linalg::ExtendedSymmetricMatrix m(n_sites);
    for (int i = 0; i < n_sites; ++i)
        for (int j = i; j < n_sites; ++j) {
            const quad d = x[i] - x[j];
            m.set(i, j, h * psi[i] * psi[j] * expq(-qa * d * d));
        }
    m.scale(1 / m.trace());

    const Eigen::MatrixXd md = m.to_double();
    const linalg::DensityMatrix rho(md.cast<linalg::cplx>());
    const auto spec = linalg::eigen_decompose(rho);
    out.numeric = spec.probabilities.head(n_levels);

    const auto oracle_spec = gaussian_spectrum(oracle, n_levels - 1);
    out.oracle = oracle_spec.p;

    // A double eigensolver resolves eigenvalues only to ~1e-16 absolute; when
    // the smallest requested level is below ~1e-9 that is not enough for 1e-6
    // relative accuracy, so refine in quad precision.
    if (out.numeric(n_levels - 1) < 1e-9) {
        const int k = std::min(n_sites, n_levels + 13);
        const Eigen::MatrixXd seeds = spec.vectors.leftCols(k).real();
        const auto refined = linalg::refine_leading_eigenvalues(m, seeds, n_levels, 3);
        out.numeric = refined.eigenvalues.head(n_levels);
        out.refined = true;
    }

    out.relative_error.resize(n_levels);
    for (int n = 0; n < n_levels; ++n) {
        const double diff = std::abs(out.numeric(n) - out.oracle(n));
        out.relative_error(n) = out.oracle(n) > 0.0 ? diff / out.oracle(n) : diff;
    }
    out.max_relative_error = out.relative_error.maxCoeff();
    return out;
}

}  // namespace modalsim::oracles
