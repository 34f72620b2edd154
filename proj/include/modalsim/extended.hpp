// extended.hpp — quadruple-precision refinement of the leading eigenvalues of a
// real symmetric matrix.
//
// Geometric spectra such as p_n = p0 (1-p0)^n fall below 1e-13 within ten
// levels when p0 is close to one. A double-precision eigensolver resolves such
// eigenvalues only to about eps * ||rho||, i.e. with O(1e-3..1e-5) relative
// error. The matrix is therefore assembled in __float128 and the double
// eigenvectors are used as a starting subspace for a few rounds of subspace
// iteration followed by a Rayleigh-Ritz step, all in quad precision.

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace modalsim::linalg {

using quad = __float128;

class ExtendedSymmetricMatrix {
public:
    explicit ExtendedSymmetricMatrix(int n);

    int size() const noexcept { return n_; }
    quad operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    // Sets both (i, j) and (j, i).
    void set(int i, int j, quad value);
    void scale(quad factor);
    quad trace() const;
    Eigen::MatrixXd to_double() const;

private:
    int n_;
    std::vector<quad> data_;
};

struct RefinedSpectrum {
    Eigen::VectorXd eigenvalues;   // descending, rounded from quad
    int subspace_dim{0};
    int iterations{0};
    double max_residual{0.0};      // max_k ||M q_k - lambda_k q_k|| over the returned pairs
};

// Refines the n_levels largest eigenvalues. `seeds` holds (at least) the
// leading double-precision eigenvectors as columns; extra columns enlarge the
// subspace and speed up convergence.
RefinedSpectrum refine_leading_eigenvalues(const ExtendedSymmetricMatrix& m, const Eigen::MatrixXd& seeds,
                                           int n_levels, int iterations = 3);

}  // namespace modalsim::linalg
