// linalg.hpp — bipartite states, reduced density matrices, Hermitian
// eigendecomposition with a deterministic ordering/phase convention, and the
// Schmidt decomposition.
//
// Joint-space convention: |i>_A (x) |j>_A' has joint index i * dim_b + j.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

namespace modalsim::linalg {

using cplx = std::complex<double>;

inline constexpr double kNormTolerance = 1e-8;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr double kDefaultDegeneracyTolerance = 1e-9;

enum class Side { A, APrime };

// --------------------------------------------------------------------------
// Containers
// --------------------------------------------------------------------------

class BipartiteState {
public:
    // Amplitude matrix of shape dim_a x dim_b. The norm is not forced to one
    // here; operations that need a normalized state check it themselves.
    explicit BipartiteState(Eigen::MatrixXcd amplitudes);

    static BipartiteState normalized(Eigen::MatrixXcd amplitudes);
    static BipartiteState product(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);
    static BipartiteState from_joint(const Eigen::VectorXcd& joint, int dim_a, int dim_b);

    int dim_a() const noexcept { return static_cast<int>(amplitudes_.rows()); }
    int dim_b() const noexcept { return static_cast<int>(amplitudes_.cols()); }
    int joint_dim() const noexcept { return dim_a() * dim_b(); }
    const Eigen::MatrixXcd& amplitudes() const noexcept { return amplitudes_; }

    Eigen::VectorXcd joint() const;
    double norm() const { return amplitudes_.norm(); }

    // Throws std::invalid_argument naming `who` when |norm - 1| > kNormTolerance.
    void require_normalized(std::string_view who) const;

private:
    Eigen::MatrixXcd amplitudes_;
};

class DensityMatrix {
public:
    // Validates Hermiticity (max |rho_ij - conj(rho_ji)| <= 1e-12) and unit
    // trace (1e-10), then stores the exactly Hermitian part. Positivity is
    // checked by eigen_decompose, which has the spectrum at hand.
    explicit DensityMatrix(Eigen::MatrixXcd entries);

    int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
    double trace() const { return entries_.trace().real(); }

private:
    Eigen::MatrixXcd entries_;
};

struct SpectralDecomposition {
    Eigen::VectorXd probabilities;   // descending
    Eigen::MatrixXcd vectors;        // orthonormal columns, phase-fixed
    double degeneracy_tolerance{kDefaultDegeneracyTolerance};
    // Index groups (size >= 2) whose neighbouring eigenvalues differ by less
    // than degeneracy_tolerance. Vectors inside a cluster are not canonical.
    std::vector<std::vector<int>> degenerate_clusters;

    int size() const noexcept { return static_cast<int>(probabilities.size()); }
    bool is_degenerate(int index) const;
    Eigen::MatrixXcd reconstruct() const;
};

struct SchmidtDecomposition {
    Eigen::VectorXd coefficients;    // sqrt(p_i), descending
    Eigen::MatrixXcd left;           // dim_a x N, |psi_i>
    Eigen::MatrixXcd right;          // dim_b x N, |psi'_i>
    double degeneracy_tolerance{kDefaultDegeneracyTolerance};
    std::vector<std::vector<int>> degenerate_clusters;

    int size() const noexcept { return static_cast<int>(coefficients.size()); }
    int dim_a() const noexcept { return static_cast<int>(left.rows()); }
    int dim_b() const noexcept { return static_cast<int>(right.rows()); }
    Eigen::VectorXd probabilities() const { return coefficients.array().square(); }

    // |Psi_i> = |psi_i> (x) |psi'_i> in the joint space.
    Eigen::VectorXcd branch(int i) const;
    Eigen::MatrixXcd reconstruct_amplitudes() const;
};

// --------------------------------------------------------------------------
// Operations
// --------------------------------------------------------------------------

DensityMatrix reduced_density_matrix(const BipartiteState& state, Side side);

SpectralDecomposition eigen_decompose(const DensityMatrix& rho,
                                      double degeneracy_tolerance = kDefaultDegeneracyTolerance);

// Same ordering and phase rules for any Hermitian matrix (no trace or
// positivity requirement). Used for R^(j) blocks and 2x2 crossover subspaces.
SpectralDecomposition eigen_decompose_hermitian(const Eigen::MatrixXcd& h,
                                                double degeneracy_tolerance = kDefaultDegeneracyTolerance);

SchmidtDecomposition schmidt_decompose(const BipartiteState& state,
                                       double degeneracy_tolerance = kDefaultDegeneracyTolerance);

BipartiteState apply_unitary(const BipartiteState& state, const Eigen::MatrixXcd& u);

// --------------------------------------------------------------------------
// Helpers
// --------------------------------------------------------------------------

// Largest-magnitude entry made real and positive (first index on ties).
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v);

double unitarity_defect(const Eigen::MatrixXcd& u);
double hermiticity_defect(const Eigen::MatrixXcd& h);

// U_A (x) U_B on the joint space.
Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// A unitary mapping unit vector `from` onto unit vector `to`: a plane rotation
// in span{from, to} times the global phase of <from|to>, identity elsewhere
// up to that phase.
Eigen::MatrixXcd rotation_between(const Eigen::VectorXcd& from, const Eigen::VectorXcd& to);

Eigen::MatrixXcd random_unitary(int dim, unsigned long long seed);

}  // namespace modalsim::linalg
