#include "modalsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace modalsim::linalg {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// True if a should precede b within a degenerate cluster: entry-wise
// comparison of (real, imag), larger first.
bool lex_greater(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a(k).real() != b(k).real()) return a(k).real() > b(k).real();
        if (a(k).imag() != b(k).imag()) return a(k).imag() > b(k).imag();
    }
    return false;
}

std::vector<std::vector<int>> find_clusters(const Eigen::VectorXd& sorted_desc, double tol) {
    std::vector<std::vector<int>> clusters;
    const int n = static_cast<int>(sorted_desc.size());
    int start = 0;
    for (int i = 1; i <= n; ++i) {
        const bool breaks = (i == n) || (sorted_desc(i - 1) - sorted_desc(i) >= tol);
        if (breaks) {
            if (i - start >= 2) {
                std::vector<int> c(i - start);
                std::iota(c.begin(), c.end(), start);
                clusters.push_back(std::move(c));
            }
            start = i;
        }
    }
    return clusters;
}

// Phase angle that fix_phase would remove.
double dominant_phase(const Eigen::VectorXcd& v) {
    const double vmax = v.cwiseAbs().maxCoeff();
    if (vmax == 0.0) return 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (std::abs(v(k)) >= vmax * (1.0 - 1e-10)) return std::arg(v(k));
    }
    return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// BipartiteState
// ---------------------------------------------------------------------------

BipartiteState::BipartiteState(Eigen::MatrixXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.rows() < 1 || amplitudes_.cols() < 1)
        throw std::invalid_argument("BipartiteState: both factor dimensions must be positive");
    if (!amplitudes_.allFinite())
        throw std::invalid_argument("BipartiteState: amplitudes contain non-finite entries");
}

BipartiteState BipartiteState::normalized(Eigen::MatrixXcd amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0)) throw std::invalid_argument("BipartiteState::normalized: zero state");
    amplitudes /= n;
    return BipartiteState(std::move(amplitudes));
}

BipartiteState BipartiteState::product(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return BipartiteState(a * b.transpose());
}

BipartiteState BipartiteState::from_joint(const Eigen::VectorXcd& joint, int dim_a, int dim_b) {
    if (dim_a < 1 || dim_b < 1 || joint.size() != static_cast<Eigen::Index>(dim_a) * dim_b)
        throw std::invalid_argument("BipartiteState::from_joint: size mismatch");
    Eigen::MatrixXcd m(dim_a, dim_b);
    for (int i = 0; i < dim_a; ++i)
        for (int j = 0; j < dim_b; ++j) m(i, j) = joint(static_cast<Eigen::Index>(i) * dim_b + j);
    return BipartiteState(std::move(m));
}

Eigen::VectorXcd BipartiteState::joint() const {
    Eigen::VectorXcd v(joint_dim());
    for (int i = 0; i < dim_a(); ++i)
        for (int j = 0; j < dim_b(); ++j) v(static_cast<Eigen::Index>(i) * dim_b() + j) = amplitudes_(i, j);
    return v;
}

void BipartiteState::require_normalized(std::string_view who) const {
    const double n = norm();
    if (!(std::abs(n - 1.0) <= kNormTolerance)) {
        throw std::invalid_argument(std::string(who) + ": state is not normalized (norm = " + fmt(n) +
                                    ", tolerance " + fmt(kNormTolerance) + ")");
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) {
    if (entries.rows() < 1 || entries.rows() != entries.cols())
        throw std::invalid_argument("DensityMatrix: entries must be a non-empty square matrix");
    if (!entries.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
    const double herm = hermiticity_defect(entries);
    if (herm > kHermitianTolerance)
        throw std::invalid_argument("DensityMatrix: not Hermitian (max |rho_ij - conj(rho_ji)| = " + fmt(herm) + ")");
    const cplx tr = entries.trace();
    if (std::abs(tr - cplx(1.0, 0.0)) > kTraceTolerance)
        throw std::invalid_argument("DensityMatrix: trace " + fmt(tr.real()) + " deviates from 1");
    entries_ = 0.5 * (entries + entries.adjoint());
}

// ---------------------------------------------------------------------------
// Decomposition results
// ---------------------------------------------------------------------------

bool SpectralDecomposition::is_degenerate(int index) const {
    for (const auto& c : degenerate_clusters)
        if (std::find(c.begin(), c.end(), index) != c.end()) return true;
    return false;
}

Eigen::MatrixXcd SpectralDecomposition::reconstruct() const {
    return vectors * probabilities.cast<cplx>().asDiagonal() * vectors.adjoint();
}

Eigen::VectorXcd SchmidtDecomposition::branch(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("SchmidtDecomposition::branch: index out of range");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(dim_a()) * dim_b());
    for (int a = 0; a < dim_a(); ++a)
        for (int b = 0; b < dim_b(); ++b)
            v(static_cast<Eigen::Index>(a) * dim_b() + b) = left(a, i) * right(b, i);
    return v;
}

Eigen::MatrixXcd SchmidtDecomposition::reconstruct_amplitudes() const {
    return left * coefficients.cast<cplx>().asDiagonal() * right.transpose();
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

DensityMatrix reduced_density_matrix(const BipartiteState& state, Side side) {
    state.require_normalized("reduced_density_matrix");
    const double n2 = state.amplitudes().squaredNorm();
    const Eigen::MatrixXcd& psi = state.amplitudes();
    Eigen::MatrixXcd rho = (side == Side::A) ? Eigen::MatrixXcd(psi * psi.adjoint())
                                             : Eigen::MatrixXcd(psi.transpose() * psi.conjugate());
    rho /= n2;
    return DensityMatrix(std::move(rho));
}

SpectralDecomposition eigen_decompose_hermitian(const Eigen::MatrixXcd& h, double degeneracy_tolerance) {
    if (h.rows() < 1 || h.rows() != h.cols())
        throw std::invalid_argument("eigen_decompose: matrix must be non-empty and square");
    if (!(degeneracy_tolerance >= 0.0))
        throw std::invalid_argument("eigen_decompose: degeneracy_tolerance must be non-negative");
    const double herm = hermiticity_defect(h);
    if (herm > kHermitianTolerance)
        throw std::invalid_argument("eigen_decompose: matrix is not Hermitian (defect " + fmt(herm) + ")");

    const Eigen::Index n = h.rows();
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
    if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::MatrixXd r = 0.5 * (h.real() + h.real().transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigen_decompose: solver did not converge");
        values = es.eigenvalues();
        vectors = es.eigenvectors().cast<cplx>();
    } else {
        Eigen::MatrixXcd c = 0.5 * (h + h.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigen_decompose: solver did not converge");
        values = es.eigenvalues();
        vectors = es.eigenvectors();
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values(a) > values(b); });

    SpectralDecomposition out;
    out.degeneracy_tolerance = degeneracy_tolerance;
    out.probabilities.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.probabilities(k) = values(order[k]);
        out.vectors.col(k) = vectors.col(order[k]);
        fix_phase(out.vectors.col(k));
    }
    out.degenerate_clusters = find_clusters(out.probabilities, degeneracy_tolerance);

    // Deterministic order inside clusters: lexicographic on phase-fixed vectors.
    for (const auto& cluster : out.degenerate_clusters) {
        std::vector<int> idx(cluster);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return lex_greater(out.vectors.col(a), out.vectors.col(b));
        });
        Eigen::VectorXd p(static_cast<Eigen::Index>(idx.size()));
        Eigen::MatrixXcd v(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            p(k) = out.probabilities(idx[k]);
            v.col(k) = out.vectors.col(idx[k]);
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.probabilities(cluster[k]) = p(k);
            out.vectors.col(cluster[k]) = v.col(k);
        }
    }
    return out;
}

SpectralDecomposition eigen_decompose(const DensityMatrix& rho, double degeneracy_tolerance) {
    SpectralDecomposition out = eigen_decompose_hermitian(rho.entries(), degeneracy_tolerance);
    const double pmin = out.probabilities.minCoeff();
    if (pmin < -kPsdTolerance)
        throw std::invalid_argument("eigen_decompose: density matrix is not positive semidefinite (eigenvalue " +
                                    fmt(pmin) + ")");
    return out;
}

SchmidtDecomposition schmidt_decompose(const BipartiteState& state, double degeneracy_tolerance) {
    state.require_normalized("schmidt_decompose");
    const Eigen::MatrixXcd psi = state.amplitudes() / state.norm();
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index n = svd.singularValues().size();

    SchmidtDecomposition out;
    out.degeneracy_tolerance = degeneracy_tolerance;
    out.coefficients = svd.singularValues();
    out.left = svd.matrixU().leftCols(n);
    out.right = svd.matrixV().leftCols(n).conjugate();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double phi = dominant_phase(out.left.col(k));
        out.left.col(k) *= std::polar(1.0, -phi);
        out.right.col(k) *= std::polar(1.0, phi);
    }
    out.degenerate_clusters = find_clusters(out.probabilities(), degeneracy_tolerance);
    return out;
}

BipartiteState apply_unitary(const BipartiteState& state, const Eigen::MatrixXcd& u) {
    if (u.rows() != state.joint_dim() || u.cols() != state.joint_dim())
        throw std::invalid_argument("apply_unitary: operator dimension " + std::to_string(u.rows()) + "x" +
                                    std::to_string(u.cols()) + " does not match joint dimension " +
                                    std::to_string(state.joint_dim()));
    const double defect = unitarity_defect(u);
    if (defect > kUnitaryTolerance)
        throw std::invalid_argument("apply_unitary: operator is not unitary (max |U*U - I| = " + fmt(defect) + ")");
    return BipartiteState::from_joint(u * state.joint(), state.dim_a(), state.dim_b());
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    const double phi = dominant_phase(v);
    if (phi != 0.0) v *= std::polar(1.0, -phi);
    // Remove the rounding residue on the pivot entry so it is exactly real.
    const double vmax = v.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (std::abs(v(k)) >= vmax * (1.0 - 1e-10)) {
            v(k) = cplx(std::abs(v(k)), 0.0);
            break;
        }
    }
}

double unitarity_defect(const Eigen::MatrixXcd& u) {
    if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

double hermiticity_defect(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXcd rotation_between(const Eigen::VectorXcd& from, const Eigen::VectorXcd& to) {
    if (from.size() != to.size() || from.size() == 0)
        throw std::invalid_argument("rotation_between: vectors must be non-empty and equal length");
    if (std::abs(from.norm() - 1.0) > kNormTolerance || std::abs(to.norm() - 1.0) > kNormTolerance)
        throw std::invalid_argument("rotation_between: vectors must be normalized");
    const Eigen::Index n = from.size();
    const cplx c = from.dot(to);  // <from|to>
    const double mag = std::abs(c);
    const cplx phase = (mag > 0.0) ? c / mag : cplx(1.0, 0.0);
    const Eigen::VectorXcd target = std::conj(phase) * to;  // <from|target> = |c|
    Eigen::VectorXcd w = target - mag * from;
    const double s = w.norm();
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, n);
    if (s > 1e-15) {
        w /= s;
        u += (mag - 1.0) * (from * from.adjoint() + w * w.adjoint()) + s * (w * from.adjoint() - from * w.adjoint());
    }
    return phase * u;
}

Eigen::MatrixXcd random_unitary(int dim, unsigned long long seed) {
    if (dim < 1) throw std::invalid_argument("random_unitary: dimension must be positive");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXcd z(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) z(i, j) = cplx(normal(gen), normal(gen));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR();
    for (int k = 0; k < dim; ++k) {
        const double mag = std::abs(r(k, k));
        if (mag > 0.0) q.col(k) *= r(k, k) / mag;
    }
    return q;
}

}  // namespace modalsim::linalg
