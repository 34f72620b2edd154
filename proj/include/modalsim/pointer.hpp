// pointer.hpp — measurement-device models: pointer families defined by their
// overlap schedules, collapse estimates, the two-level avoided crossing, the
// environment-split block model and imperfect devices.

#pragma once

#include "modalsim/linalg.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace modalsim::pointer {

using linalg::cplx;

// --------------------------------------------------------------------------
// Overlaps in log form
// --------------------------------------------------------------------------

// Overlap value = exp(log_magnitude) * exp(i phase). Values whose exponent
// falls below kUnderflowExponent are exactly zero in linear arithmetic while
// the exponent is kept for reporting.
inline constexpr double kUnderflowExponent = -700.0;

struct LogOverlap {
    double log_magnitude{0.0};
    double phase{0.0};

    static LogOverlap from_value(cplx v);
    cplx value() const;
    bool underflows() const noexcept { return log_magnitude < kUnderflowExponent; }
};

// --------------------------------------------------------------------------
// Pointer families
// --------------------------------------------------------------------------

class PointerFamily {
public:
    // schedule(i, j, t) = <M_i(t)|M_j(t)>; only i < j is queried, the diagonal is 1.
    using Schedule = std::function<LogOverlap(int, int, double)>;

    PointerFamily(int n_outcomes, int embedding_dim, Schedule schedule);

    int n_outcomes() const noexcept { return n_outcomes_; }
    int embedding_dim() const noexcept { return embedding_dim_; }
    LogOverlap log_overlap(int i, int j, double t) const;
    Eigen::MatrixXcd gram(double t) const;

private:
    int n_outcomes_;
    int embedding_dim_;
    Schedule schedule_;
};

// Delta_ij(t) = exp[-(t / t_rise)^2 N (X_i - X_j)^2 / eps^2]: all pointers equal
// the resting state at t = 0 and separate towards the exp(-N X^2/eps^2) floor.
PointerFamily default_pointer_family(const Eigen::VectorXd& positions, double n_constituents, double epsilon,
                                     double t_rise, int embedding_dim = -1);

// Mutually orthogonal pointers at every t.
PointerFamily orthogonal_pointer_family(int n_outcomes, int embedding_dim = -1);

struct RealizedPointers {
    Eigen::MatrixXcd vectors;        // embedding_dim x n_outcomes, column j = |v_j>
    std::vector<int> pivot_order;    // outcome index used at each factorization step
    int rank{0};
    double reconstruction_error{0.0};  // max |V^dagger V - G|
};

// Pivoted Cholesky factorization G = V^dagger V. Pivots on the largest
// remaining diagonal (lowest index on ties) and stops once it is <= tol.
// Throws GramIndefinite (with the minimum eigenvalue) when G is not PSD
// within tol.
RealizedPointers realize_gram(const Eigen::MatrixXcd& gram, int embedding_dim, double tol = 1e-10);
RealizedPointers realize_pointer_states(const PointerFamily& family, double t, double tol = 1e-10);

struct PointerOverlap {
    double exponent;   // -N X^2 / eps^2
    double value;      // exp(exponent), 0 on underflow
};
PointerOverlap pointer_overlap(double n_constituents, double distance, double resolution);

// t_c = T eps / (X sqrt(N)).
double collapse_time(double duration, double epsilon, double distance, double n_constituents);

// rho = sum_j p_j |M_j(t)><M_j(t)| in the realized pointer coordinates.
linalg::DensityMatrix collapse_rho(const Eigen::VectorXd& p, const PointerFamily& family, double t);

// --------------------------------------------------------------------------
// Two-level crossover
// --------------------------------------------------------------------------

struct CrossoverParams {
    double p0{0.5};
    double a{1.0};
    cplx delta{0.0, 0.0};
    double t0{0.0};

    void validate() const;
};

struct CrossoverPoint {
    double p_plus;
    double p_minus;
    double theta;
    double delta_phase;      // arg(delta) removed before computing theta
    bool exact_crossing;     // delta == 0
    bool degenerate_point;   // delta == 0 and t == t0
};

// p_+- = p0 +- sqrt((a(t-t0))^2 + |p0 delta|^2),
// tan(theta) = [a(t-t0) + sqrt(...)] / (p0 |delta|).
CrossoverPoint crossover_spectrum(const CrossoverParams& params, double t);

// [[p0 + a(t-t0), p0 delta], [p0 conj(delta), p0 - a(t-t0)]] in the pointer basis.
Eigen::Matrix2cd crossover_matrix(const CrossoverParams& params, double t);

// --------------------------------------------------------------------------
// Environment-split blocks
// --------------------------------------------------------------------------

struct BlockModel {
    Eigen::VectorXd outer_probs;                                   // p_j
    std::vector<int> block_sizes;                                  // m_j
    std::function<Eigen::VectorXcd(int, double)> weights;          // Z_aj(t), length m_j
    std::function<Eigen::MatrixXcd(int, double)> pointer_gram;     // <M_aj|M_bj>, m_j x m_j
    std::function<Eigen::MatrixXcd(int, double)> env_gram;         // <E_aj|E_bj>, m_j x m_j

    int n_blocks() const noexcept { return static_cast<int>(outer_probs.size()); }
    // sum_ab conj(Z_aj) Z_bj <M_aj|M_bj> <E_aj|E_bj> for block j.
    double block_norm(int j, double t) const;
    void validate(double t) const;
};

struct BlockRho {
    linalg::DensityMatrix rho;           // block diagonal in realized coordinates
    std::vector<int> block_of;           // realized coordinate -> block j
    std::vector<int> offsets;            // first coordinate of each block
    std::vector<Eigen::MatrixXcd> blocks;  // rho^(j) = p_j R^(j)
    std::vector<double> block_traces;
};

BlockRho split_block_rho(const BlockModel& model, double t);

// --------------------------------------------------------------------------
// Imperfect devices
// --------------------------------------------------------------------------

// Device states |M_ai> (orthonormal) carry labels (a, i) with a < m_i.
// z[j](l) = Z_aij for label l, env_gram[j](l, l') = <E_l j|E_l' j>.
struct ImperfectDevice {
    Eigen::VectorXd p;                      // particle-interval probabilities p_j
    std::vector<int> m;                     // sub-state count per device outcome i
    std::vector<Eigen::VectorXcd> z;        // one per particle index j
    std::vector<Eigen::MatrixXcd> env_gram; // one per particle index j

    int n_outcomes() const noexcept { return static_cast<int>(m.size()); }
    int n_labels() const;
    int label(int a, int i) const;
    int outcome_of(int label) const;
    void validate_shapes() const;
};

// Device reduced density matrix in the |M_ai> basis:
//   rho[(a,i),(b,i')] = sum_j p_j Z_aij conj(Z_bi'j) <E_bi'j|E_aij>.
Eigen::MatrixXcd imperfect_device_rho(const ImperfectDevice& device);

// Tr rho^(i) = sum_{a,j} p_j |Z_aij|^2 <E_aij|E_aij>; rejects states whose
// reconstructed norm deviates from one by more than tol.
Eigen::VectorXd imperfect_measurement_blocks(const ImperfectDevice& device, double tol = 1e-10);

// Largest norm of the out-of-block part of any eigenvector (relative to its
// dominant block). Eigenvectors with probability <= min_probability span the
// null space, where any basis is admissible, and are skipped.
double max_cross_block_component(const linalg::SpectralDecomposition& spectrum, const std::vector<int>& block_of,
                                 double min_probability = 1e-12);

}  // namespace modalsim::pointer
