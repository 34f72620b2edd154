// stochastic.hpp — the internal-view dynamics on Schmidt branches:
// continuous-time Bell rates, the coarse-grained discrete Markov chain,
// branch matching between time steps and seeded trajectory sampling.

#pragma once

#include "modalsim/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace modalsim::stochastic {

// --------------------------------------------------------------------------
// Frames and kernels
// --------------------------------------------------------------------------

struct BranchFrame {
    double time{0.0};
    linalg::SchmidtDecomposition schmidt;
    Eigen::VectorXd probabilities;

    static BranchFrame from_state(const linalg::BipartiteState& state, double time,
                                  double degeneracy_tolerance = linalg::kDefaultDegeneracyTolerance);

    int size() const noexcept { return static_cast<int>(probabilities.size()); }
    // |Psi_i> = P_i |Psi> / sqrt(p_i) = |psi_i> (x) |psi'_i> in the joint space.
    Eigen::VectorXcd branch(int i) const { return schmidt.branch(i); }
    // Branch k of the result is branch perm[k] of this frame.
    BranchFrame relabeled(const std::vector<int>& perm) const;
};

struct TransitionKernel {
    int step_index{0};
    Eigen::MatrixXd matrix;        // p_ij: source j (column) -> target i (row)
    std::vector<int> matching;     // step-n label j -> step-(n+1) branch index
    Eigen::MatrixXd j_matrix;      // antisymmetric J^(n)
    double clamped_mass{0.0};      // mass removed by the opt-in repair
    double dropped_flow{0.0};      // positive flow out of zero-probability branches (set to 0)
    double unitary_residual{0.0};  // || U Psi(t_n) - Psi(t_{n+1}) ||

    int size() const noexcept { return static_cast<int>(matrix.rows()); }
    // Column sums, non-negativity and the one-way property.
    void validate(double tol = 1e-10) const;
    static TransitionKernel identity(int n, int step_index = 0);
};

struct BranchHistory {
    std::vector<std::pair<int, int>> records;  // (step_index, branch_label)
    std::uint64_t rng_seed{0};
};

// --------------------------------------------------------------------------
// Continuous time
// --------------------------------------------------------------------------

struct ContinuousJ {
    Eigen::MatrixXd j;               // antisymmetrized
    double raw_asymmetry{0.0};       // max |J + J^T| before antisymmetrization
    Eigen::VectorXd probabilities;   // p_i(t)
    Eigen::VectorXd dp_dt;           // central difference of the Schmidt probabilities
};

// J_ij = 2 sqrt(p_i p_j) Re <Psi_j|(d/dt + iH)|Psi_i>, with d/dt by central
// differences of branch-matched Schmidt vectors at t +- fd_step.
ContinuousJ continuous_j_matrix(const std::function<linalg::BipartiteState(double)>& state_path,
                                const Eigen::MatrixXcd& hamiltonian, double t, double fd_step,
                                double degeneracy_tolerance = linalg::kDefaultDegeneracyTolerance);

// T_ij = max(J_ij, 0) / p_j.
Eigen::MatrixXd continuous_rates(const Eigen::MatrixXd& j, const Eigen::VectorXd& p);

// --------------------------------------------------------------------------
// Discrete time
// --------------------------------------------------------------------------

struct MatchResult {
    std::vector<int> permutation;   // step-n branch j -> step-(n+1) branch permutation[j]
    Eigen::MatrixXd scores;         // s_ij = |Re <Psi_i^(n+1)|U|Psi_j^(n)>|
    double total_score{0.0};
    bool is_identity() const;
};

MatchResult match_branches(const BranchFrame& prev, const BranchFrame& next, const Eigen::MatrixXcd& u_step);

struct KernelOptions {
    bool repair{false};           // clamp negative diagonals instead of throwing
    double feasibility_tol{1e-10};
};

// V_ij = Re[sqrt(p'_pi(i) p_j) <Psi'_pi(i)|U|Psi_j>], J = V - V^T,
// p_ij = max(J_ij, 0) / p_j off the diagonal, p_ii = 1 - sum_{k != i} p_ki.
// Rows and columns are labelled by step-n branches.
TransitionKernel discrete_kernel(const BranchFrame& prev, const BranchFrame& next, const Eigen::MatrixXcd& u_step,
                                 const std::vector<int>& matching, const KernelOptions& options = {},
                                 int step_index = 0);

// Kernels for a whole frame sequence, expressed in persistent labels (label
// l is branch l of the first frame and follows the matchings afterwards).
struct KernelChain {
    std::vector<TransitionKernel> kernels;
    std::vector<std::vector<int>> label_to_index;  // per frame: persistent label -> branch index
    std::vector<Eigen::VectorXd> probabilities;    // per frame, in persistent labels
};
KernelChain build_kernel_chain(const std::vector<BranchFrame>& frames, const std::vector<Eigen::MatrixXcd>& unitaries,
                               const KernelOptions& options = {});

// --------------------------------------------------------------------------
// Sampling
// --------------------------------------------------------------------------

// Precomputed inverse-CDF tables over the nonzero entries of each column.
class KernelSampler {
public:
    explicit KernelSampler(const Eigen::MatrixXd& column_stochastic);
    explicit KernelSampler(const Eigen::VectorXd& distribution);  // single column
    int sample(int column, double u) const;
    int columns() const noexcept { return static_cast<int>(tables_.size()); }

private:
    std::vector<std::vector<std::pair<double, int>>> tables_;  // (cumulative, row)
};

BranchHistory sample_history(const std::vector<TransitionKernel>& kernels, const Eigen::VectorXd& initial_probs,
                             std::uint64_t seed);

struct EnsembleOptions {
    bool keep_histories{false};
    int workers{0};  // 0 = environment variable MODALSIM_WORKERS, else hardware concurrency
};

struct EnsembleResult {
    std::vector<std::vector<long long>> occupancy;          // [step][branch] counts
    std::map<std::pair<int, int>, long long> transitions;   // (from, to) label changes, from != to
    std::vector<BranchHistory> histories;                   // by trajectory index, if requested
    int workers_used{1};
};

EnsembleResult run_ensemble(const std::vector<TransitionKernel>& kernels, const Eigen::VectorXd& initial_probs,
                            long long n_traj, std::uint64_t base_seed, const EnsembleOptions& options = {});

int default_worker_count();

}  // namespace modalsim::stochastic
