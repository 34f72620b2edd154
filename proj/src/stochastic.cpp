#include "modalsim/stochastic.hpp"

#include "modalsim/assignment.hpp"
#include "modalsim/errors.hpp"
#include "modalsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

namespace modalsim::stochastic {

using linalg::cplx;

namespace {

constexpr double kZeroProbability = 1e-14;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

bool is_permutation(const std::vector<int>& perm, int n) {
    if (static_cast<int>(perm.size()) != n) return false;
    std::vector<bool> seen(n, false);
    for (int p : perm) {
        if (p < 0 || p >= n || seen[p]) return false;
        seen[p] = true;
    }
    return true;
}

// Branch vectors of a frame as the columns of a joint-space matrix.
Eigen::MatrixXcd branch_matrix(const BranchFrame& f) {
    const Eigen::Index d = static_cast<Eigen::Index>(f.schmidt.dim_a()) * f.schmidt.dim_b();
    Eigen::MatrixXcd b(d, f.size());
    for (int i = 0; i < f.size(); ++i) b.col(i) = f.branch(i);
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Frames and kernels
// ---------------------------------------------------------------------------

BranchFrame BranchFrame::from_state(const linalg::BipartiteState& state, double time, double degeneracy_tolerance) {
    BranchFrame f;
    f.time = time;
    f.schmidt = linalg::schmidt_decompose(state, degeneracy_tolerance);
    f.probabilities = f.schmidt.probabilities();
    return f;
}

BranchFrame BranchFrame::relabeled(const std::vector<int>& perm) const {
    if (!is_permutation(perm, size())) throw std::invalid_argument("BranchFrame::relabeled: not a permutation");
    BranchFrame out = *this;
    std::vector<int> new_index(size());
    for (int k = 0; k < size(); ++k) {
        out.probabilities(k) = probabilities(perm[k]);
        out.schmidt.coefficients(k) = schmidt.coefficients(perm[k]);
        out.schmidt.left.col(k) = schmidt.left.col(perm[k]);
        out.schmidt.right.col(k) = schmidt.right.col(perm[k]);
        new_index[perm[k]] = k;
    }
    for (auto& cluster : out.schmidt.degenerate_clusters) {
        for (int& i : cluster) i = new_index[i];
        std::sort(cluster.begin(), cluster.end());
    }
    return out;
}

void TransitionKernel::validate(double tol) const {
    const Eigen::Index n = matrix.rows();
    if (matrix.cols() != n) throw std::invalid_argument("TransitionKernel: matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = matrix.col(j).sum();
        if (std::abs(s - 1.0) > tol)
            throw std::invalid_argument("TransitionKernel: column " + std::to_string(j) + " sums to " + fmt(s));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (matrix(i, j) < 0.0)
                throw std::invalid_argument("TransitionKernel: negative entry at (" + std::to_string(i) + ", " +
                                            std::to_string(j) + ")");
            if (i != j && matrix(i, j) * matrix(j, i) != 0.0)
                throw std::invalid_argument("TransitionKernel: two-way transition between " + std::to_string(i) +
                                            " and " + std::to_string(j));
        }
    }
}

TransitionKernel TransitionKernel::identity(int n, int step_index) {
    TransitionKernel k;
    k.step_index = step_index;
    k.matrix = Eigen::MatrixXd::Identity(n, n);
    k.matching.resize(n);
    std::iota(k.matching.begin(), k.matching.end(), 0);
    k.j_matrix = Eigen::MatrixXd::Zero(n, n);
    return k;
}

// ---------------------------------------------------------------------------
// Continuous time
// ---------------------------------------------------------------------------

ContinuousJ continuous_j_matrix(const std::function<linalg::BipartiteState(double)>& state_path,
                                const Eigen::MatrixXcd& hamiltonian, double t, double fd_step,
                                double degeneracy_tolerance) {
    if (!(fd_step > 0.0)) throw std::invalid_argument("continuous_j_matrix: fd_step must be positive");
    const BranchFrame f0 = BranchFrame::from_state(state_path(t), t, degeneracy_tolerance);
    const int n = f0.size();
    const Eigen::Index d = static_cast<Eigen::Index>(f0.schmidt.dim_a()) * f0.schmidt.dim_b();
    if (hamiltonian.rows() != d || hamiltonian.cols() != d)
        throw std::invalid_argument("continuous_j_matrix: Hamiltonian dimension does not match the joint space");
    if (linalg::hermiticity_defect(hamiltonian) > 1e-10)
        throw std::invalid_argument("continuous_j_matrix: Hamiltonian is not Hermitian");
    for (int i = 0; i + 1 < n; ++i) {
        const double gap = f0.probabilities(i) - f0.probabilities(i + 1);
        if (gap < degeneracy_tolerance)
            throw DegenerateSpectrum("continuous_j_matrix: Schmidt gap " + fmt(gap) + " between branches " +
                                     std::to_string(i) + " and " + std::to_string(i + 1) + " at t = " + fmt(t) +
                                     " is below the degeneracy tolerance; use the discrete engine across this point");
    }

    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(d, d);
    auto matched = [&](double tt) {
        const BranchFrame f = BranchFrame::from_state(state_path(tt), tt, degeneracy_tolerance);
        const MatchResult m = match_branches(f0, f, identity);
        return f.relabeled(m.permutation);
    };
    const BranchFrame fp = matched(t + fd_step);
    const BranchFrame fm = matched(t - fd_step);

    const Eigen::MatrixXcd b0 = branch_matrix(f0);
    const Eigen::MatrixXcd db = (branch_matrix(fp) - branch_matrix(fm)) / (2.0 * fd_step);
    const Eigen::MatrixXcd hb = hamiltonian * b0;
    // g(j, i) = <Psi_j| (d/dt + iH) |Psi_i>
    const Eigen::MatrixXcd g = b0.adjoint() * db + cplx(0.0, 1.0) * (b0.adjoint() * hb);

    Eigen::MatrixXd raw(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            raw(i, j) = 2.0 * std::sqrt(f0.probabilities(i) * f0.probabilities(j)) * g(j, i).real();

    ContinuousJ out;
    out.raw_asymmetry = (raw + raw.transpose()).cwiseAbs().maxCoeff();
    out.j = 0.5 * (raw - raw.transpose());
    out.probabilities = f0.probabilities;
    out.dp_dt = (fp.probabilities - fm.probabilities) / (2.0 * fd_step);
    return out;
}

Eigen::MatrixXd continuous_rates(const Eigen::MatrixXd& j, const Eigen::VectorXd& p) {
    const Eigen::Index n = j.rows();
    if (j.cols() != n || p.size() != n) throw std::invalid_argument("continuous_rates: shape mismatch");
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == c || !(j(r, c) > 0.0)) continue;
            if (!(p(c) > 0.0))
                throw std::invalid_argument("continuous_rates: positive flow J(" + std::to_string(r) + ", " +
                                            std::to_string(c) + ") out of a zero-probability branch; rate undefined");
            t(r, c) = j(r, c) / p(c);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Discrete time
// ---------------------------------------------------------------------------

bool MatchResult::is_identity() const {
    for (std::size_t k = 0; k < permutation.size(); ++k)
        if (permutation[k] != static_cast<int>(k)) return false;
    return true;
}

MatchResult match_branches(const BranchFrame& prev, const BranchFrame& next, const Eigen::MatrixXcd& u_step) {
    const int n = prev.size();
    if (next.size() != n)
        throw std::invalid_argument("match_branches: frames have different branch counts (" + std::to_string(n) +
                                    " vs " + std::to_string(next.size()) + ")");
    const Eigen::MatrixXcd bp = branch_matrix(prev);
    const Eigen::MatrixXcd bn = branch_matrix(next);
    if (u_step.rows() != bp.rows() || u_step.cols() != bp.rows())
        throw std::invalid_argument("match_branches: u_step does not act on the joint space");
    const Eigen::MatrixXd scores = (bn.adjoint() * (u_step * bp)).real().cwiseAbs();
    if (!(scores.maxCoeff() > 1e-15))
        throw NumericalError("match_branches: all overlap scores vanish; the states are unrelated (step too large)");
    MatchResult out;
    out.permutation = assignment::max_weight_matching(scores);
    out.scores = scores;
    for (int j = 0; j < n; ++j) out.total_score += scores(out.permutation[j], j);
    return out;
}

TransitionKernel discrete_kernel(const BranchFrame& prev, const BranchFrame& next, const Eigen::MatrixXcd& u_step,
                                 const std::vector<int>& matching, const KernelOptions& options, int step_index) {
    const int n = prev.size();
    if (next.size() != n) throw std::invalid_argument("discrete_kernel: frames have different branch counts");
    if (!is_permutation(matching, n)) throw std::invalid_argument("discrete_kernel: matching is not a permutation");
    const Eigen::MatrixXcd bp = branch_matrix(prev);
    const Eigen::MatrixXcd bn = branch_matrix(next);
    if (u_step.rows() != bp.rows() || u_step.cols() != bp.rows())
        throw std::invalid_argument("discrete_kernel: u_step does not act on the joint space");

    const Eigen::VectorXd& p = prev.probabilities;
    const Eigen::VectorXd& q = next.probabilities;
    const Eigen::MatrixXcd ub = u_step * bp;
    const Eigen::MatrixXcd ov = bn.adjoint() * ub;  // <Psi'_a|U|Psi_j>

    TransitionKernel k;
    k.step_index = step_index;
    k.matching = matching;
    {
        const Eigen::VectorXcd psi = bp * p.cwiseSqrt().cast<cplx>();
        const Eigen::VectorXcd psi_next = bn * q.cwiseSqrt().cast<cplx>();
        k.unitary_residual = (u_step * psi - psi_next).norm();
    }

    Eigen::MatrixXd v(n, n);
    for (int i = 0; i < n; ++i) {
        const int a = matching[i];
        for (int j = 0; j < n; ++j) v(i, j) = std::sqrt(q(a) * p(j)) * ov(a, j).real();
    }
    k.j_matrix.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k.j_matrix(i, j) = (i == j) ? 0.0 : v(i, j) - v(j, i);

    k.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        const bool empty_source = !(p(j) > kZeroProbability);
        double out_flow = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == j || !(k.j_matrix(i, j) > 0.0)) continue;
            if (empty_source) {
                k.dropped_flow += k.j_matrix(i, j);
                continue;
            }
            k.matrix(i, j) = k.j_matrix(i, j) / p(j);
            out_flow += k.matrix(i, j);
        }
        double diag = 1.0 - out_flow;
        if (diag < -options.feasibility_tol) {
            if (!options.repair)
                throw InfeasibleStep("discrete_kernel: step " + std::to_string(step_index) + " is infeasible: p_" +
                                         std::to_string(j) + std::to_string(j) + " = " + fmt(diag) +
                                         " < 0; halve the time step or enable repair",
                                     j, diag);
            k.clamped_mass += -diag * p(j);
            for (int i = 0; i < n; ++i)
                if (i != j) k.matrix(i, j) /= out_flow;
            diag = 0.0;
        }
        k.matrix(j, j) = std::max(diag, 0.0);
    }
    return k;
}

KernelChain build_kernel_chain(const std::vector<BranchFrame>& frames, const std::vector<Eigen::MatrixXcd>& unitaries,
                               const KernelOptions& options) {
    if (frames.empty()) throw std::invalid_argument("build_kernel_chain: no frames");
    if (unitaries.size() + 1 != frames.size())
        throw std::invalid_argument("build_kernel_chain: need exactly one unitary per step");
    const int n = frames.front().size();
    KernelChain chain;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    chain.label_to_index.push_back(idx);
    auto persistent = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd out(n);
        for (int l = 0; l < n; ++l) out(l) = p(idx[l]);
        return out;
    };
    chain.probabilities.push_back(persistent(frames.front().probabilities));
    for (std::size_t s = 0; s + 1 < frames.size(); ++s) {
        const MatchResult m = match_branches(frames[s], frames[s + 1], unitaries[s]);
        const TransitionKernel raw =
            discrete_kernel(frames[s], frames[s + 1], unitaries[s], m.permutation, options, static_cast<int>(s));
        TransitionKernel k = raw;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                k.matrix(a, b) = raw.matrix(idx[a], idx[b]);
                k.j_matrix(a, b) = raw.j_matrix(idx[a], idx[b]);
            }
        chain.kernels.push_back(std::move(k));
        for (int l = 0; l < n; ++l) idx[l] = m.permutation[idx[l]];
        chain.label_to_index.push_back(idx);
        chain.probabilities.push_back(persistent(frames[s + 1].probabilities));
    }
    return chain;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

KernelSampler::KernelSampler(const Eigen::MatrixXd& m) {
    tables_.resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double cum = 0.0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) > 0.0) {
                cum += m(r, c);
                tables_[c].emplace_back(cum, static_cast<int>(r));
            }
        }
    }
}

KernelSampler::KernelSampler(const Eigen::VectorXd& distribution) : KernelSampler(Eigen::MatrixXd(distribution)) {}

int KernelSampler::sample(int column, double u) const {
    if (column < 0 || column >= columns()) throw std::out_of_range("KernelSampler::sample: column out of range");
    const auto& t = tables_[column];
    if (t.empty()) throw std::invalid_argument("KernelSampler::sample: column has no support");
    const double target = u * t.back().first;
    auto it = std::upper_bound(t.begin(), t.end(), target,
                               [](double x, const std::pair<double, int>& e) { return x < e.first; });
    if (it == t.end()) --it;
    return it->second;
}

namespace {

struct Prepared {
    KernelSampler initial;
    std::vector<KernelSampler> steps;
};

Prepared prepare(const std::vector<TransitionKernel>& kernels, const Eigen::VectorXd& initial_probs) {
    if (initial_probs.size() < 1) throw std::invalid_argument("sample_history: empty initial distribution");
    if ((initial_probs.array() < 0.0).any() || std::abs(initial_probs.sum() - 1.0) > 1e-8)
        throw std::invalid_argument("sample_history: initial_probs must be a probability vector");
    Prepared p{KernelSampler(initial_probs), {}};
    p.steps.reserve(kernels.size());
    for (const auto& k : kernels) p.steps.emplace_back(k.matrix);
    return p;
}

template <typename Visit>
void walk(const Prepared& prep, std::uint64_t key, Visit&& visit) {
    rng::CounterRng gen(key);
    int b = prep.initial.sample(0, gen.next_uniform());
    visit(0, b);
    for (std::size_t s = 0; s < prep.steps.size(); ++s) {
        if (b >= prep.steps[s].columns())
            throw std::invalid_argument("sample_history: kernel " + std::to_string(s) +
                                        " is not chain-compatible (branch " + std::to_string(b) + " out of range)");
        b = prep.steps[s].sample(b, gen.next_uniform());
        visit(static_cast<int>(s) + 1, b);
    }
}

}  // namespace

BranchHistory sample_history(const std::vector<TransitionKernel>& kernels, const Eigen::VectorXd& initial_probs,
                             std::uint64_t seed) {
    const Prepared prep = prepare(kernels, initial_probs);
    BranchHistory h;
    h.rng_seed = seed;
    h.records.reserve(kernels.size() + 1);
    walk(prep, seed, [&](int step, int b) { h.records.emplace_back(step, b); });
    return h;
}

int default_worker_count() {
    if (const char* env = std::getenv("MODALSIM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

EnsembleResult run_ensemble(const std::vector<TransitionKernel>& kernels, const Eigen::VectorXd& initial_probs,
                            long long n_traj, std::uint64_t base_seed, const EnsembleOptions& options) {
    if (n_traj < 0) throw std::invalid_argument("run_ensemble: n_traj must be non-negative");
    EnsembleResult out;
    if (n_traj == 0) return out;

    const Prepared prep = prepare(kernels, initial_probs);
    int width = static_cast<int>(initial_probs.size());
    for (const auto& k : kernels) width = std::max(width, k.size());
    const std::size_t n_steps = kernels.size() + 1;

    const int workers =
        static_cast<int>(std::max<long long>(1, std::min<long long>(options.workers > 0 ? options.workers
                                                                                         : default_worker_count(),
                                                                    n_traj)));
    out.workers_used = workers;
    if (options.keep_histories) out.histories.resize(static_cast<std::size_t>(n_traj));

    struct Partial {
        std::vector<std::vector<long long>> occupancy;
        std::map<std::pair<int, int>, long long> transitions;
        std::string error;
    };
    std::vector<Partial> parts(workers);
    auto job = [&](int w) {
        Partial& part = parts[w];
        part.occupancy.assign(n_steps, std::vector<long long>(width, 0));
        const long long lo = n_traj * w / workers;
        const long long hi = n_traj * (w + 1) / workers;
        try {
            for (long long k = lo; k < hi; ++k) {
                const std::uint64_t key = rng::stream_key(base_seed, static_cast<std::uint64_t>(k));
                BranchHistory* h = options.keep_histories ? &out.histories[static_cast<std::size_t>(k)] : nullptr;
                if (h) {
                    h->rng_seed = key;
                    h->records.reserve(n_steps);
                }
                int last = -1;
                walk(prep, key, [&](int step, int b) {
                    ++part.occupancy[step][b];
                    if (last >= 0 && b != last) ++part.transitions[{last, b}];
                    last = b;
                    if (h) h->records.emplace_back(step, b);
                });
            }
        } catch (const std::exception& e) {
            part.error = e.what();
        }
    };
    if (workers == 1) {
        job(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(job, w);
        for (auto& th : pool) th.join();
    }

    out.occupancy.assign(n_steps, std::vector<long long>(width, 0));
    for (const auto& part : parts) {
        if (!part.error.empty()) throw std::invalid_argument(part.error);
        for (std::size_t s = 0; s < n_steps; ++s)
            for (int b = 0; b < width; ++b) out.occupancy[s][b] += part.occupancy[s][b];
        for (const auto& [key, count] : part.transitions) out.transitions[key] += count;
    }
    return out;
}

}  // namespace modalsim::stochastic
