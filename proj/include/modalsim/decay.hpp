// decay.hpp — the A -> B + C decay watched by a device of time resolution eta:
// closed-form weights, the decay-rate quadrature, the one-way kernel and the
// Geiger-counter Monte Carlo.

#pragma once

#include "modalsim/linalg.hpp"
#include "modalsim/pointer.hpp"
#include "modalsim/stochastic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace modalsim::decay {

using linalg::cplx;

struct DecayParams {
    double gamma{0.0};            // (2 gamma)^-1 is the lifetime
    double eta{1.0};              // device time resolution
    int n_steps{0};
    double e0{0.0};               // energy of |A>, enters phases only
    double tau{0.01};             // support width of <BC|exp(-i H0 t)|BC>
    double lambda_coupling{0.0};

    // gamma*eta < 0.1, gamma*tau < 0.01, eta, tau > 0, gamma >= 0, n_steps >= 0.
    void validate() const;
    // tau defaults to eta / 100.
    static DecayParams make(double gamma, double eta, int n_steps, double e0 = 0.0);
};

// --------------------------------------------------------------------------
// Rates and weights
// --------------------------------------------------------------------------

struct DecayRate {
    double gamma{0.0};             // lambda^2 Re int_0^tau overlap
    double energy_shift{0.0};      // lambda^2 Im int_0^tau overlap, reported separately
    double error_estimate{0.0};
    std::string warning;           // set when |Im| > 1% of |Re| or the overlap has support beyond tau
};

DecayRate decay_gamma(double lambda_coupling, const std::function<cplx(double)>& overlap_fn, double tau);

struct DecayWeights {
    Eigen::VectorXd p;   // (p_0, p_1, ..., p_n)
    double sum{0.0};
    double deficit{0.0};  // 1 - sum, O((gamma eta)^2)
};

// p_0 = exp(-2 n gamma eta), p_j = 2 gamma eta exp(-2 gamma (j-1) eta).
DecayWeights decay_weights(const DecayParams& params, int n);

// One-way kernel of dimension n + 2: p_(n+1),0 = 2 gamma eta, p_00 = 1 - 2 gamma eta,
// every decayed branch is absorbing.
stochastic::TransitionKernel decay_kernel(const DecayParams& params, int n);

std::vector<stochastic::TransitionKernel> decay_kernel_chain(const DecayParams& params);

// --------------------------------------------------------------------------
// Full state
// --------------------------------------------------------------------------

// Joint device (x) {|A>, |BC_1>, |BC_2>, ...} state at time t. Windows are
// orthogonal decay-product sectors; the window amplitude is the exact
// tau -> 0 value -i exp(-i E0 t_{j-1}) sqrt(exp(-2 gamma t_{j-1}) (1 - exp(-2 gamma eta))),
// so the state norm is one up to rounding. The particle factor has
// family.n_outcomes() levels and the device factor family.embedding_dim().
struct DecayState {
    linalg::BipartiteState state;
    int completed_windows;
    double norm_deficit;  // |1 - <Psi|Psi>|
};

DecayState decay_full_state(const DecayParams& params, const pointer::PointerFamily& family, double t);

// Exact one-step propagator from t_n to t_{n+1} for orthogonal pointers
// realized as the standard basis: a 2x2 rotation on
// {|M_0, A>, |M_{n+1}, BC_{n+1}>}, identity elsewhere.
Eigen::MatrixXcd decay_step_unitary(const DecayParams& params, int n, int dim_device, int dim_particle);

// --------------------------------------------------------------------------
// Monte Carlo
// --------------------------------------------------------------------------

struct GeigerResult {
    stochastic::EnsembleResult ensemble;
    std::vector<long long> window_counts;  // index j = first-decay window (0 = undecayed at the end)
    std::vector<double> expected_p;        // decay_weights(params, n_steps).p
    long long reverse_transitions{0};      // into branch 0
    long long decayed_to_decayed{0};
    long long multi_transition_histories{0};  // only counted when histories are kept
};

GeigerResult simulate_geiger(const DecayParams& params, long long n_traj, std::uint64_t seed,
                             const stochastic::EnsembleOptions& options = {});

}  // namespace modalsim::decay
