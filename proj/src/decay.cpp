#include "modalsim/decay.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace modalsim::decay {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

void DecayParams::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("DecayParams: gamma must be >= 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("DecayParams: eta must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("DecayParams: tau must be positive");
    if (n_steps < 0) throw std::invalid_argument("DecayParams: n_steps must be >= 0");
    if (!(gamma * eta < 0.1))
        throw std::invalid_argument("DecayParams: gamma*eta = " + fmt(gamma * eta) + " violates gamma*eta < 0.1");
    if (!(gamma * tau < 0.01))
        throw std::invalid_argument("DecayParams: gamma*tau = " + fmt(gamma * tau) + " violates gamma*tau < 0.01");
}

DecayParams DecayParams::make(double gamma, double eta, int n_steps, double e0) {
    DecayParams p;
    p.gamma = gamma;
    p.eta = eta;
    p.n_steps = n_steps;
    p.e0 = e0;
    p.tau = eta / 100.0;
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Rates and weights
// ---------------------------------------------------------------------------

DecayRate decay_gamma(double lambda_coupling, const std::function<cplx(double)>& overlap_fn, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("decay_gamma: tau must be positive");
    if (!overlap_fn) throw std::invalid_argument("decay_gamma: overlap function is empty");
    using boost::math::quadrature::gauss_kronrod;
    double err_re = 0.0, err_im = 0.0;
    const double re = gauss_kronrod<double, 61>::integrate([&](double t) { return overlap_fn(t).real(); }, 0.0, tau,
                                                           15, 1e-12, &err_re);
    const double im = gauss_kronrod<double, 61>::integrate([&](double t) { return overlap_fn(t).imag(); }, 0.0, tau,
                                                           15, 1e-12, &err_im);
    const double l2 = lambda_coupling * lambda_coupling;
    DecayRate out;
    out.gamma = l2 * re;
    out.energy_shift = l2 * im;
    out.error_estimate = l2 * std::hypot(err_re, err_im);
    if (out.error_estimate > 1e-10 * l2 * tau)
        out.warning += "quadrature error estimate " + fmt(out.error_estimate) + " exceeds 1e-10*lambda^2*tau; ";
    if (std::abs(im) > 0.01 * std::abs(re) && im != 0.0)
        out.warning += "imaginary part " + fmt(out.energy_shift) + " exceeds 1% of the real part (energy shift); ";
    for (double f : {1.25, 1.5, 2.0}) {
        if (std::abs(overlap_fn(f * tau)) > 0.0) {
            out.warning += "overlap function has support beyond tau; ";
            break;
        }
    }
    return out;
}

DecayWeights decay_weights(const DecayParams& params, int n) {
    params.validate();
    if (n < 0 || n > params.n_steps)
        throw std::invalid_argument("decay_weights: n must lie in [0, n_steps] (got " + std::to_string(n) + ")");
    const double ge = params.gamma * params.eta;
    DecayWeights w;
    w.p.resize(n + 1);
    w.p(0) = std::exp(-2.0 * n * ge);
    for (int j = 1; j <= n; ++j) w.p(j) = 2.0 * ge * std::exp(-2.0 * (j - 1) * ge);
    w.sum = w.p.sum();
    w.deficit = 1.0 - w.sum;
    return w;
}

stochastic::TransitionKernel decay_kernel(const DecayParams& params, int n) {
    params.validate();
    if (n < 0) throw std::invalid_argument("decay_kernel: n must be >= 0");
    const double rate = 2.0 * params.eta * params.gamma;
    stochastic::TransitionKernel k = stochastic::TransitionKernel::identity(n + 2, n);
    k.matrix(0, 0) = 1.0 - rate;
    k.matrix(n + 1, 0) = rate;
    k.j_matrix(n + 1, 0) = rate * std::exp(-2.0 * n * params.gamma * params.eta);
    k.j_matrix(0, n + 1) = -k.j_matrix(n + 1, 0);
    return k;
}

std::vector<stochastic::TransitionKernel> decay_kernel_chain(const DecayParams& params) {
    std::vector<stochastic::TransitionKernel> chain;
    chain.reserve(params.n_steps);
    for (int n = 0; n < params.n_steps; ++n) chain.push_back(decay_kernel(params, n));
    return chain;
}

// ---------------------------------------------------------------------------
// Full state
// ---------------------------------------------------------------------------

DecayState decay_full_state(const DecayParams& params, const pointer::PointerFamily& family, double t) {
    params.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("decay_full_state: t must be >= 0");
    const double g = params.gamma, eta = params.eta;
    // Windows completed by t (t = n eta counts n windows); a partial window
    // contributes its own sector.
    const int completed = static_cast<int>(std::floor(t / eta + 1e-9));
    const double rest = std::max(0.0, t - completed * eta);
    const int sectors = completed + (rest > 1e-12 * eta ? 1 : 0);
    if (family.n_outcomes() < sectors + 1)
        throw std::invalid_argument("decay_full_state: pointer family needs at least " + std::to_string(sectors + 1) +
                                    " outcomes at t = " + fmt(t));

    const pointer::RealizedPointers v = pointer::realize_pointer_states(family, t);
    const int dp = family.n_outcomes();
    Eigen::MatrixXcd amp = Eigen::MatrixXcd::Zero(family.embedding_dim(), dp);
    amp.col(0) = std::polar(std::exp(-g * t), -params.e0 * t) * v.vectors.col(0);
    for (int j = 1; j <= sectors; ++j) {
        const double start = (j - 1) * eta;
        const double width = (j <= completed) ? eta : rest;
        const double mag = std::sqrt(std::exp(-2.0 * g * start) * -std::expm1(-2.0 * g * width));
        const cplx c = cplx(0.0, -1.0) * std::polar(mag, -params.e0 * start);
        amp.col(j) = c * v.vectors.col(j);
    }
    const double n2 = amp.squaredNorm();
    const double deficit = std::abs(1.0 - n2);
    if (deficit > 0.05)
        throw std::invalid_argument("decay_full_state: normalization deficit " + fmt(deficit) +
                                    " exceeds 0.05; parameters are outside the validity regime");
    return DecayState{linalg::BipartiteState(std::move(amp)), completed, deficit};
}

Eigen::MatrixXcd decay_step_unitary(const DecayParams& params, int n, int dim_device, int dim_particle) {
    params.validate();
    if (n < 0 || n + 1 >= dim_device || n + 1 >= dim_particle)
        throw std::invalid_argument("decay_step_unitary: step " + std::to_string(n) + " needs at least " +
                                    std::to_string(n + 2) + " device and particle levels");
    const double ge = params.gamma * params.eta;
    const int d = dim_device * dim_particle;
    const int a = 0;                                       // |M_0, A>
    const int b = (n + 1) * dim_particle + (n + 1);        // |M_{n+1}, BC_{n+1}>
    const cplx c = std::polar(std::exp(-ge), -params.e0 * params.eta);
    const cplx s = cplx(0.0, -std::sqrt(-std::expm1(-2.0 * ge)));
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    u(a, a) = c;
    u(b, a) = s;
    u(a, b) = -std::conj(s);
    u(b, b) = std::conj(c);
    return u;
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

GeigerResult simulate_geiger(const DecayParams& params, long long n_traj, std::uint64_t seed,
                             const stochastic::EnsembleOptions& options) {
    params.validate();
    const auto chain = decay_kernel_chain(params);
    Eigen::VectorXd initial = Eigen::VectorXd::Zero(1);
    initial(0) = 1.0;

    GeigerResult out;
    out.ensemble = stochastic::run_ensemble(chain, initial, n_traj, seed, options);
    const auto w = decay_weights(params, params.n_steps);
    out.expected_p.assign(w.p.data(), w.p.data() + w.p.size());
    out.window_counts.assign(params.n_steps + 1, 0);
    if (!out.ensemble.occupancy.empty()) {
        const auto& last = out.ensemble.occupancy.back();
        for (int j = 0; j <= params.n_steps && j < static_cast<int>(last.size()); ++j) out.window_counts[j] = last[j];
    }
    for (const auto& [key, count] : out.ensemble.transitions) {
        if (key.second == 0) out.reverse_transitions += count;
        if (key.first >= 1 && key.second >= 1) out.decayed_to_decayed += count;
    }
    for (const auto& h : out.ensemble.histories) {
        int changes = 0;
        for (std::size_t r = 1; r < h.records.size(); ++r)
            if (h.records[r].second != h.records[r - 1].second) ++changes;
        if (changes > 1) ++out.multi_transition_histories;
    }
    return out;
}

}  // namespace modalsim::decay
