#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modalsim/decay.hpp"

#include <cmath>
#include <numbers>

using namespace modalsim;
using namespace modalsim::decay;
using linalg::cplx;

// ----------------------------------------------------------------------------
// Parameters and rate
// ----------------------------------------------------------------------------

TEST_CASE("validity bounds") {
    CHECK_NOTHROW(DecayParams::make(0.01, 1.0, 10).validate());
    try {
        DecayParams::make(0.5, 1.0, 10).validate();
        FAIL("gamma*eta = 0.5 accepted");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("gamma*eta < 0.1") != std::string::npos);
    }
    DecayParams p = DecayParams::make(0.01, 1.0, 10);
    p.tau = 2.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("gamma*tau < 0.01"), std::invalid_argument);
    CHECK(DecayParams::make(0.01, 2.0, 3).tau == doctest::Approx(0.02));
}

TEST_CASE("decay rate quadrature") {
    const double lambda = 0.3;
    const double tau = 0.05;
    const auto flat = decay_gamma(lambda, [tau](double t) { return cplx(t <= tau ? 1.0 : 0.0, 0.0); }, tau);
    CHECK(flat.gamma == doctest::Approx(lambda * lambda * tau).epsilon(1e-12));
    CHECK(flat.warning.empty());

    const auto cosine = decay_gamma(
        lambda, [tau](double t) { return cplx(t <= tau ? std::cos(std::numbers::pi * t / (2 * tau)) : 0.0, 0.0); }, tau);
    CHECK(cosine.gamma == doctest::Approx(2 * lambda * lambda * tau / std::numbers::pi).epsilon(1e-12));

    const auto zero = decay_gamma(lambda, [](double) { return cplx(0.0, 0.0); }, tau);
    CHECK(zero.gamma == 0.0);

    // A rotating overlap has an energy shift, reported separately with a warning.
    const double w = 20.0;
    const auto shifted = decay_gamma(lambda, [w](double t) { return std::exp(cplx(0.0, -w * t)); }, tau);
    CHECK(shifted.gamma == doctest::Approx(lambda * lambda * std::sin(w * tau) / w).epsilon(1e-10));
    CHECK(shifted.energy_shift == doctest::Approx(lambda * lambda * (std::cos(w * tau) - 1) / w).epsilon(1e-10));
    CHECK_FALSE(shifted.warning.empty());

    // Support beyond tau is flagged.
    const auto wide = decay_gamma(lambda, [tau](double t) { return cplx(t < 3 * tau ? 1.0 : 0.0, 0.0); }, tau);
    CHECK_FALSE(wide.warning.empty());
}

// ----------------------------------------------------------------------------
// Weights and kernels
// ----------------------------------------------------------------------------

TEST_CASE("decay weights") {
    const auto params = DecayParams::make(0.005, 1.0, 10);
    const auto w0 = decay_weights(params, 0);
    REQUIRE(w0.p.size() == 1);
    CHECK(w0.p(0) == 1.0);

    const auto w = decay_weights(params, 3);
    REQUIRE(w.p.size() == 4);
    CHECK(w.p(0) == doctest::Approx(std::exp(-0.03)).epsilon(1e-15));
    CHECK(w.p(0) == doctest::Approx(0.970446).epsilon(1e-6));
    CHECK(w.p(1) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(w.p(2) == doctest::Approx(0.01 * std::exp(-0.01)).epsilon(1e-15));
    CHECK(w.p(3) == doctest::Approx(0.01 * std::exp(-0.02)).epsilon(1e-15));
    CHECK(w.sum == doctest::Approx(w.p.sum()).epsilon(1e-15));
    CHECK(std::abs(w.deficit) < 4 * 3 * 0.005 * 0.005);

    const auto long_run = decay_weights(DecayParams::make(0.004, 1.0, 50), 50);
    for (int j = 1; j < 50; ++j) CHECK(long_run.p(j + 1) / long_run.p(j) == doctest::Approx(std::exp(-0.008)).epsilon(1e-14));
    CHECK_THROWS_AS(decay_weights(params, 11), std::invalid_argument);
}

TEST_CASE("decay kernel structure") {
    const auto params = DecayParams::make(0.01, 1.0, 20);
    for (int n : {0, 5, 19}) {
        const auto k = decay_kernel(params, n);
        REQUIRE(k.size() == n + 2);
        CHECK(k.matrix(n + 1, 0) == doctest::Approx(0.02).epsilon(1e-15));
        CHECK(k.matrix(0, 0) == doctest::Approx(0.98).epsilon(1e-15));
        for (int j = 0; j < k.size(); ++j) {
            CHECK(k.matrix.col(j).sum() == 1.0);
            for (int i = 0; i < k.size(); ++i) {
                if (i == j) continue;
                if (!(i == n + 1 && j == 0)) CHECK(k.matrix(i, j) == 0.0);
            }
        }
        CHECK_NOTHROW(k.validate());
    }
}

TEST_CASE("kernel chain reproduces the weights to second order") {
    const auto params = DecayParams::make(0.002, 1.0, 100);
    const auto chain = decay_kernel_chain(params);
    REQUIRE(chain.size() == 100);
    Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
    const double ge = params.gamma * params.eta;
    for (int n = 0; n < 100; ++n) {
        Eigen::VectorXd padded = Eigen::VectorXd::Zero(chain[n].size());
        padded.head(p.size()) = p;
        p = chain[n].matrix * padded;
        const auto w = decay_weights(params, n + 1);
        CHECK((p - w.p).cwiseAbs().maxCoeff() <= 2.0 * (n + 1) * ge * ge);
    }
}

// ----------------------------------------------------------------------------
// Full state
// ----------------------------------------------------------------------------

TEST_CASE("full decay state") {
    const auto params = DecayParams::make(0.01, 1.0, 12);
    const auto family = pointer::orthogonal_pointer_family(14);

    const auto start = decay_full_state(params, family, 0.0);
    CHECK(start.completed_windows == 0);
    CHECK(std::abs(std::abs(start.state.amplitudes()(0, 0)) - 1.0) < 1e-15);
    CHECK(std::abs(start.state.norm() - 1.0) < 1e-15);

    for (int n = 1; n <= 12; ++n) {
        const auto s = decay_full_state(params, family, n * params.eta);
        CHECK(s.norm_deficit < 1e-12);
        const auto spec = linalg::eigen_decompose(linalg::reduced_density_matrix(s.state, linalg::Side::A));
        Eigen::VectorXd w = decay_weights(params, n).p;
        // Exact window weights: exp(-2 gamma t_{j-1}) (1 - exp(-2 gamma eta)).
        Eigen::VectorXd exact = w;
        for (int j = 1; j <= n; ++j)
            exact(j) = std::exp(-2 * params.gamma * (j - 1) * params.eta) * -std::expm1(-2 * params.gamma * params.eta);
        std::sort(exact.data(), exact.data() + exact.size(), std::greater<>());
        std::sort(w.data(), w.data() + w.size(), std::greater<>());
        for (int k = 0; k <= n; ++k) {
            CHECK(std::abs(spec.probabilities(k) - exact(k)) < 1e-12);
            // The ladder agrees to second order in gamma*eta.
            CHECK(std::abs(spec.probabilities(k) - w(k)) < 4 * std::pow(params.gamma * params.eta, 2));
        }
    }
    CHECK_THROWS_AS(decay_full_state(params, pointer::orthogonal_pointer_family(5), 12.0), std::invalid_argument);
}

TEST_CASE("one-step propagator links consecutive full states") {
    const auto params = DecayParams::make(0.01, 1.0, 6);
    const auto family = pointer::orthogonal_pointer_family(8);
    for (int n = 0; n < 6; ++n) {
        const auto a = decay_full_state(params, family, n * params.eta);
        const auto b = decay_full_state(params, family, (n + 1) * params.eta);
        const Eigen::MatrixXcd u = decay_step_unitary(params, n, a.state.dim_a(), a.state.dim_b());
        CHECK(linalg::unitarity_defect(u) < 1e-14);
        CHECK((u * a.state.joint() - b.state.joint()).norm() < 1e-14);
    }
}

TEST_CASE("generic kernel from full-state frames matches the closed form") {
    const auto params = DecayParams::make(1e-3, 1.0, 8);
    const auto family = pointer::orthogonal_pointer_family(10);
    for (int n = 0; n < 8; ++n) {
        const auto a = decay_full_state(params, family, n * params.eta);
        const auto b = decay_full_state(params, family, (n + 1) * params.eta);
        const Eigen::MatrixXcd u = decay_step_unitary(params, n, a.state.dim_a(), a.state.dim_b());
        const auto fa = stochastic::BranchFrame::from_state(a.state, n * params.eta, 0.0);
        const auto fb = stochastic::BranchFrame::from_state(b.state, (n + 1) * params.eta, 0.0);
        const auto m = stochastic::match_branches(fa, fb, u);
        const auto k = stochastic::discrete_kernel(fa, fb, u, m.permutation);
        // All flow out of the undecayed branch goes to a single label, one
        // that was empty at step n (the newly opened window).
        Eigen::Index target = 0;
        const double out = k.matrix.col(0).tail(k.size() - 1).maxCoeff(&target);
        ++target;
        CHECK(fa.probabilities(target) == 0.0);
        CHECK(std::abs(out - 2 * params.gamma * params.eta) < 1e-4);
        CHECK(std::abs(k.j_matrix(target, 0) -
                       2 * params.gamma * params.eta * std::exp(-2.0 * n * params.gamma * params.eta)) < 1e-4);
        for (int i = 1; i < k.size(); ++i)
            if (i != target) CHECK(k.matrix(i, 0) == 0.0);
    }
}

// ----------------------------------------------------------------------------
// Geiger counter
// ----------------------------------------------------------------------------

TEST_CASE("no decay without coupling") {
    auto params = DecayParams::make(0.0, 1.0, 30);
    const auto r = simulate_geiger(params, 2000, 5);
    CHECK(r.window_counts[0] == 2000);
    for (std::size_t j = 1; j < r.window_counts.size(); ++j) CHECK(r.window_counts[j] == 0);
}

TEST_CASE("Geiger histories are absorbing") {
    const auto params = DecayParams::make(0.01, 1.0, 100);
    stochastic::EnsembleOptions opt;
    opt.keep_histories = true;
    const auto r = simulate_geiger(params, 20000, 9, opt);
    CHECK(r.reverse_transitions == 0);
    CHECK(r.decayed_to_decayed == 0);
    CHECK(r.multi_transition_histories == 0);
    long long total = 0;
    for (auto c : r.window_counts) total += c;
    CHECK(total == 20000);
    for (const auto& h : r.ensemble.histories) {
        int changes = 0;
        for (std::size_t s = 1; s < h.records.size(); ++s)
            if (h.records[s].second != h.records[s - 1].second) ++changes;
        CHECK(changes <= 1);
    }
}
