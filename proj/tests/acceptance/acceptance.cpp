// Acceptance suite: ten criteria, one PASS/FAIL line each. Exit status is 0
// only when every criterion passes.

#include "modalsim/config.hpp"
#include "modalsim/decay.hpp"
#include "modalsim/errors.hpp"
#include "modalsim/io.hpp"
#include "modalsim/lattice.hpp"
#include "modalsim/oracles.hpp"
#include "modalsim/pointer.hpp"
#include "modalsim/scenario.hpp"
#include "modalsim/stochastic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace modalsim;
using linalg::cplx;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit;  // seconds; <= 0 means no limit
    std::function<Outcome()> run;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// ----------------------------------------------------------------------------
// 1. Gaussian oracle
// ----------------------------------------------------------------------------

Outcome gaussian_oracle() {
    double worst = 0.0;
    std::ostringstream os;
    for (double ratio : {0.1, 1.0, 4.0, 100.0}) {
        const auto check = oracles::gaussian_lattice_spectrum({ratio, 1.0}, 600, 11);
        worst = std::max(worst, check.max_relative_error);
        os << " a/b=" << ratio << ":" << sci(check.max_relative_error) << (check.refined ? "(quad)" : "");
    }
    return {worst < 1e-6, "max relative error " + sci(worst) + " for n <= 10;" + os.str()};
}

// ----------------------------------------------------------------------------
// 2. Square-well oracle
// ----------------------------------------------------------------------------

Outcome square_well_oracle() {
    bool pass = true;
    std::ostringstream os;
    for (double a : {30.0, 100.0, 300.0}) {
        const auto check = oracles::cross_check_square_well({a, 1.0, 200}, 400, 20);
        double selected_error = 0.0;
        for (std::size_t r = 0; r < check.readings.size(); ++r)
            if (check.readings[r] == check.selected) selected_error = check.max_abs_error[r];
        pass = pass && selected_error < 1e-6 && check.selected == oracles::kSelectedSquareWellReading;
        os << " aL^2=" << a << ": " << oracles::to_string(check.selected) << " " << sci(selected_error) << " (others";
        for (std::size_t r = 0; r < check.readings.size(); ++r)
            if (check.readings[r] != check.selected) os << " " << sci(check.max_abs_error[r]);
        os << ")";
    }
    return {pass, "top 20 levels at 400 sites;" + os.str()};
}

// ----------------------------------------------------------------------------
// 3. Localization transition
// ----------------------------------------------------------------------------

Outcome localization_transition() {
    const int n = 400;
    const double eps = 1.0;
    const lattice::LatticeGrid grid(eps, n, -0.5 * (n - 1) * eps);
    const auto psi = lattice::LatticeWaveFunction::gaussian(grid, 0.0, 25.0);
    const Eigen::VectorXd sites = psi.site_probabilities();
    int spanned = 0;
    for (int j = 0; j < n; ++j) spanned += sites(j) > 1e-4 * sites.maxCoeff();

    auto mean_top5 = [&](const linalg::SpectralDecomposition& s) {
        double m = 0.0;
        for (int k = 0; k < 5; ++k) m += lattice::localization_length(s.vectors.col(k), eps);
        return m / 5;
    };
    const auto coherent = linalg::eigen_decompose(lattice::gaussian_decohered_rho(psi, 10 * eps));
    const auto localized = linalg::eigen_decompose(lattice::gaussian_decohered_rho(psi, eps / 10));
    const double factor = mean_top5(coherent) / mean_top5(localized);

    Eigen::VectorXd sorted = sites;
    std::sort(sorted.data(), sorted.data() + n, std::greater<>());
    double worst = 0.0;
    int compared = 0;
    for (int j = 0; j < n; ++j) {
        if (sorted(j) <= 1e-4) continue;
        worst = std::max(worst, std::abs(localized.probabilities(j) - sorted(j)) / sorted(j));
        ++compared;
    }
    const bool pass = spanned >= 100 && factor >= 10.0 && worst < 0.01;
    return {pass, "packet spans " + std::to_string(spanned) + " sites; top-5 localization drops x" + sci(factor) +
                      "; eigenvalue vs eps|psi|^2 max rel " + sci(worst) + " over " + std::to_string(compared) +
                      " levels with p > 1e-4"};
}

// ----------------------------------------------------------------------------
// 4. Collapse plateau
// ----------------------------------------------------------------------------

Outcome collapse_plateau() {
    struct Case {
        Eigen::VectorXd p, x;
    };
    std::vector<Case> cases;
    cases.push_back({Eigen::Vector3d(0.5, 0.3, 0.2), Eigen::Vector3d(0.0, 1.0, 2.0)});
    Eigen::VectorXd p5(5), x5(5);
    p5 << 0.35, 0.25, 0.2, 0.15, 0.05;
    x5 << -1.0, 0.0, 0.5, 2.0, 3.0;
    cases.push_back({p5, x5});

    double worst_p = 0.0, worst_cross = 0.0;
    int plateau = 0;
    for (const auto& c : cases) {
        const auto family = pointer::default_pointer_family(c.x, 1000.0, 0.01, 1.0);
        for (int k = 0; k <= 200; ++k) {
            const double t = 0.02 * k / 200.0;
            const auto s = scenario::collapse_sample(c.p, family, t);
            if (!(s.max_log_overlap < std::log(1e-12))) continue;
            ++plateau;
            Eigen::VectorXd expected = c.p;
            std::sort(expected.data(), expected.data() + expected.size(), std::greater<>());
            worst_p = std::max(worst_p, (s.probabilities - expected).cwiseAbs().maxCoeff());
            worst_cross = std::max(worst_cross, s.cross.maxCoeff());
        }
    }
    const bool pass = plateau > 0 && worst_p < 1e-8 && worst_cross < 1e-6;
    return {pass, std::to_string(plateau) + " plateau samples; max |p - p_j| " + sci(worst_p) +
                      "; max cross-pointer component " + sci(worst_cross)};
}

// ----------------------------------------------------------------------------
// 5. Crossover regime law
// ----------------------------------------------------------------------------

Outcome crossover_regime() {
    bool pass = true;
    double worst_gap = 0.0;
    int wrong = 0, checks = 0;
    for (int e = -8; e <= -2; ++e) {
        const double delta = std::pow(10.0, e);
        const pointer::CrossoverParams params{0.5, 1.0, cplx(delta, 0.0), 0.0};
        const double w = std::abs(params.p0 * delta / params.a);
        for (double f : {20.0, 50.0}) {
            ++checks;
            if (scenario::crossover_match(params, f * w).is_identity()) ++wrong;
        }
        for (double f : {0.05, 0.02, 0.005}) {
            ++checks;
            if (!scenario::crossover_match(params, f * w).is_identity()) ++wrong;
        }
        // Minimum gap from direct diagonalization of the 2x2 block.
        double min_gap = 1e300;
        for (int k = -500; k <= 500; ++k) {
            const double t = params.t0 + k * w / 100.0;
            const auto s = linalg::eigen_decompose_hermitian(pointer::crossover_matrix(params, t));
            min_gap = std::min(min_gap, s.probabilities(0) - s.probabilities(1));
        }
        worst_gap = std::max(worst_gap, std::abs(min_gap - 2 * params.p0 * delta));
    }
    pass = wrong == 0 && worst_gap < 1e-12;
    return {pass, "delta 1e-8..1e-2: " + std::to_string(checks - wrong) + "/" + std::to_string(checks) +
                      " matchings as predicted (swap at eta >= 20w, identity at eta <= 0.05w); min-gap error " +
                      sci(worst_gap)};
}

// ----------------------------------------------------------------------------
// 6. Markov consistency
// ----------------------------------------------------------------------------

Outcome markov_consistency() {
    const int n_cases = 1000;
    const int n_frames = 4;
    double worst_consistency = 0.0, worst_antisym = 0.0;
    long long one_way_violations = 0, regenerated = 0;
    std::mt19937_64 gen(20240601);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int c = 0; c < n_cases; ++c) {
        Eigen::MatrixXcd psi(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) psi(i, j) = cplx(g(gen), g(gen));
        const auto s0 = linalg::BipartiteState::normalized(psi);
        Eigen::MatrixXcd h(25, 25);
        for (int i = 0; i < 25; ++i)
            for (int j = 0; j < 25; ++j) h(i, j) = cplx(g(gen), g(gen));
        h = (0.5 * (h + h.adjoint())).eval();
        double dt = 0.05 / h.norm();
        for (;;) {
            const Eigen::MatrixXcd u = expm_hermitian(h, dt);
            std::vector<stochastic::BranchFrame> frames;
            std::vector<Eigen::MatrixXcd> us;
            linalg::BipartiteState s = s0;
            frames.push_back(stochastic::BranchFrame::from_state(s, 0.0));
            for (int f = 1; f < n_frames; ++f) {
                s = linalg::apply_unitary(s, u);
                frames.push_back(stochastic::BranchFrame::from_state(s, f * dt));
                us.push_back(u);
            }
            try {
                const auto chain = stochastic::build_kernel_chain(frames, us);
                for (std::size_t n = 0; n < chain.kernels.size(); ++n) {
                    const auto& k = chain.kernels[n];
                    const Eigen::VectorXd pred = k.matrix * chain.probabilities[n];
                    worst_consistency =
                        std::max(worst_consistency, (pred - chain.probabilities[n + 1]).cwiseAbs().maxCoeff());
                    worst_antisym = std::max(worst_antisym, (k.j_matrix + k.j_matrix.transpose()).cwiseAbs().maxCoeff());
                    for (int i = 0; i < k.size(); ++i)
                        for (int j = 0; j < k.size(); ++j)
                            if (i != j && k.matrix(i, j) * k.matrix(j, i) != 0.0) ++one_way_violations;
                }
                break;
            } catch (const InfeasibleStep&) {
                ++regenerated;
                dt *= 0.5;
            }
        }
    }
    const bool pass = worst_consistency < 1e-8 && worst_antisym < 1e-8 && one_way_violations == 0;
    return {pass, std::to_string(n_cases) + " random 5-branch sequences (" + std::to_string(n_frames - 1) +
                      " steps each, " + std::to_string(regenerated) + " infeasible draws regenerated at half step): " +
                      "max |P p - p'| " + sci(worst_consistency) + ", max |J + J^T| " + sci(worst_antisym) +
                      ", one-way violations " + std::to_string(one_way_violations)};
}

// ----------------------------------------------------------------------------
// 7. Decay statistics
// ----------------------------------------------------------------------------

Outcome decay_statistics() {
    const auto params = decay::DecayParams::make(0.01, 1.0, 200);
    const long long n_traj = 100000;
    const auto r = decay::simulate_geiger(params, n_traj, 42);
    const double ge = params.gamma * params.eta;
    const double nt = static_cast<double>(n_traj);

    // Window counts: multinomial cells p_j = 2 gamma eta exp(-2 gamma (j-1) eta).
    double worst_window = 0.0, chi2 = 0.0;
    int worst_window_j = 0;
    for (int j = 1; j <= params.n_steps; ++j) {
        const double p = 2 * ge * std::exp(-2 * ge * (j - 1));
        const double z = (r.window_counts[j] - nt * p) / std::sqrt(nt * p * (1 - p));
        chi2 += z * z;
        if (std::abs(z) > worst_window) {
            worst_window = std::abs(z);
            worst_window_j = j;
        }
    }

    // Survival: fraction still in branch 0 after n steps vs exp(-2 n gamma eta).
    double worst_survival = 0.0, worst_chain = 0.0;
    int worst_survival_n = 0;
    for (int n = 1; n <= params.n_steps; ++n) {
        const double observed = static_cast<double>(r.ensemble.occupancy[n][0]);
        const double s = std::exp(-2.0 * n * ge);
        const double z = (observed - nt * s) / std::sqrt(nt * s * (1 - s));
        if (std::abs(z) > worst_survival) {
            worst_survival = std::abs(z);
            worst_survival_n = n;
        }
        const double sc = std::pow(1 - 2 * ge, n);
        worst_chain = std::max(worst_chain, std::abs(observed - nt * sc) / std::sqrt(nt * sc * (1 - sc)));
    }

    const bool pass = worst_window <= 3.0 && worst_survival <= 3.0 && r.reverse_transitions == 0 &&
                      r.decayed_to_decayed == 0;
    return {pass, "1e5 trajectories, seed 42: max window |z| " + sci(worst_window) + " (j=" +
                      std::to_string(worst_window_j) + ", chi2 " + sci(chi2) + "/200 cells); max survival |z| vs " +
                      "exp(-2n gamma eta) " + sci(worst_survival) + " (n=" + std::to_string(worst_survival_n) +
                      "), vs the chain's own (1-2 gamma eta)^n " + sci(worst_chain) + "; reverse " +
                      std::to_string(r.reverse_transitions) + ", decayed-to-decayed " +
                      std::to_string(r.decayed_to_decayed)};
}

// ----------------------------------------------------------------------------
// 8. Closed-form consistency of the decay kernel
// ----------------------------------------------------------------------------

Outcome decay_closed_form() {
    const int n_steps = 12;
    const auto params = decay::DecayParams::make(1e-3, 1.0, n_steps);
    const auto family = pointer::orthogonal_pointer_family(n_steps + 1);
    std::vector<stochastic::BranchFrame> frames;
    std::vector<Eigen::MatrixXcd> us;
    for (int n = 0; n <= n_steps; ++n) {
        const auto s = decay::decay_full_state(params, family, n * params.eta);
        frames.push_back(stochastic::BranchFrame::from_state(s.state, n * params.eta, 0.0));
        if (n < n_steps) us.push_back(decay::decay_step_unitary(params, n, s.state.dim_a(), s.state.dim_b()));
    }
    const auto chain = stochastic::build_kernel_chain(frames, us);

    // The undecayed branch is label 0 throughout (it is the only populated
    // branch of the first frame and always the largest).
    double worst = 0.0;
    bool structure = true;
    for (int n = 0; n < n_steps; ++n) {
        const auto& k = chain.kernels[n];
        const auto closed = decay::decay_kernel(params, n);
        const Eigen::VectorXd& before = chain.probabilities[n];
        const Eigen::VectorXd& after = chain.probabilities[n + 1];
        // Receiving label: the one that opens at this step.
        int receiver = -1;
        for (int i = 1; i < k.size(); ++i)
            if (k.matrix(i, 0) > 0.0) {
                if (receiver >= 0) structure = false;
                receiver = i;
            }
        if (receiver < 0 || before(receiver) != 0.0 || !(after(receiver) > 0.0)) {
            structure = false;
            continue;
        }
        worst = std::max(worst, std::abs(k.matrix(receiver, 0) - closed.matrix(n + 1, 0)));
        worst = std::max(worst, std::abs(k.matrix(0, 0) - closed.matrix(0, 0)));
        // No transitions between decayed branches and none back into branch 0.
        for (int i = 0; i < k.size(); ++i)
            for (int j = 1; j < k.size(); ++j)
                if (i != j && k.matrix(i, j) != 0.0) structure = false;
    }
    return {structure && worst < 1e-4, "gamma*eta = 1e-3, " + std::to_string(n_steps) +
                                           " steps via the generic engine: max |p - closed form| " + sci(worst) +
                                           (structure ? "; one receiving window per step, no other transitions"
                                                      : "; transition structure differs")};
}

// ----------------------------------------------------------------------------
// 9. Imperfect-device block structure
// ----------------------------------------------------------------------------

Outcome imperfect_device_blocks() {
    std::vector<Eigen::VectorXd> ps{Eigen::Vector2d(0.7, 0.3), Eigen::Vector3d(0.5, 0.3, 0.2)};
    double worst_blocks = 0.0;
    bool mixing_ok = true;
    double worst_ratio = 0.0;
    int cases = 0, max_dim = 0;
    std::ostringstream os;
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        for (int sub : {1, 2, 3, 5, 8}) {
            for (double overlap : {0.0, 1e-8, 1e-6, 1e-4}) {
                const auto device = scenario::make_imperfect_device(ps[pi], 0.05, sub, overlap, 100 + 10 * pi + sub);
                const auto full = scenario::imperfect_device_full_state(device);
                max_dim = std::max(max_dim, full.dim_a());
                const auto rho = linalg::reduced_density_matrix(full, linalg::Side::A);
                const Eigen::VectorXd blocks = pointer::imperfect_measurement_blocks(device);
                for (int i = 0; i < device.n_outcomes(); ++i) {
                    double tr = 0.0;
                    for (int l = 0; l < device.n_labels(); ++l)
                        if (device.outcome_of(l) == i) tr += rho.entries()(l, l).real();
                    worst_blocks = std::max(worst_blocks, std::abs(tr - blocks(i)));
                }
                std::vector<int> block_of(device.n_labels());
                for (int l = 0; l < device.n_labels(); ++l) block_of[l] = device.outcome_of(l);
                const auto spec = linalg::eigen_decompose(rho);
                const double cross = pointer::max_cross_block_component(spec, block_of);
                // "Environment-overlap scale": within an order of magnitude of
                // the overlap (the leading term is linear in it).
                const double scale = 10.0 * std::max(overlap, 1e-12);
                if (overlap > 0.0) worst_ratio = std::max(worst_ratio, cross / overlap);
                if (cross > scale) {
                    mixing_ok = false;
                    os << " [n=" << device.n_outcomes() << " m=" << sub << " overlap " << sci(overlap) << ": cross "
                       << sci(cross) << "]";
                }
                ++cases;
            }
        }
    }
    const bool pass = worst_blocks < 1e-10 && mixing_ok;
    return {pass, std::to_string(cases) + " devices (device dimension <= " + std::to_string(max_dim) +
                      "): brute force vs blocks " + sci(worst_blocks) +
                      (mixing_ok ? "; every eigenvector's cross-block component <= 10x env overlap (max ratio " +
                                       sci(worst_ratio) + ")"
                                 : "; block mixing above env-overlap scale:" + os.str())};
}

// ----------------------------------------------------------------------------
// 10. Determinism
// ----------------------------------------------------------------------------

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "modalsim_acceptance_determinism";
    fs::remove_all(root);
    bool identical = true;
    int compared = 0;
    for (const char* name : {"decay_geiger", "measurement_collapse", "imperfect_device"}) {
        auto cfg = config::parse_config(
            io::read_file(std::string(MODALSIM_SOURCE_DIR) + "/tools/configs/" + name + ".json"));
        std::vector<std::string> runs;
        for (const char* tag : {"a", "b"}) {
            cfg.output_dir = (root / name / tag).string();
            const auto report = scenario::run_scenario(cfg);
            if (report.exit_code != scenario::kExitOk) identical = false;
        }
        for (const auto& entry : fs::directory_iterator(root / name / "a")) {
            const auto other = root / name / "b" / entry.path().filename();
            if (!fs::exists(other) || io::read_file(entry.path().string()) != io::read_file(other.string()))
                identical = false;
            ++compared;
        }
    }

    // Worker-count invariance of the ensemble values.
    const auto params = decay::DecayParams::make(0.01, 1.0, 200);
    stochastic::EnsembleOptions one, three;
    one.workers = 1;
    three.workers = 3;
    const auto a = decay::simulate_geiger(params, 100000, 42, one);
    const auto b = decay::simulate_geiger(params, 100000, 42, three);
    const bool invariant = a.ensemble.occupancy == b.ensemble.occupancy &&
                           a.ensemble.transitions == b.ensemble.transitions && a.window_counts == b.window_counts;
    fs::remove_all(root);
    return {identical && invariant, std::to_string(compared) + " files byte-identical across repeated runs: " +
                                        (identical ? "yes" : "no") + "; 1 vs 3 workers identical: " +
                                        (invariant ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Gaussian-oracle equivalence", 30.0, gaussian_oracle},
        {2, "Square-well-oracle equivalence", 30.0, square_well_oracle},
        {3, "Localization transition", 60.0, localization_transition},
        {4, "Collapse plateau", 0.0, collapse_plateau},
        {5, "Crossover regime law", 0.0, crossover_regime},
        {6, "Markov consistency", 60.0, markov_consistency},
        {7, "Decay statistics", 120.0, decay_statistics},
        {8, "Closed-form decay kernel consistency", 0.0, decay_closed_form},
        {9, "Imperfect-device block structure", 0.0, imperfect_device_blocks},
        {10, "Determinism", 0.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = o.pass;
        std::string timing = std::to_string(secs).substr(0, std::to_string(secs).find('.') + 3) + " s";
        if (c.time_limit > 0.0) {
            timing += " of " + std::to_string(static_cast<int>(c.time_limit)) + " s";
            if (secs >= c.time_limit) pass = false;
        }
        if (!pass) ++failures;
        std::printf("%s [%2d] %s: %s (%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
