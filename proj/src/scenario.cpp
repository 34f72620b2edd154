#include "modalsim/scenario.hpp"

#include "modalsim/decay.hpp"
#include "modalsim/errors.hpp"
#include "modalsim/io.hpp"
#include "modalsim/lattice.hpp"
#include "modalsim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

namespace modalsim::scenario {

using config::Scenario;
using config::ScenarioConfig;
using io::Table;
using linalg::cplx;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// Runs one named step; failures are re-raised with the scenario and step in
// the message, keeping the numerical / precondition distinction.
template <typename F>
auto step(const ScenarioConfig& cfg, const std::string& name, F&& f) -> decltype(f()) {
    const std::string ctx = "scenario " + config::to_string(cfg.scenario) + ", step '" + name + "': ";
    try {
        return f();
    } catch (const GramIndefinite& e) {
        throw GramIndefinite(ctx + e.what(), e.min_eigenvalue());
    } catch (const InfeasibleStep& e) {
        throw InfeasibleStep(ctx + e.what(), e.branch(), e.diagonal());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + e.what());
    }
}

Eigen::VectorXd vec(const json& list) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(list.size()));
    for (std::size_t k = 0; k < list.size(); ++k) v(static_cast<Eigen::Index>(k)) = list[k].get<double>();
    return v;
}

void emit(ScenarioOutput& out, const ScenarioConfig& cfg, const std::string& base, const Table& t) {
    if (cfg.output_format == config::OutputFormat::Csv) out.files.push_back({base + ".csv", io::to_csv(t)});
    else out.files.push_back({base + ".json", io::to_json(t).dump(2) + "\n"});
}

long long as_ll(int x) { return static_cast<long long>(x); }

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

void run_localization(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    const double eps = p["epsilon"].get<double>();
    const int n = static_cast<int>(p["n_sites"].get<long long>());
    const int n_eigen = static_cast<int>(p["n_eigen"].get<long long>());
    const auto grid = lattice::LatticeGrid::centered(0.5 * n * eps, n);
    const auto psi = step(cfg, "wave function", [&] {
        return p["psi"].get<std::string>() == "gaussian"
                   ? lattice::LatticeWaveFunction::gaussian(grid, p["center"].get<double>(), p["sigma"].get<double>())
                   : lattice::LatticeWaveFunction::uniform(grid);
    });

    Table t({"ell", "eigen_index", "probability", "localization_length"});
    for (const auto& ell_j : p["ell"]) {
        const double ell = ell_j.get<double>();
        const auto spec = step(cfg, "diagonalize ell=" + fmt(ell), [&] {
            return linalg::eigen_decompose(lattice::gaussian_decohered_rho(psi, ell));
        });
        double mean_len = 0.0;
        for (int k = 0; k < n_eigen; ++k) {
            const double len = lattice::localization_length(spec.vectors.col(k), eps);
            mean_len += len / n_eigen;
            t.add_row({ell, as_ll(k), spec.probabilities(k), len});
        }
        out.notes.push_back("ell = " + fmt(ell) + ": mean localization length of top " + std::to_string(n_eigen) +
                            " eigenvectors = " + fmt(mean_len));
    }
    emit(out, cfg, "localization", t);
}

void run_measurement_collapse(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    const Eigen::VectorXd probs = vec(p["probabilities"]);
    const Eigen::VectorXd x = vec(p["positions"]);
    const auto family = step(cfg, "pointer family", [&] {
        return pointer::default_pointer_family(x, p["n_constituents"].get<double>(), p["epsilon"].get<double>(),
                                               p["t_rise"].get<double>());
    });
    const int n_times = static_cast<int>(p["n_times"].get<long long>());
    const double t_max = p["t_max"].get<double>();

    Table t({"t", "eigen_index", "outcome", "probability", "configured_probability", "overlap_log", "cross_component"});
    double plateau_err = 0.0, plateau_cross = 0.0;
    int plateau_points = 0;
    for (int s = 0; s < n_times; ++s) {
        const double time = t_max * s / (n_times - 1);
        const auto cs = step(cfg, "collapse t=" + fmt(time), [&] { return collapse_sample(probs, family, time); });
        for (int k = 0; k < cs.probabilities.size(); ++k)
            t.add_row({time, as_ll(k), as_ll(cs.outcome[k]), cs.probabilities(k), probs(cs.outcome[k]),
                       cs.max_log_overlap, cs.cross(k)});
        if (cs.max_log_overlap < std::log(1e-12)) {
            ++plateau_points;
            for (int k = 0; k < cs.probabilities.size(); ++k) {
                plateau_err = std::max(plateau_err, std::abs(cs.probabilities(k) - probs(cs.outcome[k])));
                plateau_cross = std::max(plateau_cross, cs.cross(k));
            }
        }
    }
    out.notes.push_back("plateau samples (overlaps < 1e-12): " + std::to_string(plateau_points) +
                        ", max |p - p_j| = " + fmt(plateau_err) + ", max cross component = " + fmt(plateau_cross));
    emit(out, cfg, "collapse", t);
}

void run_crossover(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    pointer::CrossoverParams cp;
    cp.p0 = p["p0"].get<double>();
    cp.a = p["a"].get<double>();
    cp.delta = cplx(p["delta_re"].get<double>(), p["delta_im"].get<double>());
    cp.t0 = p["t0"].get<double>();
    const double half = p["half_span"].get<double>();
    const int n_times = static_cast<int>(p["n_times"].get<long long>());

    Table t({"t", "p_plus", "p_minus", "theta", "delta_phase", "exact_crossing", "degenerate_point"});
    double min_gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_times; ++s) {
        const double time = cp.t0 - half + 2.0 * half * s / (n_times - 1);
        const auto pt = step(cfg, "spectrum", [&] { return pointer::crossover_spectrum(cp, time); });
        min_gap = std::min(min_gap, pt.p_plus - pt.p_minus);
        t.add_row({time, pt.p_plus, pt.p_minus, pt.theta, pt.delta_phase, as_ll(pt.exact_crossing ? 1 : 0),
                   as_ll(pt.degenerate_point ? 1 : 0)});
    }
    out.notes.push_back("min sampled gap p+ - p- = " + fmt(min_gap) + " (2|p0 delta| = " +
                        fmt(2.0 * cp.p0 * std::abs(cp.delta)) + ")");
    emit(out, cfg, "crossover", t);

    if (!p["etas"].empty()) {
        const double width = std::abs(cp.p0 * std::abs(cp.delta) / cp.a);
        Table m({"eta", "eta_over_width", "swapped", "score_same", "score_swap"});
        for (const auto& e : p["etas"]) {
            const double eta = e.get<double>();
            const auto r = step(cfg, "branch matching eta=" + fmt(eta), [&] { return crossover_match(cp, eta); });
            const double same = r.scores(0, 0) + r.scores(1, 1);
            const double swap = r.scores(1, 0) + r.scores(0, 1);
            m.add_row({eta, width > 0.0 ? eta / width : std::numeric_limits<double>::infinity(),
                       as_ll(r.is_identity() ? 0 : 1), same, swap});
        }
        emit(out, cfg, "crossover_matching", m);
    }
}

void run_degeneracy_split(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    pointer::BlockModel model;
    model.outer_probs = vec(p["probabilities"]);
    for (const auto& m : p["block_sizes"]) model.block_sizes.push_back(static_cast<int>(m.get<long long>()));
    const Eigen::VectorXd omegas = vec(p["omegas"]);
    const double s_env = p["env_overlap"].get<double>();
    const std::vector<int> sizes = model.block_sizes;
    model.weights = [omegas, sizes](int j, double t) {
        const int m = sizes[j];
        Eigen::VectorXcd z(m);
        for (int a = 0; a < m; ++a)
            z(a) = std::polar((1.0 + 0.3 * std::cos(omegas(j) * t + a)) / std::sqrt(a + 1.0), omegas(j) * (a + 1) * t);
        return Eigen::VectorXcd(z / z.norm());
    };
    model.pointer_gram = [sizes](int j, double) { return Eigen::MatrixXcd::Identity(sizes[j], sizes[j]).eval(); };
    model.env_gram = [sizes, s_env](int j, double) {
        const int m = sizes[j];
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Constant(m, m, s_env);
        g.diagonal().setOnes();
        return g;
    };

    const int n_times = static_cast<int>(p["n_times"].get<long long>());
    const double t_max = p["t_max"].get<double>();
    Table spec_t({"t", "eigen_index", "probability", "block", "cross_component"});
    Table block_t({"t", "block", "trace", "configured_probability"});
    double worst_cross = 0.0, worst_trace = 0.0;
    for (int s = 0; s < n_times; ++s) {
        const double time = t_max * s / (n_times - 1);
        const auto br = step(cfg, "block rho t=" + fmt(time), [&] { return pointer::split_block_rho(model, time); });
        const auto spec = step(cfg, "diagonalize t=" + fmt(time), [&] { return linalg::eigen_decompose(br.rho); });
        for (int k = 0; k < spec.size(); ++k) {
            Eigen::VectorXd weight = Eigen::VectorXd::Zero(model.n_blocks());
            for (int r = 0; r < spec.vectors.rows(); ++r) weight(br.block_of[r]) += std::norm(spec.vectors(r, k));
            Eigen::Index dom = 0;
            weight.maxCoeff(&dom);
            double outside = 0.0;
            for (int b = 0; b < model.n_blocks(); ++b)
                if (b != dom) outside += weight(b);
            const double cross = std::sqrt(outside);
            if (spec.probabilities(k) > 1e-12) worst_cross = std::max(worst_cross, cross);
            spec_t.add_row({time, as_ll(k), spec.probabilities(k), static_cast<long long>(dom), cross});
        }
        for (int b = 0; b < model.n_blocks(); ++b) {
            block_t.add_row({time, as_ll(b), br.block_traces[b], model.outer_probs(b)});
            worst_trace = std::max(worst_trace, std::abs(br.block_traces[b] - model.outer_probs(b)));
        }
    }
    out.notes.push_back("max cross-block eigenvector component = " + fmt(worst_cross) +
                        ", max |Tr rho_j - p_j| = " + fmt(worst_trace));
    emit(out, cfg, "degeneracy_split", spec_t);
    emit(out, cfg, "degeneracy_blocks", block_t);
}

void run_imperfect_device(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    const Eigen::VectorXd probs = vec(p["probabilities"]);
    const auto device = step(cfg, "device model", [&] {
        return make_imperfect_device(probs, p["leak"].get<double>(), static_cast<int>(p["sub_states"].get<long long>()),
                                     p["env_overlap"].get<double>(), cfg.seed);
    });
    const Eigen::VectorXd blocks = step(cfg, "block probabilities", [&] {
        return pointer::imperfect_measurement_blocks(device);
    });
    const auto rho_bf = step(cfg, "brute-force state", [&] {
        return linalg::reduced_density_matrix(imperfect_device_full_state(device), linalg::Side::A);
    });

    std::vector<int> block_of(device.n_labels());
    for (int l = 0; l < device.n_labels(); ++l) block_of[l] = device.outcome_of(l);
    Table bt({"outcome", "block_probability", "brute_force_probability", "abs_difference", "configured_probability"});
    double worst = 0.0;
    for (int i = 0; i < device.n_outcomes(); ++i) {
        double bf = 0.0;
        for (int l = 0; l < device.n_labels(); ++l)
            if (block_of[l] == i) bf += rho_bf.entries()(l, l).real();
        worst = std::max(worst, std::abs(bf - blocks(i)));
        bt.add_row({as_ll(i), blocks(i), bf, std::abs(bf - blocks(i)), probs(i)});
    }

    const auto spec = step(cfg, "diagonalize", [&] { return linalg::eigen_decompose(rho_bf); });
    Table st({"eigen_index", "probability", "block", "cross_component"});
    for (int k = 0; k < spec.size(); ++k) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(device.n_outcomes());
        for (int l = 0; l < device.n_labels(); ++l) w(block_of[l]) += std::norm(spec.vectors(l, k));
        Eigen::Index dom = 0;
        w.maxCoeff(&dom);
        st.add_row({as_ll(k), spec.probabilities(k), static_cast<long long>(dom), std::sqrt(std::max(0.0, w.sum() - w(dom)))});
    }
    out.notes.push_back("max |block - brute force| = " + fmt(worst) + ", max cross-block component = " +
                        fmt(pointer::max_cross_block_component(spec, block_of)));
    emit(out, cfg, "imperfect_blocks", bt);
    emit(out, cfg, "imperfect_spectrum", st);
}

void run_decay_geiger(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    decay::DecayParams dp;
    dp.gamma = p["gamma"].get<double>();
    dp.eta = p["eta"].get<double>();
    dp.n_steps = static_cast<int>(p["n_steps"].get<long long>());
    dp.e0 = p["e0"].get<double>();
    dp.tau = p["tau"].get<double>();
    const bool keep = p["keep_histories"].get<bool>();
    stochastic::EnsembleOptions opts;
    opts.keep_histories = keep;

    const auto g = step(cfg, "geiger ensemble", [&] { return decay::simulate_geiger(dp, cfg.n_trajectories, cfg.seed, opts); });
    const double n_traj = static_cast<double>(cfg.n_trajectories);

    Table hist({"window_index", "expected_p", "expected_count", "observed_count"});
    for (int j = 0; j <= dp.n_steps; ++j)
        hist.add_row({as_ll(j), g.expected_p[j], g.expected_p[j] * n_traj, g.window_counts[j]});
    emit(out, cfg, "geiger_histogram", hist);

    Table occ({"step", "undecayed", "decayed", "survival_fraction", "expected_survival"});
    for (int s = 0; s <= dp.n_steps; ++s) {
        const long long und = g.ensemble.occupancy[s][0];
        occ.add_row({as_ll(s), und, cfg.n_trajectories - und, und / n_traj,
                     std::exp(-2.0 * s * dp.gamma * dp.eta)});
    }
    emit(out, cfg, "occupancy", occ);

    Table curve({"step", "branch", "probability"});
    for (int s = 0; s <= dp.n_steps; ++s) {
        const auto w = decay::decay_weights(dp, s);
        for (int j = 0; j <= s; ++j) curve.add_row({as_ll(s), as_ll(j), w.p(j)});
    }
    emit(out, cfg, "decay_curve", curve);

    if (keep) {
        Table tr({"trajectory", "first_decay_window"});
        for (std::size_t k = 0; k < g.ensemble.histories.size(); ++k)
            tr.add_row({static_cast<long long>(k), as_ll(g.ensemble.histories[k].records.back().second)});
        emit(out, cfg, "trajectories", tr);
    }

    // The full state has (n_steps + 1)^2 amplitudes; its norm is only checked
    // when that stays small.
    json norm_deficit = nullptr;
    if (dp.n_steps <= 400) {
        const auto final_state = step(cfg, "full state", [&] {
            return decay::decay_full_state(dp, pointer::orthogonal_pointer_family(dp.n_steps + 1), dp.n_steps * dp.eta);
        });
        norm_deficit = final_state.norm_deficit;
    }
    json kernels = json::array();
    for (int n = 0; n < dp.n_steps; ++n) {
        const auto k = decay::decay_kernel(dp, n);
        kernels.push_back({{"step", n}, {"source", 0}, {"target", n + 1}, {"p_transition", k.matrix(n + 1, 0)},
                           {"p_stay", k.matrix(0, 0)}, {"j_flow", k.j_matrix(n + 1, 0)}});
    }
    const json kj = {{"gamma", dp.gamma},
                     {"eta", dp.eta},
                     {"n_steps", dp.n_steps},
                     {"final_norm_deficit", norm_deficit},
                     {"weight_sum_deficit", decay::decay_weights(dp, dp.n_steps).deficit},
                     {"kernels", kernels}};
    out.files.push_back({"decay_kernel.json", kj.dump(2) + "\n"});
    out.notes.push_back("reverse transitions: " + std::to_string(g.reverse_transitions) +
                        ", decayed-to-decayed transitions: " + std::to_string(g.decayed_to_decayed) +
                        ", undecayed at end: " + std::to_string(g.window_counts[0]) + " of " +
                        std::to_string(cfg.n_trajectories));
}

void run_oracle_check(const ScenarioConfig& cfg, ScenarioOutput& out) {
    const json& p = cfg.parameters;
    const double tol = p["tolerance"].get<double>();
    const double b = p["b"].get<double>();
    Table t({"oracle", "parameter", "level", "numeric", "closed_form", "abs_error", "relative_error", "pass"});
    bool all_pass = true;

    for (const auto& r : p["gaussian_ratios"]) {
        const double ratio = r.get<double>();
        const oracles::GaussianOracle o{ratio * b, b};
        const auto chk = step(cfg, "gaussian a/b=" + fmt(ratio), [&] {
            return oracles::gaussian_lattice_spectrum(o, static_cast<int>(p["gaussian_sites"].get<long long>()),
                                                      static_cast<int>(p["gaussian_levels"].get<long long>()));
        });
        for (int n = 0; n < chk.numeric.size(); ++n) {
            const bool ok = chk.relative_error(n) <= tol;
            all_pass = all_pass && ok;
            t.add_row({std::string("gaussian"), ratio, as_ll(n), chk.numeric(n), chk.oracle(n),
                       std::abs(chk.numeric(n) - chk.oracle(n)), chk.relative_error(n), as_ll(ok ? 1 : 0)});
        }
        out.notes.push_back("gaussian a/b = " + fmt(ratio) + ": max relative error " + fmt(chk.max_relative_error) +
                            (chk.refined ? " (quad refinement)" : ""));
    }

    const int levels = static_cast<int>(p["square_well_levels"].get<long long>());
    oracles::SquareWellOracle sw{p["square_well_a"].get<double>(), p["square_well_width"].get<double>(), levels};
    const auto cross = step(cfg, "square well cross-check", [&] {
        return oracles::cross_check_square_well(sw, static_cast<int>(p["square_well_sites"].get<long long>()), levels);
    });
    Table rt({"reading", "max_abs_error", "selected"});
    for (std::size_t k = 0; k < cross.readings.size(); ++k)
        rt.add_row({oracles::to_string(cross.readings[k]), cross.max_abs_error[k],
                    as_ll(cross.readings[k] == cross.selected ? 1 : 0)});
    const auto spec = step(cfg, "square well spectrum", [&] {
        oracles::SquareWellOracle o = sw;
        try {
            return oracles::square_well_spectrum(o, cross.selected);
        } catch (const std::invalid_argument&) {
            o.n_max = std::max(levels, 4 * levels);
            return oracles::square_well_spectrum(o, cross.selected);
        }
    });
    double sw_max = 0.0;
    for (int n = 0; n < levels; ++n) {
        const double closed = n < spec.p.size() ? spec.p(n) : 0.0;
        const double err = std::abs(cross.numeric(n) - closed);
        const bool ok = err <= tol;
        all_pass = all_pass && ok;
        sw_max = std::max(sw_max, err);
        t.add_row({std::string("square_well"), sw.a * sw.width * sw.width, as_ll(n + 1), cross.numeric(n), closed, err,
                   closed > 0.0 ? err / closed : err, as_ll(ok ? 1 : 0)});
    }
    out.notes.push_back("square well: selected reading '" + oracles::to_string(cross.selected) +
                        "', max abs error " + fmt(sw_max));
    emit(out, cfg, "oracle_check", t);
    emit(out, cfg, "square_well_readings", rt);
    out.acceptance_passed = all_pass;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared building blocks
// ---------------------------------------------------------------------------

CollapseSample collapse_sample(const Eigen::VectorXd& p, const pointer::PointerFamily& family, double t) {
    const auto rho = pointer::collapse_rho(p, family, t);
    const auto spec = linalg::eigen_decompose(rho);
    const auto real = pointer::realize_pointer_states(family, t);
    CollapseSample cs;
    cs.t = t;
    cs.probabilities = spec.probabilities;
    cs.outcome.resize(spec.size());
    cs.cross.resize(spec.size());
    Eigen::MatrixXcd unit = real.vectors;
    for (int j = 0; j < unit.cols(); ++j) {
        const double nrm = unit.col(j).norm();
        if (nrm > 0.0) unit.col(j) /= nrm;
    }
    for (int k = 0; k < spec.size(); ++k) {
        const Eigen::VectorXcd e = spec.vectors.col(k);
        Eigen::Index best = 0;
        (unit.adjoint() * e).cwiseAbs().maxCoeff(&best);
        cs.outcome[k] = static_cast<int>(best);
        const Eigen::VectorXcd v = unit.col(best);
        cs.cross(k) = (e - v * v.dot(e)).norm();
    }
    cs.max_log_overlap = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < family.n_outcomes(); ++i)
        for (int j = i + 1; j < family.n_outcomes(); ++j)
            cs.max_log_overlap = std::max(cs.max_log_overlap, family.log_overlap(i, j, t).log_magnitude);
    return cs;
}

linalg::BipartiteState crossover_state(const pointer::CrossoverParams& params, double t) {
    params.validate();
    const Eigen::Matrix2cd m = pointer::crossover_matrix(params, t);
    const Eigen::Matrix2cd rho = m / m.trace().real();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
    const Eigen::Vector2d lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-14)
        throw std::invalid_argument("crossover_state: lower level is negative at t = " + fmt(t));
    const Eigen::Vector2cd sq = lam.cwiseMax(0.0).cwiseSqrt().cast<cplx>();
    const Eigen::Matrix2cd amp = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
    return linalg::BipartiteState(Eigen::MatrixXcd(amp));
}

stochastic::BranchFrame crossover_frame(const pointer::CrossoverParams& params, double t) {
    // Levels closer than the default degeneracy tolerance are still ordered
    // strictly, so the matching sees the raw eigenvector rotation.
    return stochastic::BranchFrame::from_state(crossover_state(params, t), t, 0.0);
}

stochastic::MatchResult crossover_match(const pointer::CrossoverParams& params, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("crossover_match: eta must be positive");
    const auto prev = crossover_frame(params, params.t0 - 0.5 * eta);
    const auto next = crossover_frame(params, params.t0 + 0.5 * eta);
    return stochastic::match_branches(prev, next, Eigen::MatrixXcd::Identity(4, 4));
}

pointer::ImperfectDevice make_imperfect_device(const Eigen::VectorXd& p, double leak, int sub_states,
                                               double env_overlap, std::uint64_t seed) {
    if (sub_states < 1) throw std::invalid_argument("make_imperfect_device: sub_states must be >= 1");
    if (!(leak >= 0.0)) throw std::invalid_argument("make_imperfect_device: leak must be >= 0");
    const int n = static_cast<int>(p.size());
    pointer::ImperfectDevice d;
    d.p = p;
    d.m.assign(n, sub_states);
    const int labels = n * sub_states;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.5, 1.0);

    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(labels, labels);
    for (int l = 0; l < labels; ++l)
        for (int k = 0; k < labels; ++k)
            g(l, k) = (l == k) ? 1.0 : (d.outcome_of(l) != d.outcome_of(k) ? env_overlap : 0.0);

    for (int j = 0; j < n; ++j) {
        Eigen::VectorXcd z(labels);
        for (int l = 0; l < labels; ++l) {
            const double base = (d.outcome_of(l) == j) ? 1.0 : leak;
            z(l) = base * mag(rng) / std::sqrt(static_cast<double>(sub_states));
        }
        // Device states are orthonormal, so only the diagonal of the
        // environment Gram matrix enters the norm.
        double nrm2 = 0.0;
        for (int l = 0; l < labels; ++l) nrm2 += std::norm(z(l)) * g(l, l).real();
        if (!(nrm2 > 0.0)) throw std::invalid_argument("make_imperfect_device: zero amplitude for particle state " + std::to_string(j));
        d.z.push_back(z / std::sqrt(nrm2));
        d.env_gram.push_back(g);
    }
    d.validate_shapes();
    return d;
}

linalg::BipartiteState imperfect_device_full_state(const pointer::ImperfectDevice& device) {
    device.validate_shapes();
    const int labels = device.n_labels();
    const int n = static_cast<int>(device.p.size());
    Eigen::MatrixXcd amp = Eigen::MatrixXcd::Zero(labels, static_cast<Eigen::Index>(n) * labels);
    for (int j = 0; j < n; ++j) {
        const auto env = pointer::realize_gram(device.env_gram[j], labels);
        for (int l = 0; l < labels; ++l)
            for (int e = 0; e < labels; ++e)
                amp(l, static_cast<Eigen::Index>(j) * labels + e) = std::sqrt(device.p(j)) * device.z[j](l) * env.vectors(e, l);
    }
    return linalg::BipartiteState(std::move(amp));
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

ScenarioOutput execute(const ScenarioConfig& cfg) {
    const auto errors = config::validate_config(cfg);
    if (!errors.empty()) throw config::ConfigErrors(errors);
    ScenarioOutput out;
    switch (cfg.scenario) {
        case Scenario::Localization: run_localization(cfg, out); break;
        case Scenario::MeasurementCollapse: run_measurement_collapse(cfg, out); break;
        case Scenario::Crossover: run_crossover(cfg, out); break;
        case Scenario::DegeneracySplit: run_degeneracy_split(cfg, out); break;
        case Scenario::ImperfectDevice: run_imperfect_device(cfg, out); break;
        case Scenario::DecayGeiger: run_decay_geiger(cfg, out); break;
        case Scenario::OracleCheck: run_oracle_check(cfg, out); break;
    }
    return out;
}

std::string build_manifest(const ScenarioConfig& cfg, const std::vector<EmittedFile>& files) {
    // The output location is not part of what was computed; leaving it out
    // keeps manifests of identical runs identical wherever they are written.
    json cfg_json = config::to_json(cfg);
    cfg_json.erase("output_dir");
    const std::string canonical = cfg_json.dump(2) + "\n";
    json list = json::array();
    for (const auto& f : files)
        list.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", io::sha256_hex(f.content)}});
    const json m = {{"tool", "modalsim"},
                    {"version", MODALSIM_VERSION},
                    {"scenario", config::to_string(cfg.scenario)},
                    {"seed", cfg.seed},
                    {"config_sha256", io::sha256_hex(canonical)},
                    {"config", cfg_json},
                    {"files", list}};
    return m.dump(2) + "\n";
}

RunReport run_scenario(const ScenarioConfig& cfg) {
    ScenarioOutput out = execute(cfg);
    RunReport report;
    report.notes = out.notes;
    const std::filesystem::path dir(cfg.output_dir);
    for (const auto& f : out.files) {
        io::write_file(dir / f.name, f.content);
        report.written.push_back((dir / f.name).string());
    }
    io::write_file(dir / "manifest.json", build_manifest(cfg, out.files));
    report.written.push_back((dir / "manifest.json").string());
    report.exit_code = out.acceptance_passed ? kExitOk : kExitAcceptanceFailure;
    return report;
}

}  // namespace modalsim::scenario
