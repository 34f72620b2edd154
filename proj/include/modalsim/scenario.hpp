// scenario.hpp — deterministic execution of configured scenarios and the
// building blocks they share with the acceptance suite.

#pragma once

#include "modalsim/config.hpp"
#include "modalsim/linalg.hpp"
#include "modalsim/pointer.hpp"
#include "modalsim/stochastic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace modalsim::scenario {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAcceptanceFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// --------------------------------------------------------------------------
// Shared building blocks
// --------------------------------------------------------------------------

// Spectrum of the pointer-model rho(t) with each eigenvector attributed to the
// realized pointer state it overlaps most.
struct CollapseSample {
    double t{0.0};
    Eigen::VectorXd probabilities;  // descending
    std::vector<int> outcome;       // per eigenvector
    Eigen::VectorXd cross;          // || e_k - v_j <v_j|e_k> || with v_j the unit pointer state of outcome[k]
    double max_log_overlap{0.0};    // max over pairs of ln |<M_i|M_j>|
};
CollapseSample collapse_sample(const Eigen::VectorXd& p, const pointer::PointerFamily& family, double t);

// Purification of the normalized 2x2 crossover block: amplitudes sqrt(rho).
linalg::BipartiteState crossover_state(const pointer::CrossoverParams& params, double t);
stochastic::BranchFrame crossover_frame(const pointer::CrossoverParams& params, double t);
// Matches the frames at t0 - eta/2 and t0 + eta/2 (identity step operator).
stochastic::MatchResult crossover_match(const pointer::CrossoverParams& params, double eta);

// Real, positive Z: weight 1 on the correct outcome and `leak` on each other
// outcome, split over sub-states with seeded magnitudes in [0.5, 1]. The
// environment Gram matrix has 1 on the diagonal, 0 between sub-states of the
// same outcome and env_overlap between different outcomes. Each z[j] is
// normalized so that sum_l |Z_lj|^2 <E_lj|E_lj> = 1.
pointer::ImperfectDevice make_imperfect_device(const Eigen::VectorXd& p, double leak, int sub_states,
                                               double env_overlap, std::uint64_t seed);

// Brute-force joint state sum_j sqrt(p_j) sum_l Z_lj |M_l> (x) |j>|E_lj> with
// explicitly realized environment vectors; the device is factor A.
linalg::BipartiteState imperfect_device_full_state(const pointer::ImperfectDevice& device);

// --------------------------------------------------------------------------
// Execution
// --------------------------------------------------------------------------

struct EmittedFile {
    std::string name;
    std::string content;
};

struct ScenarioOutput {
    std::vector<EmittedFile> files;
    bool acceptance_passed{true};
    std::vector<std::string> notes;  // human-readable summary lines
};

// Runs the scenario in memory. Errors carry the scenario and step that failed;
// numerical failures stay NumericalError, precondition failures become ConfigError.
ScenarioOutput execute(const config::ScenarioConfig& config);

// JSON manifest: tool, version, scenario, seed, config checksum and canonical
// form (without output_dir), and name/size/sha256 for every emitted file. No
// timestamps.
std::string build_manifest(const config::ScenarioConfig& config, const std::vector<EmittedFile>& files);

struct RunReport {
    int exit_code{kExitOk};
    std::vector<std::string> written;  // paths, manifest last
    std::vector<std::string> notes;
};

// execute() followed by writing every file and manifest.json into output_dir.
RunReport run_scenario(const config::ScenarioConfig& config);

}  // namespace modalsim::scenario
