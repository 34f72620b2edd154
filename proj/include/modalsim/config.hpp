// config.hpp — scenario configuration: a strict JSON document
//
//   {
//     "scenario": "decay_geiger",
//     "seed": 42,
//     "n_trajectories": 100000,
//     "output_dir": "out/geiger",
//     "output_format": "csv",
//     "parameters": { "gamma": 0.01, "eta": 1.0, "n_steps": 200 }
//   }
//
// Unknown keys are errors at both levels. Every violation is collected and
// reported together, each naming the offending key. Defaults are filled in
// during parsing, so the canonical form is complete and re-parses to an
// identical config.

#pragma once

#include "modalsim/errors.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace modalsim::config {

enum class Scenario {
    Localization,
    MeasurementCollapse,
    Crossover,
    DegeneracySplit,
    ImperfectDevice,
    DecayGeiger,
    OracleCheck,
};

enum class OutputFormat { Csv, Json };

std::string to_string(Scenario s);
std::string to_string(OutputFormat f);
const std::vector<std::string>& scenario_names();

struct ScenarioConfig {
    Scenario scenario{Scenario::Localization};
    nlohmann::json parameters = nlohmann::json::object();  // complete, defaults filled in
    std::uint64_t seed{1};
    long long n_trajectories{1000};
    std::string output_dir{"modalsim_out"};
    OutputFormat output_format{OutputFormat::Csv};

    bool operator==(const ScenarioConfig& other) const;
};

// Thrown by parse_config; what() lists every violation, errors() has them separately.
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct ParseResult {
    ScenarioConfig config;
    std::vector<std::string> errors;
    bool ok() const noexcept { return errors.empty(); }
};

ParseResult try_parse_config(std::string_view text);
ScenarioConfig parse_config(std::string_view text);

// Re-validates an already-built config (e.g. after command-line overrides).
std::vector<std::string> validate_config(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);
// Sorted keys, two-space indent, trailing newline.
std::string canonical_form(const ScenarioConfig& config);

// Human-readable description of the parameters each scenario accepts.
std::string describe_parameters(Scenario s);

}  // namespace modalsim::config
