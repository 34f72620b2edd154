// modalsim — command-line front end.
//
//   modalsim run <config> [--seed N] [--trajectories N] [--out DIR] [--format csv|json]
//   modalsim validate <config>
//   modalsim oracle-check [--tolerance T] [--out DIR]
//
// Exit codes: 0 success, 1 acceptance failure, 2 configuration error,
// 3 numerical failure.

#include "modalsim/config.hpp"
#include "modalsim/errors.hpp"
#include "modalsim/io.hpp"
#include "modalsim/scenario.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

using modalsim::scenario::kExitConfigError;
using modalsim::scenario::kExitNumericalError;
using modalsim::scenario::kExitOk;

int report(const modalsim::scenario::RunReport& r) {
    for (const auto& n : r.notes) std::cout << n << "\n";
    for (const auto& w : r.written) std::cout << "wrote " << w << "\n";
    return r.exit_code;
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const modalsim::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modalsim: internal-view branch dynamics simulator"};
    app.set_version_flag("--version", std::string(MODALSIM_VERSION));
    app.require_subcommand(1);

    std::string run_config;
    std::optional<std::uint64_t> seed;
    std::optional<long long> trajectories;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    auto* run = app.add_subcommand("run", "run a scenario configuration");
    run->add_option("config", run_config, "scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the seed");
    run->add_option("--trajectories", trajectories, "override n_trajectories");
    run->add_option("--out", out_dir, "override output_dir");
    run->add_option("--format", format, "override output_format")->check(CLI::IsMember({"csv", "json"}));

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "check a configuration without running it");
    validate->add_option("config", validate_config, "scenario configuration (JSON)")->required()->check(CLI::ExistingFile);

    double tolerance = 1e-6;
    std::string oracle_out = "oracle_check_out";
    auto* oracle = app.add_subcommand("oracle-check", "compare lattice diagonalizations with the closed-form spectra");
    oracle->add_option("--tolerance", tolerance, "pass threshold")->check(CLI::PositiveNumber);
    oracle->add_option("--out", oracle_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (*run) {
        return guarded([&] {
            auto cfg = modalsim::config::parse_config(modalsim::io::read_file(run_config));
            if (seed) cfg.seed = *seed;
            if (trajectories) cfg.n_trajectories = *trajectories;
            if (out_dir) cfg.output_dir = *out_dir;
            if (format) cfg.output_format = *format == "json" ? modalsim::config::OutputFormat::Json
                                                             : modalsim::config::OutputFormat::Csv;
            return report(modalsim::scenario::run_scenario(cfg));
        });
    }
    if (*validate) {
        return guarded([&] {
            const auto r = modalsim::config::try_parse_config(modalsim::io::read_file(validate_config));
            if (!r.ok()) {
                std::cerr << modalsim::config::ConfigErrors(r.errors).what() << "\n";
                return kExitConfigError;
            }
            std::cout << modalsim::config::canonical_form(r.config);
            return kExitOk;
        });
    }
    if (*oracle) {
        return guarded([&] {
            const std::string doc = nlohmann::json{{"scenario", "oracle_check"},
                                                   {"output_dir", oracle_out},
                                                   {"parameters", {{"tolerance", tolerance}}}}
                                        .dump();
            return report(modalsim::scenario::run_scenario(modalsim::config::parse_config(doc)));
        });
    }
    return kExitOk;
}
