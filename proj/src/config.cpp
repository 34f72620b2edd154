#include "modalsim/config.hpp"

#include "modalsim/decay.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace modalsim::config {

using nlohmann::json;

namespace {

const std::vector<std::pair<Scenario, std::string>>& scenario_table() {
    static const std::vector<std::pair<Scenario, std::string>> t = {
        {Scenario::Localization, "localization"},
        {Scenario::MeasurementCollapse, "measurement_collapse"},
        {Scenario::Crossover, "crossover"},
        {Scenario::DegeneracySplit, "degeneracy_split"},
        {Scenario::ImperfectDevice, "imperfect_device"},
        {Scenario::DecayGeiger, "decay_geiger"},
        {Scenario::OracleCheck, "oracle_check"},
    };
    return t;
}

std::optional<Scenario> scenario_from_string(const std::string& s) {
    for (const auto& [k, name] : scenario_table())
        if (name == s) return k;
    return std::nullopt;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// Parameter schemas
// ---------------------------------------------------------------------------

enum class Kind { Real, Integer, String, Bool, RealList, IntList };

using Check = std::function<std::string(const json&)>;  // "" when valid

struct Param {
    std::string name;
    Kind kind;
    bool required;
    json fallback;  // null = computed default or none
    Check check;
    std::string doc;
};

Check positive() {
    return [](const json& v) { return v.get<double>() > 0.0 ? "" : "must be positive"; };
}
Check non_negative() {
    return [](const json& v) { return v.get<double>() >= 0.0 ? "" : "must be >= 0"; };
}
Check open_unit() {
    return [](const json& v) {
        const double x = v.get<double>();
        return (x > 0.0 && x < 1.0) ? "" : "must lie in (0, 1)";
    };
}
Check half_open_unit() {
    return [](const json& v) {
        const double x = v.get<double>();
        return (x >= 0.0 && x < 1.0) ? "" : "must lie in [0, 1)";
    };
}
Check int_range(long long lo, long long hi) {
    return [lo, hi](const json& v) {
        const long long x = v.get<long long>();
        return (x >= lo && x <= hi) ? std::string()
                                    : "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    };
}
Check real_range(double lo, double hi) {
    return [lo, hi](const json& v) {
        const double x = v.get<double>();
        return (x >= lo && x <= hi) ? std::string() : "must lie in [" + fmt(lo) + ", " + fmt(hi) + "]";
    };
}
Check one_of(std::vector<std::string> options) {
    return [options](const json& v) {
        const auto s = v.get<std::string>();
        if (std::find(options.begin(), options.end(), s) != options.end()) return std::string();
        std::string msg = "must be one of";
        for (const auto& o : options) msg += " '" + o + "'";
        return msg;
    };
}
Check list_all(std::function<bool(double)> pred, std::string what, bool allow_empty) {
    return [pred, what, allow_empty](const json& v) {
        if (v.empty() && !allow_empty) return std::string("must not be empty");
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!pred(v[k].get<double>())) return "entry " + std::to_string(k) + " " + what;
        return std::string();
    };
}
Check probability_list() {
    return [](const json& v) {
        if (v.size() < 2) return std::string("needs at least two entries");
        double s = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double x = v[k].get<double>();
            if (!(x >= 0.0)) return "entry " + std::to_string(k) + " is negative";
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-10) return "must sum to 1 (sums to " + fmt(s) + ")";
        return std::string();
    };
}

const std::vector<Param>& schema(Scenario s) {
    static const std::map<Scenario, std::vector<Param>> schemas = [] {
        std::map<Scenario, std::vector<Param>> m;
        const auto pos = [](double x) { return x > 0.0; };
        m[Scenario::Localization] = {
            {"epsilon", Kind::Real, true, nullptr, positive(), "lattice spacing"},
            {"n_sites", Kind::Integer, true, nullptr, int_range(2, 4000), "number of lattice sites"},
            {"psi", Kind::String, true, nullptr, one_of({"gaussian", "uniform"}), "wave-function profile"},
            {"ell", Kind::RealList, true, nullptr, list_all(pos, "must be positive", false), "coherence lengths"},
            {"sigma", Kind::Real, false, nullptr, positive(),
             "standard deviation of |psi|^2 (default n_sites*epsilon/8)"},
            {"center", Kind::Real, false, 0.0, nullptr, "packet center"},
            {"n_eigen", Kind::Integer, false, 5, int_range(1, 4000), "eigenvectors reported per ell"},
        };
        m[Scenario::MeasurementCollapse] = {
            {"probabilities", Kind::RealList, true, nullptr, probability_list(), "outcome probabilities p_j"},
            {"positions", Kind::RealList, true, nullptr, nullptr, "pointer positions X_j"},
            {"n_constituents", Kind::Real, false, 1000.0, real_range(1.0, 1e30), "constituents N"},
            {"epsilon", Kind::Real, false, 0.01, positive(), "device resolution"},
            {"t_rise", Kind::Real, false, 1.0, positive(), "overlap schedule time scale"},
            {"t_max", Kind::Real, false, 3.0, positive(), "last sample time"},
            {"n_times", Kind::Integer, false, 61, int_range(2, 100000), "number of sample times"},
        };
        m[Scenario::Crossover] = {
            {"p0", Kind::Real, false, 0.5, open_unit(), "mean level"},
            {"a", Kind::Real, false, 1.0,
             [](const json& v) { return v.get<double>() != 0.0 ? "" : "must be non-zero"; }, "level velocity"},
            {"delta_re", Kind::Real, false, 1e-3, nullptr, "Re Delta"},
            {"delta_im", Kind::Real, false, 0.0, nullptr, "Im Delta"},
            {"t0", Kind::Real, false, 0.0, nullptr, "crossing time"},
            {"half_span", Kind::Real, false, 0.01, positive(), "trace covers t0 +- half_span"},
            {"n_times", Kind::Integer, false, 201, int_range(2, 1000000), "number of trace points"},
            {"etas", Kind::RealList, false, json::array(), list_all(pos, "must be positive", true),
             "coarse steps for branch matching across t0"},
        };
        m[Scenario::DegeneracySplit] = {
            {"probabilities", Kind::RealList, true, nullptr, probability_list(), "outer probabilities p_j"},
            {"block_sizes", Kind::IntList, true, nullptr, nullptr, "sub-states m_j per block"},
            {"omegas", Kind::RealList, false, nullptr, nullptr, "weight-schedule frequencies (default 1, 2, ...)"},
            {"env_overlap", Kind::Real, false, 0.0, half_open_unit(), "<E_aj|E_bj> for a != b"},
            {"t_max", Kind::Real, false, 5.0, positive(), "last sample time"},
            {"n_times", Kind::Integer, false, 51, int_range(2, 100000), "number of sample times"},
        };
        m[Scenario::ImperfectDevice] = {
            {"probabilities", Kind::RealList, true, nullptr, probability_list(), "particle probabilities p_j"},
            {"leak", Kind::Real, false, 0.05, real_range(0.0, 0.5), "relative cross-outcome amplitude"},
            {"sub_states", Kind::Integer, false, 1, int_range(1, 4), "device sub-states per outcome"},
            {"env_overlap", Kind::Real, false, 0.0, half_open_unit(), "cross-outcome environment overlap"},
        };
        m[Scenario::DecayGeiger] = {
            {"gamma", Kind::Real, true, nullptr, non_negative(), "decay rate (lifetime 1/(2 gamma))"},
            {"eta", Kind::Real, true, nullptr, positive(), "device time resolution"},
            {"n_steps", Kind::Integer, true, nullptr, int_range(1, 100000), "number of windows"},
            {"e0", Kind::Real, false, 0.0, nullptr, "energy of |A> (phase only)"},
            {"tau", Kind::Real, false, nullptr, positive(), "overlap support width (default eta/100)"},
            {"keep_histories", Kind::Bool, false, false, nullptr, "emit trajectories.csv"},
        };
        m[Scenario::OracleCheck] = {
            {"tolerance", Kind::Real, false, 1e-6, positive(), "pass threshold"},
            {"b", Kind::Real, false, 1.0, positive(), "Gaussian packet parameter"},
            {"gaussian_ratios", Kind::RealList, false, json::array({0.1, 1.0, 4.0, 100.0}),
             list_all([](double x) { return x >= 0.0; }, "must be >= 0", false), "a/b values"},
            {"gaussian_sites", Kind::Integer, false, 600, int_range(10, 3000), "Gaussian lattice sites"},
            {"gaussian_levels", Kind::Integer, false, 11, int_range(1, 60), "levels compared"},
            {"square_well_a", Kind::Real, false, 100.0, positive(), "square-well decoherence strength"},
            {"square_well_width", Kind::Real, false, 1.0, positive(), "well width L"},
            {"square_well_sites", Kind::Integer, false, 400, int_range(10, 3000), "square-well lattice sites"},
            {"square_well_levels", Kind::Integer, false, 20, int_range(1, 200), "levels compared"},
        };
        return m;
    }();
    return schemas.at(s);
}

bool kind_matches(Kind k, const json& v) {
    switch (k) {
        case Kind::Real: return v.is_number() && std::isfinite(v.get<double>());
        case Kind::Integer: return v.is_number_integer();
        case Kind::String: return v.is_string();
        case Kind::Bool: return v.is_boolean();
        case Kind::RealList:
            return v.is_array() &&
                   std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number() && std::isfinite(e.get<double>()); });
        case Kind::IntList:
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
    }
    return false;
}

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::Real: return "a number";
        case Kind::Integer: return "an integer";
        case Kind::String: return "a string";
        case Kind::Bool: return "a boolean";
        case Kind::RealList: return "a list of numbers";
        case Kind::IntList: return "a list of integers";
    }
    return "?";
}

// Reals become doubles and integers int64, so the canonical form is stable.
json normalize(Kind k, const json& v) {
    switch (k) {
        case Kind::Real: return v.get<double>();
        case Kind::Integer: return v.get<long long>();
        case Kind::RealList: {
            json out = json::array();
            for (const auto& e : v) out.push_back(e.get<double>());
            return out;
        }
        case Kind::IntList: {
            json out = json::array();
            for (const auto& e : v) out.push_back(e.get<long long>());
            return out;
        }
        default: return v;
    }
}

// ---------------------------------------------------------------------------
// Cross-field checks and computed defaults
// ---------------------------------------------------------------------------

void complete_and_cross_check(Scenario s, json& p, std::vector<std::string>& errors) {
    auto err = [&](const std::string& keys, const std::string& msg) { errors.push_back(keys + ": " + msg); };
    auto has = [&](const char* k) { return p.contains(k); };

    switch (s) {
        case Scenario::Localization: {
            if (has("epsilon") && has("n_sites") && !has("sigma"))
                p["sigma"] = p["n_sites"].get<long long>() * p["epsilon"].get<double>() / 8.0;
            if (has("n_eigen") && has("n_sites") && p["n_eigen"].get<long long>() > p["n_sites"].get<long long>())
                err("parameters.n_eigen", "must not exceed n_sites");
            break;
        }
        case Scenario::MeasurementCollapse: {
            if (has("probabilities") && has("positions")) {
                const auto& pr = p["probabilities"];
                const auto& x = p["positions"];
                if (x.size() != pr.size()) {
                    err("parameters.positions", "must have one entry per probability (" + std::to_string(pr.size()) +
                                                    "), got " + std::to_string(x.size()));
                } else {
                    for (std::size_t i = 0; i < x.size(); ++i)
                        for (std::size_t j = i + 1; j < x.size(); ++j)
                            if (x[i].get<double>() == x[j].get<double>())
                                err("parameters.positions", "entries " + std::to_string(i) + " and " +
                                                                std::to_string(j) + " coincide; pointers must be distinct");
                }
            }
            break;
        }
        case Scenario::Crossover: {
            if (has("p0") && has("a") && has("delta_re") && has("delta_im") && has("half_span")) {
                const double p0 = p["p0"].get<double>();
                const double a = std::abs(p["a"].get<double>());
                const double d = p0 * std::hypot(p["delta_re"].get<double>(), p["delta_im"].get<double>());
                if (p0 - std::hypot(a * p["half_span"].get<double>(), d) < 0.0)
                    err("parameters.half_span",
                        "p0 - sqrt((a*half_span)^2 + |p0*delta|^2) < 0; the lower level would be negative");
                if (has("etas"))
                    for (std::size_t k = 0; k < p["etas"].size(); ++k)
                        if (p0 - std::hypot(a * p["etas"][k].get<double>() / 2.0, d) < 0.0)
                            err("parameters.etas", "entry " + std::to_string(k) +
                                                       " reaches a negative lower level at t0 +- eta/2");
            }
            break;
        }
        case Scenario::DegeneracySplit: {
            if (has("probabilities") && has("block_sizes")) {
                const std::size_t n = p["probabilities"].size();
                const auto& m = p["block_sizes"];
                if (m.size() != n)
                    err("parameters.block_sizes", "must have one entry per probability (" + std::to_string(n) + ")");
                long long total = 0;
                for (std::size_t k = 0; k < m.size(); ++k) {
                    const long long v = m[k].get<long long>();
                    if (v < 1 || v > 16) err("parameters.block_sizes", "entry " + std::to_string(k) + " must lie in [1, 16]");
                    total += v;
                }
                if (total > 64) err("parameters.block_sizes", "total dimension must not exceed 64");
                if (!has("omegas")) {
                    json w = json::array();
                    for (std::size_t k = 0; k < n; ++k) w.push_back(static_cast<double>(k + 1));
                    p["omegas"] = w;
                } else if (p["omegas"].size() != n) {
                    err("parameters.omegas", "must have one entry per probability (" + std::to_string(n) + ")");
                }
            }
            break;
        }
        case Scenario::ImperfectDevice: {
            if (has("probabilities") && has("sub_states")) {
                const long long labels = static_cast<long long>(p["probabilities"].size()) * p["sub_states"].get<long long>();
                if (labels > 24) err("parameters.sub_states", "number of device labels must not exceed 24");
                if (has("env_overlap") && p["env_overlap"].get<double>() * p["sub_states"].get<long long>() >= 1.0)
                    err("parameters.env_overlap",
                        "env_overlap * sub_states must be < 1 for a positive-definite environment Gram matrix");
            }
            break;
        }
        case Scenario::DecayGeiger: {
            if (has("eta") && !has("tau")) p["tau"] = p["eta"].get<double>() / 100.0;
            if (has("gamma") && has("eta") && has("n_steps") && has("tau")) {
                decay::DecayParams dp;
                dp.gamma = p["gamma"].get<double>();
                dp.eta = p["eta"].get<double>();
                dp.n_steps = static_cast<int>(p["n_steps"].get<long long>());
                dp.tau = p["tau"].get<double>();
                dp.e0 = has("e0") ? p["e0"].get<double>() : 0.0;
                try {
                    dp.validate();
                } catch (const std::invalid_argument& e) {
                    const std::string what = e.what();
                    const std::string keys =
                        what.find("gamma*tau") != std::string::npos ? "parameters.gamma, parameters.tau"
                                                                     : "parameters.gamma, parameters.eta";
                    err(keys, what);
                }
            }
            break;
        }
        case Scenario::OracleCheck: {
            if (has("gaussian_levels") && has("gaussian_sites") &&
                p["gaussian_levels"].get<long long>() > p["gaussian_sites"].get<long long>())
                err("parameters.gaussian_levels", "must not exceed gaussian_sites");
            if (has("square_well_levels") && has("square_well_sites") &&
                p["square_well_levels"].get<long long>() > p["square_well_sites"].get<long long>())
                err("parameters.square_well_levels", "must not exceed square_well_sites");
            break;
        }
    }
}

json check_parameters(Scenario s, const json& raw, std::vector<std::string>& errors) {
    json out = json::object();
    if (!raw.is_object()) {
        errors.push_back("parameters: must be an object");
        return out;
    }
    const auto& sch = schema(s);
    for (const auto& [key, value] : raw.items()) {
        const bool known = std::any_of(sch.begin(), sch.end(), [&](const Param& p) { return p.name == key; });
        if (!known) errors.push_back("parameters." + key + ": unknown key for scenario '" + to_string(s) + "'");
    }
    for (const auto& p : sch) {
        const std::string key = "parameters." + p.name;
        if (!raw.contains(p.name)) {
            if (p.required) errors.push_back(key + ": missing required key");
            else if (!p.fallback.is_null()) out[p.name] = p.fallback;
            continue;
        }
        const json& v = raw.at(p.name);
        if (!kind_matches(p.kind, v)) {
            errors.push_back(key + ": must be " + kind_name(p.kind));
            continue;
        }
        const json n = normalize(p.kind, v);
        if (p.check) {
            const std::string msg = p.check(n);
            if (!msg.empty()) {
                errors.push_back(key + ": " + msg);
                continue;
            }
        }
        out[p.name] = n;
    }
    complete_and_cross_check(s, out, errors);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

std::string to_string(Scenario s) {
    for (const auto& [k, name] : scenario_table())
        if (k == s) return name;
    return "unknown";
}

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, name] : scenario_table()) v.push_back(name);
        return v;
    }();
    return names;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
    return scenario == o.scenario && parameters == o.parameters && seed == o.seed &&
           n_trajectories == o.n_trajectories && output_dir == o.output_dir && output_format == o.output_format;
}

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
    std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " error" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  - " + e;
    return msg;
}

}  // namespace

ConfigErrors::ConfigErrors(std::vector<std::string> errors) : ConfigError(join_errors(errors)), errors_(std::move(errors)) {}

ParseResult try_parse_config(std::string_view text) {
    ParseResult r;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        r.errors.push_back(std::string("document: not valid JSON: ") + e.what());
        return r;
    }
    if (!doc.is_object()) {
        r.errors.push_back("document: top level must be an object");
        return r;
    }
    static const std::vector<std::string> allowed = {"scenario",      "seed",          "n_trajectories",
                                                     "output_dir",    "output_format", "parameters"};
    for (const auto& [key, value] : doc.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            r.errors.push_back(key + ": unknown key");

    std::optional<Scenario> scenario;
    if (!doc.contains("scenario")) {
        r.errors.push_back("scenario: missing required key");
    } else if (!doc["scenario"].is_string()) {
        r.errors.push_back("scenario: must be a string");
    } else {
        scenario = scenario_from_string(doc["scenario"].get<std::string>());
        if (!scenario) {
            std::string msg = "scenario: unknown scenario '" + doc["scenario"].get<std::string>() + "' (expected one of";
            for (const auto& n : scenario_names()) msg += " " + n;
            r.errors.push_back(msg + ")");
        }
    }

    if (doc.contains("seed")) {
        const json& v = doc["seed"];
        if (v.is_number_unsigned()) r.config.seed = v.get<std::uint64_t>();
        else if (v.is_number_integer() && v.get<long long>() >= 0) r.config.seed = static_cast<std::uint64_t>(v.get<long long>());
        else r.errors.push_back("seed: must be a non-negative 64-bit integer");
    }
    if (doc.contains("n_trajectories")) {
        const json& v = doc["n_trajectories"];
        if (v.is_number_integer() && v.get<long long>() >= 1 && v.get<long long>() <= 1000000000LL)
            r.config.n_trajectories = v.get<long long>();
        else r.errors.push_back("n_trajectories: must be an integer in [1, 1e9]");
    }
    if (doc.contains("output_dir")) {
        const json& v = doc["output_dir"];
        if (v.is_string() && !v.get<std::string>().empty()) r.config.output_dir = v.get<std::string>();
        else r.errors.push_back("output_dir: must be a non-empty string");
    }
    if (doc.contains("output_format")) {
        const json& v = doc["output_format"];
        if (v.is_string() && v.get<std::string>() == "csv") r.config.output_format = OutputFormat::Csv;
        else if (v.is_string() && v.get<std::string>() == "json") r.config.output_format = OutputFormat::Json;
        else r.errors.push_back("output_format: must be 'csv' or 'json'");
    }
    if (!doc.contains("parameters")) {
        r.errors.push_back("parameters: missing required key");
    } else if (scenario) {
        r.config.scenario = *scenario;
        r.config.parameters = check_parameters(*scenario, doc["parameters"], r.errors);
    }
    return r;
}

ScenarioConfig parse_config(std::string_view text) {
    ParseResult r = try_parse_config(text);
    if (!r.ok()) throw ConfigErrors(std::move(r.errors));
    return r.config;
}

std::vector<std::string> validate_config(const ScenarioConfig& config) {
    return try_parse_config(canonical_form(config)).errors;
}

json to_json(const ScenarioConfig& c) {
    return json{{"scenario", to_string(c.scenario)},
                {"seed", c.seed},
                {"n_trajectories", c.n_trajectories},
                {"output_dir", c.output_dir},
                {"output_format", to_string(c.output_format)},
                {"parameters", c.parameters}};
}

std::string canonical_form(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string describe_parameters(Scenario s) {
    std::string out = to_string(s) + ":\n";
    for (const auto& p : schema(s)) {
        out += "  " + p.name + " (" + kind_name(p.kind) + (p.required ? ", required" : "");
        if (!p.fallback.is_null()) out += ", default " + p.fallback.dump();
        out += "): " + p.doc + "\n";
    }
    return out;
}

}  // namespace modalsim::config
