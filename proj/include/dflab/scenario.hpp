#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dflab/graph_form.hpp"
#include "dflab/metrics.hpp"
#include "dflab/spectral.hpp"

namespace dflab {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct TaskResult {
    std::string type;
    std::string name;
    bool verdict = false;      ///< the check itself passed
    bool expect_pass = true;   ///< false for declared counterexamples
    Json record;
    std::vector<CsvTable> tables;

    bool ok() const { return verdict == expect_pass; }
};

struct ScenarioOptions {
    std::optional<std::uint64_t> seed;        ///< overrides the config seed
    std::optional<std::filesystem::path> out; ///< report directory; nothing is written when empty
};

struct ScenarioResult {
    std::string name;
    Json report;
    std::vector<TaskResult> tasks;
    int exit_code = 0;  ///< 0 all verdicts as expected, 1 otherwise
};

/// Reads and parses a JSON config. Throws ConfigError.
Json load_config(const std::filesystem::path& path);

/// Resolves a config argument: an existing file, or the name of a bundled scenario.
std::filesystem::path resolve_config(const std::string& argument);

/// Directory of the bundled scenario catalog.
std::filesystem::path scenario_directory();
/// Bundled scenario files sorted by name.
std::vector<std::filesystem::path> bundled_scenarios();

ModelSpec parse_model(const Json& j);
PseudoMetric parse_metric(const Json& j, const GraphForm& g);
VertexSet parse_vertex_set(const Json& j, const GraphForm& g, const PseudoMetric* rho = nullptr);
PerturbedForm parse_perturbation(const Json* j, GraphForm g);

/// Runs every task in declared order. Throws ConfigError for configuration
/// problems and std::exception for runtime failures.
ScenarioResult run_scenario(const Json& config, const ScenarioOptions& options = {});

/// Writes report.json and the CSV tables into `dir`.
void write_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

/// Report serialised with the timing field removed.
std::string deterministic_dump(const Json& report);

/// FNV-1a digest of the canonical serialisation, as 16 hex digits.
std::string inputs_hash(const Json& j);

}  // namespace dflab
