#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagreg/dynamics.hpp"
#include "lagreg/scenarios.hpp"

namespace lagreg::app {

using Json = nlohmann::json;

enum ExitCode : int { Success = 0, ConfigFailure = 2, VerificationFailure = 3, IntegrationFailure = 4 };

struct SamplingSpec {
    std::size_t count = 20;
    std::optional<double> lo;  // defaults to the scenario box
    std::optional<double> hi;
    std::uint64_t seed = 0;
    std::vector<double> shells = {0.5, 1.0, 2.0};
};

struct IntegrationSpec {
    IntegrationOptions options;
    double t0 = 0.0;
    std::optional<double> t1;       // defaults to the scenario horizon
    std::optional<Vector> initial;  // original-chart state
    std::vector<std::pair<std::string, std::string>> monitor;  // name, expression
};

struct PcaSpec {
    std::size_t max_iter = 10;
    double tol = 1e-9;
    std::size_t grid = 21;  // per side, over configuration space when it is at most two-dimensional
};

struct RunConfig {
    Scenario problem;
    bool force = false;
    SamplingSpec sampling;
    IntegrationSpec integration;
    PcaSpec pca;
    std::string out_dir = ".";
};

/// Parses a JSON config; a "scenario" key starts from the catalog entry and the
/// remaining sections override it. Throws ConfigError naming the field.
RunConfig parse_config(const Json& doc);
RunConfig scenario_config(const std::string& name);

struct CommandResult {
    Json report;
    int exit_code = Success;
    std::optional<std::string> csv;  // simulate only
};

CommandResult cmd_analyze(const RunConfig& config);
CommandResult cmd_regularize(const RunConfig& config);
CommandResult cmd_simulate(const RunConfig& config);
Json list_scenarios();

/// Deterministic serialization: two-space indent, sorted keys, trailing newline.
std::string dump(const Json& report);

/// Uniform samples in the configured box, reproducible for a given seed.
std::vector<Vector> draw_samples(const Chart& chart, std::size_t count, double lo, double hi, std::uint64_t seed);

}  // namespace lagreg::app
