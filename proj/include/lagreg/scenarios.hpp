#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lagreg/constraints.hpp"
#include "lagreg/regularizer.hpp"

namespace lagreg {

/// Original-chart state at time t for a given original-chart initial state at t = 0.
using ReferenceDynamics = std::function<Vector(const Vector& initial, double t)>;

struct ExpectedProperties {
    std::size_t kernel_rank = 0;
    bool complete_lift = true;
    std::optional<bool> consistent;
    std::optional<std::size_t> pca_survivors;  // on the scenario's PCA grid
};

struct Scenario {
    std::string name;
    std::string description;
    LagrangianSystem system;
    std::optional<MetricData> metric;
    std::vector<Expression> kernel_field;  // base components of W for the metric checks
    AlmostProductSpec product;
    ConnectionSpec connection;
    std::optional<std::vector<std::size_t>> fibers;
    std::optional<ExpectedProperties> expected;  // known for the default options only
    ReferenceDynamics reference;  // empty when no closed form is known
    Vector initial;               // original-chart state
    double t_end = 10.0;
    double sample_lo = -1.0;
    double sample_hi = 1.0;
};

/// Expression overrides by key. Keys per scenario:
///   affine_lagrangian: alpha_x, alpha_f, V
///   degenerate_metric_particle: A_x, A_f, V
///   degenerate_metric_timedep: V
using ScenarioOptions = std::map<std::string, std::string>;

std::vector<std::string> scenario_names();

/// Throws UnknownScenario, or ConfigError for an unknown option key.
Scenario load_scenario(const std::string& name, const ScenarioOptions& options = {});

}  // namespace lagreg
