#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lagreg/lagrangian.hpp"

namespace lagreg {

enum class Method { Rk4, Rk45 };

struct IntegrationOptions {
    Method method = Method::Rk45;
    double step = 1e-3;  // fixed step for rk4, initial step for rk45
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_condition = 1e12;
    std::size_t max_steps = 50'000'000;
    std::vector<Expression> monitored;  // evaluated at every recorded state
    std::vector<std::string> monitored_names;
};

struct TrajectoryRecord {
    Chart chart;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<double> energy;   // empty on jet charts
    std::vector<double> mu_norm;  // |(mu, mudot)|, zero on charts without multipliers
    std::vector<Vector> constraints;
    std::vector<std::string> constraint_names;

    std::size_t size() const { return times.size(); }
    /// RFC 4180 CSV: time, coordinates, diagnostics; one row per recorded state.
    void write_csv(std::ostream& out) const;
};

/// Second derivatives of the configuration coordinates from the Euler-Lagrange
/// equations. Throws SingularHessianAlongTrajectory when cond(W) > max_condition.
Vector accelerations(const LagrangianSystem& sys, const Vector& state, double max_condition = 1e12,
                     double time = 0.0);

/// Time derivative of the full chart state; the jet time coordinate advances at rate 1.
Vector euler_lagrange_field(const LagrangianSystem& sys, const Vector& state, double max_condition = 1e12,
                            double time = 0.0);

/// Integrates from t0 to t1. A zero span returns an empty record; otherwise the
/// initial state is the first row. Throws SingularHessianAlongTrajectory, StepUnderflow.
TrajectoryRecord integrate(const LagrangianSystem& sys, const Vector& initial, double t0, double t1,
                           const IntegrationOptions& options = {});

struct DeviationReport {
    double max_mu_norm = 0.0;
    double max_deviation = 0.0;  // original coordinates against the reference
    double worst_time = 0.0;
};

using ReferenceSolution = std::function<Vector(double)>;

/// `reference` returns the original-chart state at a given time. Throws ChartMismatch.
DeviationReport compare_projection(const TrajectoryRecord& traj, const Chart& original, const ReferenceSolution& reference);
/// Reference given as a record on the original chart sampled at the same times.
DeviationReport compare_projection(const TrajectoryRecord& traj, const TrajectoryRecord& reference);

struct InvariantReport {
    std::vector<double> energy_drift;  // |E(t) - E(0)|, empty on jet charts
    double max_energy_drift = 0.0;
    double max_sode_residual = 0.0;
    std::vector<double> constraint_max;  // per monitored expression
};

InvariantReport monitor_invariants(const LagrangianSystem& sys, const TrajectoryRecord& traj,
                                   const std::vector<Expression>& constraints = {});

}  // namespace lagreg
