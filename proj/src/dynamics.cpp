#include "lagreg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

double multiplier_norm(const Chart& chart, const Vector& state) {
    double s = 0.0;
    for (auto i : chart.multiplier_indices()) s += state[ix(i)] * state[ix(i)];
    for (auto i : chart.multiplier_velocity_indices()) s += state[ix(i)] * state[ix(i)];
    return std::sqrt(s);
}

void record(TrajectoryRecord& rec, const LagrangianSystem& sys, const IntegrationOptions& opt, double t,
            const Vector& state) {
    rec.times.push_back(t);
    rec.states.push_back(state);
    if (sys.autonomous()) rec.energy.push_back(energy(sys, state));
    rec.mu_norm.push_back(multiplier_norm(sys.chart, state));
    if (!opt.monitored.empty()) {
        Vector values(ix(opt.monitored.size()));
        for (std::size_t k = 0; k < opt.monitored.size(); ++k) values[ix(k)] = opt.monitored[k].evaluate(as_span(state));
        rec.constraints.push_back(values);
    }
}

// Dormand-Prince 5(4) tableau
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
constexpr double kB4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

}  // namespace

Vector accelerations(const LagrangianSystem& sys, const Vector& state, double max_condition, double time) {
    const Chart& chart = sys.chart;
    const auto& vel = chart.velocity();
    const auto& cfg = chart.config();
    const auto span = as_span(state);
    const Matrix w = sys.lagrangian.hessian_block(span, vel, vel);
    std::vector<std::size_t> cols = cfg;
    if (chart.has_time()) cols.push_back(chart.time_index());
    const Matrix mixed = sys.lagrangian.hessian_block(span, vel, cols);
    const Vector grad = sys.lagrangian.eval_with_gradient(span).gradient;

    Vector rhs(ix(vel.size()));
    for (std::size_t i = 0; i < vel.size(); ++i) {
        double v = grad[ix(cfg[i])];
        for (std::size_t j = 0; j < cfg.size(); ++j) v -= mixed(ix(i), ix(j)) * state[ix(vel[j])];
        if (chart.has_time()) v -= mixed(ix(i), ix(cfg.size()));
        rhs[ix(i)] = v;
    }
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smallest = sv.size() ? sv.minCoeff() : 0.0;
    const double largest = sv.size() ? sv.maxCoeff() : 0.0;
    if (sv.size() == 0) return Vector::Zero(0);
    if (!(smallest > 0.0) || largest / smallest > max_condition)
        throw SingularHessianAlongTrajectory("velocity Hessian is singular at t = " + format_number(time) +
                                             " (smallest singular value " + format_number(smallest) + ")");
    return svd.solve(rhs);
}

Vector euler_lagrange_field(const LagrangianSystem& sys, const Vector& state, double max_condition, double time) {
    const Chart& chart = sys.chart;
    if (state.size() != ix(chart.dim())) throw DimensionMismatch("state does not match the chart");
    Vector out = Vector::Zero(state.size());
    const Vector acc = accelerations(sys, state, max_condition, time);
    for (std::size_t i = 0; i < chart.base_dim(); ++i) {
        out[ix(chart.config()[i])] = state[ix(chart.velocity()[i])];
        out[ix(chart.velocity()[i])] = acc[ix(i)];
    }
    if (chart.has_time()) out[ix(chart.time_index())] = 1.0;
    return out;
}

TrajectoryRecord integrate(const LagrangianSystem& sys, const Vector& initial, double t0, double t1,
                           const IntegrationOptions& opt) {
    const Chart& chart = sys.chart;
    if (initial.size() != ix(chart.dim())) throw DimensionMismatch("initial state does not match the chart");
    if (!(t1 >= t0)) throw PreconditionViolated("integration span must be non-negative");
    if (!(opt.step > 0.0)) throw PreconditionViolated("step must be positive");
    TrajectoryRecord rec;
    rec.chart = chart;
    rec.constraint_names = opt.monitored_names;
    if (t1 == t0) return rec;

    Vector y = initial;
    if (chart.has_time()) y[ix(chart.time_index())] = t0;
    auto field = [&](double t, const Vector& s) { return euler_lagrange_field(sys, s, opt.max_condition, t); };
    record(rec, sys, opt, t0, y);

    double t = t0;
    std::size_t steps = 0;
    if (opt.method == Method::Rk4) {
        while (t < t1) {
            double h = std::min(opt.step, t1 - t);
            const bool last = t + h >= t1 || (t1 - (t + h)) <= 1e-12 * std::max(1.0, std::fabs(t1));
            if (last) h = t1 - t;
            const Vector k1 = field(t, y);
            const Vector k2 = field(t + 0.5 * h, y + 0.5 * h * k1);
            const Vector k3 = field(t + 0.5 * h, y + 0.5 * h * k2);
            const Vector k4 = field(t + h, y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = last ? t1 : t + h;
            record(rec, sys, opt, t, y);
            if (++steps > opt.max_steps) throw StepUnderflow("step budget exhausted at t = " + format_number(t));
        }
        return rec;
    }

    double h = std::min(opt.step, t1 - t0);
    Vector k[7];
    k[0] = field(t, y);
    while (t < t1) {
        const double min_step = 1e-14 * std::max(1.0, std::fabs(t));
        if (h < min_step) throw StepUnderflow("step size " + format_number(h) + " underflowed at t = " + format_number(t));
        if (t + h > t1) h = t1 - t;
        for (int s = 1; s < 7; ++s) {
            Vector ys = y;
            for (int j = 0; j < s; ++j)
                if (kA[s][j] != 0.0) ys += h * kA[s][j] * k[j];
            k[s] = field(t + kC[s] * h, ys);
        }
        Vector y5 = y, y4 = y;
        for (int s = 0; s < 7; ++s) {
            y5 += h * kB5[s] * k[s];
            y4 += h * kB4[s] * k[s];
        }
        double err = 0.0;
        for (Idx i = 0; i < y.size(); ++i) {
            const double scale = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
            err = std::max(err, std::fabs(y5[i] - y4[i]) / scale);
        }
        if (!std::isfinite(err)) {
            h *= 0.2;
            continue;
        }
        if (err <= 1.0) {
            t = (t + h >= t1) ? t1 : t + h;
            y = y5;
            k[0] = k[6];
            record(rec, sys, opt, t, y);
            if (++steps > opt.max_steps) throw StepUnderflow("step budget exhausted at t = " + format_number(t));
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
    return rec;
}

void TrajectoryRecord::write_csv(std::ostream& out) const {
    out << "time";
    for (const auto& n : chart.names()) out << ',' << n;
    if (!chart.has_time()) out << ",energy";
    out << ",mu_norm";
    for (const auto& n : constraint_names) out << ',' << n;
    out << "\r\n";
    for (std::size_t r = 0; r < times.size(); ++r) {
        out << format_number(times[r]);
        for (Idx i = 0; i < states[r].size(); ++i) out << ',' << format_number(states[r][i]);
        if (!energy.empty()) out << ',' << format_number(energy[r]);
        out << ',' << format_number(mu_norm[r]);
        if (!constraints.empty())
            for (Idx i = 0; i < constraints[r].size(); ++i) out << ',' << format_number(constraints[r][i]);
        out << "\r\n";
    }
}

DeviationReport compare_projection(const TrajectoryRecord& traj, const Chart& original,
                                   const ReferenceSolution& reference) {
    const std::size_t n = original.dim();
    if (traj.chart.dim() < n) throw ChartMismatch("trajectory chart is smaller than the reference chart");
    for (std::size_t i = 0; i < n; ++i)
        if (traj.chart.name(i) != original.name(i))
            throw ChartMismatch("reference chart is not a prefix of the trajectory chart");
    DeviationReport rep;
    for (std::size_t r = 0; r < traj.size(); ++r) {
        const Vector expected = reference(traj.times[r]);
        if (expected.size() != ix(n)) throw ChartMismatch("reference state has the wrong dimension");
        const double dev = (traj.states[r].head(ix(n)) - expected).cwiseAbs().maxCoeff();
        rep.max_mu_norm = std::max(rep.max_mu_norm, multiplier_norm(traj.chart, traj.states[r]));
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst_time = traj.times[r];
        }
    }
    return rep;
}

DeviationReport compare_projection(const TrajectoryRecord& traj, const TrajectoryRecord& reference) {
    if (traj.size() != reference.size()) throw PreconditionViolated("trajectories have different sample counts");
    for (std::size_t r = 0; r < traj.size(); ++r)
        if (std::fabs(traj.times[r] - reference.times[r]) > 1e-12 * std::max(1.0, std::fabs(traj.times[r])))
            throw PreconditionViolated("trajectories are sampled at different times");
    std::size_t row = 0;
    return compare_projection(traj, reference.chart, [&](double) { return reference.states[row++]; });
}

InvariantReport monitor_invariants(const LagrangianSystem& sys, const TrajectoryRecord& traj,
                                   const std::vector<Expression>& constraints) {
    InvariantReport rep;
    rep.constraint_max.assign(constraints.size(), 0.0);
    for (std::size_t r = 0; r < traj.size(); ++r) {
        const Vector& s = traj.states[r];
        if (sys.autonomous()) {
            const double drift = std::fabs(energy(sys, s) - energy(sys, traj.states.front()));
            rep.energy_drift.push_back(drift);
            rep.max_energy_drift = std::max(rep.max_energy_drift, drift);
        }
        const Vector x = euler_lagrange_field(sys, s, std::numeric_limits<double>::infinity(), traj.times[r]);
        rep.max_sode_residual = std::max(rep.max_sode_residual, sode_residual(x, sys.chart, s));
        for (std::size_t k = 0; k < constraints.size(); ++k)
            rep.constraint_max[k] = std::max(rep.constraint_max[k], std::fabs(constraints[k].evaluate(as_span(s))));
    }
    return rep;
}

}  // namespace lagreg
