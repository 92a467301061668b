#include "lagreg/scenarios.hpp"

#include <cmath>
#include <set>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

Vector state(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

std::string option(const ScenarioOptions& options, const std::string& key, const std::string& fallback) {
    auto it = options.find(key);
    return it == options.end() ? fallback : it->second;
}

void check_keys(const std::string& scenario, const ScenarioOptions& options, std::set<std::string> allowed) {
    for (const auto& [key, value] : options)
        if (!allowed.count(key)) throw ConfigError("scenario '" + scenario + "' has no option '" + key + "'");
}

Chart plane(bool timed) { return Chart::tangent({{"x", Role::Leaf}, {"f", Role::Fiber}}, timed); }

MetricData flat_metric(const Chart& c, const std::string& ax, const std::string& af, const std::string& v) {
    const Expression one = Expression::constant(1.0);
    const Expression zero = Expression::constant(0.0);
    return MetricData{{{one, zero}, {zero, zero}}, {parse(ax, c), parse(af, c)}, parse(v, c)};
}

AlmostProductSpec slope_spec(double p, const Expression* q) {
    AlmostProductSpec spec = AlmostProductSpec::zero(1, 1, q != nullptr);
    spec.p[0][0] = Expression::constant(p);
    if (q) spec.q[0] = *q;
    return spec;
}

Scenario cyclic_free_particle(const ScenarioOptions& options) {
    check_keys("cyclic_free_particle", options, {});
    Scenario s;
    s.name = "cyclic_free_particle";
    s.description = "free particle in x with a cyclic coordinate f";
    const Chart c = plane(false);
    s.metric = flat_metric(c, "0", "0", "0");
    s.system = LagrangianSystem(c, metric_lagrangian(c, *s.metric));
    s.kernel_field = {Expression::constant(0.0), Expression::constant(1.0)};
    s.product = AlmostProductSpec::zero(1, 1, false);
    s.expected = ExpectedProperties{2, true, true, std::nullopt};
    s.reference = [](const Vector& y0, double t) {
        return state({y0[0] + y0[2] * t, y0[1] + y0[3] * t, y0[2], y0[3]});
    };
    s.initial = state({0, 0, 1, 0});
    return s;
}

Scenario affine_lagrangian(const ScenarioOptions& options) {
    check_keys("affine_lagrangian", options, {"alpha_x", "alpha_f", "V"});
    Scenario s;
    s.name = "affine_lagrangian";
    s.description = "L = alpha(v) - V, linear in the velocities";
    const Chart c = plane(false);
    const std::string ax = option(options, "alpha_x", "0");
    const std::string af = option(options, "alpha_f", "0");
    const std::string v = option(options, "V", "0.5*(x^2 + f^2)");
    const Expression lag = parse(ax, c) * Expression::variable(c, "xdot") +
                           parse(af, c) * Expression::variable(c, "fdot") - parse(v, c);
    s.system = LagrangianSystem(c, lag);
    s.fibers = std::vector<std::size_t>{0, 1};
    s.product = AlmostProductSpec::zero(0, 2, false);
    if (options.empty()) s.expected = ExpectedProperties{4, true, false, std::size_t{1}};
    s.initial = state({0, 0, 0, 0});
    s.t_end = 1.0;
    return s;
}

Scenario degenerate_metric_particle(const ScenarioOptions& options) {
    check_keys("degenerate_metric_particle", options, {"A_x", "A_f", "V"});
    Scenario s;
    s.name = "degenerate_metric_particle";
    s.description = "degenerate metric dx^2 on (x, f) with gauge potential A and potential V";
    const Chart c = plane(false);
    s.metric = flat_metric(c, option(options, "A_x", "0"), option(options, "A_f", "0"), option(options, "V", "0.5*x^2"));
    s.system = LagrangianSystem(c, metric_lagrangian(c, *s.metric));
    s.kernel_field = {Expression::constant(0.0), Expression::constant(1.0)};
    constexpr double slope = 0.5;
    s.product = slope_spec(slope, nullptr);
    s.initial = state({0.5, 0.2, 0.3, -0.1});
    if (options.empty()) {
        s.expected = ExpectedProperties{2, true, true, std::nullopt};
        s.reference = [](const Vector& y0, double t) {
            const double x = y0[0] * std::cos(t) + y0[2] * std::sin(t);
            const double xd = -y0[0] * std::sin(t) + y0[2] * std::cos(t);
            // fdot - slope*xdot is conserved
            const double f = y0[1] + y0[3] * t + slope * (x - y0[0] - y0[2] * t);
            const double fd = y0[3] + slope * (xd - y0[2]);
            return state({x, f, xd, fd});
        };
    }
    return s;
}

Scenario degenerate_metric_timedep(const ScenarioOptions& options) {
    check_keys("degenerate_metric_timedep", options, {"V"});
    Scenario s;
    s.name = "degenerate_metric_timedep";
    s.description = "degenerate metric dx^2 on (x, f) with a time-dependent potential";
    const Chart c = plane(true);
    s.metric = flat_metric(c, "0", "0", option(options, "V", "0.5*x^2 - t*x"));
    s.system = LagrangianSystem(c, metric_lagrangian(c, *s.metric));
    s.kernel_field = {Expression::constant(0.0), Expression::constant(1.0)};
    constexpr double slope = 0.5;
    constexpr double drift = 0.1;
    const Expression q = Expression::constant(drift) * Expression::variable(c, "t");
    s.product = slope_spec(slope, &q);
    s.initial = state({0.5, 0.2, 0.3, -0.1, 0.0});
    if (options.empty()) {
        s.expected = ExpectedProperties{2, true, true, std::nullopt};
        s.reference = [](const Vector& y0, double t) {
            const double x = t + y0[0] * std::cos(t) + (y0[2] - 1.0) * std::sin(t);
            const double xd = 1.0 - y0[0] * std::sin(t) + (y0[2] - 1.0) * std::cos(t);
            // fdot - drift*t - slope*xdot is conserved
            const double f = y0[1] + y0[3] * t + 0.5 * drift * t * t + slope * (x - y0[0] - y0[2] * t);
            const double fd = y0[3] + drift * t + slope * (xd - y0[2]);
            return state({x, f, xd, fd, t});
        };
    }
    return s;
}

Scenario harmonic_oscillator(const ScenarioOptions& options) {
    check_keys("harmonic_oscillator", options, {});
    Scenario s;
    s.name = "harmonic_oscillator";
    s.description = "regular control: L = (qdot^2 - q^2)/2";
    const Chart c = Chart::tangent({{"q", Role::Leaf}});
    s.system = LagrangianSystem(c, parse("0.5*(qdot^2 - q^2)", c));
    s.expected = ExpectedProperties{0, true, true, std::nullopt};
    s.reference = [](const Vector& y0, double t) {
        return state({y0[0] * std::cos(t) + y0[1] * std::sin(t), -y0[0] * std::sin(t) + y0[1] * std::cos(t)});
    };
    s.initial = state({1, 0});
    s.t_end = 2 * M_PI;
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
    return {"cyclic_free_particle", "affine_lagrangian", "degenerate_metric_particle", "degenerate_metric_timedep",
            "harmonic_oscillator"};
}

Scenario load_scenario(const std::string& name, const ScenarioOptions& options) {
    if (name == "cyclic_free_particle") return cyclic_free_particle(options);
    if (name == "affine_lagrangian") return affine_lagrangian(options);
    if (name == "degenerate_metric_particle") return degenerate_metric_particle(options);
    if (name == "degenerate_metric_timedep") return degenerate_metric_timedep(options);
    if (name == "harmonic_oscillator") return harmonic_oscillator(options);
    throw UnknownScenario("unknown scenario '" + name + "'");
}

}  // namespace lagreg
