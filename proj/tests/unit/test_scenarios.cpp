#include <doctest.h>

#include <cmath>

#include "lagreg/dynamics.hpp"
#include "lagreg/errors.hpp"
#include "lagreg/scenarios.hpp"
#include "support/helpers.hpp"

using namespace lagreg;
using testing_support::vec;

namespace {
std::vector<Vector> samples_for(const Scenario& s, std::size_t count, std::uint64_t seed) {
    return testing_support::uniform_points(count, s.system.chart.dim(), s.sample_lo, s.sample_hi, seed);
}

VectorField kernel_field(const Scenario& s) {
    return [&s](const Vector& p) {
        Vector w(static_cast<Eigen::Index>(s.kernel_field.size()));
        for (std::size_t i = 0; i < s.kernel_field.size(); ++i)
            w[static_cast<Eigen::Index>(i)] = s.kernel_field[i].evaluate(as_span(p));
        return w;
    };
}
}  // namespace

TEST_CASE("catalog lists every scenario and rejects unknown names") {
    const auto names = scenario_names();
    CHECK(names.size() == 5);
    for (const auto& n : names) CHECK(load_scenario(n).name == n);
    CHECK_THROWS_AS(load_scenario("double_pendulum"), UnknownScenario);
    CHECK_THROWS_AS(load_scenario("cyclic_free_particle", {{"V", "x"}}), ConfigError);
}

TEST_CASE("expected kernel rank and complete-lift verdicts") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const Scenario s = load_scenario(name);
        REQUIRE(s.expected);
        const auto samples = samples_for(s, 20, 60);
        for (const auto& p : samples) CHECK(characteristic_distribution(s.system, p).rank() == s.expected->kernel_rank);
        CHECK(detect_complete_lift(s.system, samples).is_complete_lift == s.expected->complete_lift);
    }
}

TEST_CASE("expected consistency verdicts") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const Scenario s = load_scenario(name);
        if (!s.metric) continue;
        const auto rep = degenerate_metric_consistency(s.system.chart, *s.metric, kernel_field(s), samples_for(s, 20, 61));
        CHECK(rep.consistent == *s.expected->consistent);
        for (double r : rep.residuals) CHECK(r <= 1e-12);
    }

    const Scenario bad = load_scenario("degenerate_metric_particle", {{"A_f", "x"}});
    CHECK_FALSE(bad.expected);
    const auto rep = degenerate_metric_consistency(bad.system.chart, *bad.metric, kernel_field(bad), samples_for(bad, 20, 62));
    CHECK(rep.failing_condition == 2);
    CHECK(std::fabs(rep.residuals[1] - 1.0) <= 1e-12);
}

TEST_CASE("affine scenario variants") {
    const Scenario plain = load_scenario("affine_lagrangian");
    CHECK(plain.system.lagrangian.to_string() == "-(0.5*(x^2 + f^2))");
    const Scenario twisted = load_scenario("affine_lagrangian", {{"alpha_x", "f"}});
    const auto samples = samples_for(twisted, 10, 63);
    CHECK(characteristic_distribution(twisted.system, samples[0]).rank() == 2);
    CHECK_FALSE(detect_complete_lift(twisted.system, samples).is_complete_lift);
}

TEST_CASE("regularized scenarios follow their reference dynamics") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const Scenario s = load_scenario(name);
        if (!s.reference) continue;
        const auto evidence = detect_complete_lift(s.system, samples_for(s, 8, 64));
        const auto reg = build_regularized_lagrangian(s.system, s.product, s.connection, evidence, false, s.fibers);
        const Vector start = zero_section(reg.system.chart, {s.initial}).front();
        const auto traj = integrate(reg.system, start, 0.0, s.t_end);
        const auto dev = compare_projection(traj, s.system.chart, [&](double t) { return s.reference(s.initial, t); });
        CHECK(dev.max_mu_norm <= 1e-7);
        CHECK(dev.max_deviation <= 1e-6);
    }
}

TEST_CASE("metric regularization matches the closed form with connection terms") {
    const Scenario s = load_scenario("degenerate_metric_particle");
    const double leaf_symbol = 0.2, fiber_symbol = -0.3;  // Christoffel-type coefficients
    ConnectionSpec conn;
    conn.mode = ConnectionMode::Linear;
    conn.leaf = {{{Expression::constant(-leaf_symbol)}}};
    conn.fiber = {{{Expression::constant(-fiber_symbol)}}};
    const auto evidence = detect_complete_lift(s.system, samples_for(s, 8, 65));
    const auto reg = build_regularized_lagrangian(s.system, s.product, conn, evidence);
    const auto points = testing_support::uniform_points(50, 6, -1, 1, 66);
    for (const auto& p : points) {
        const double x = p[0], xd = p[2], fd = p[3], mu = p[4], mud = p[5];
        const double closed = 0.5 * xd * xd - 0.5 * x * x +
                              (fd - 0.5 * xd) * (mud + xd * mu * leaf_symbol + fd * mu * fiber_symbol);
        CHECK(reg.system.lagrangian.evaluate(as_span(p)) == doctest::Approx(closed).epsilon(1e-14));
    }
}

TEST_CASE("regular control is left unchanged") {
    const Scenario s = load_scenario("harmonic_oscillator");
    const auto evidence = detect_complete_lift(s.system, samples_for(s, 8, 67));
    CHECK(evidence.fiber_rank == 0);
    const auto reg = build_regularized_lagrangian(s.system, s.product, s.connection, evidence);
    CHECK(reg.fiber_rank == 0);
    CHECK(reg.system.lagrangian.to_string() == s.system.lagrangian.to_string());
    const auto traj = integrate(s.system, s.initial, 0.0, s.t_end);
    CHECK((traj.states.back() - vec({1, 0})).norm() <= 1e-7);
}
