#include <doctest.h>

#include <cmath>

#include "lagreg/errors.hpp"
#include "lagreg/expression.hpp"
#include "support/helpers.hpp"

using namespace lagreg;
using testing_support::chart_xf;
using testing_support::vec;

namespace {
std::span<const double> sp(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
}  // namespace

TEST_CASE("parse builds a product node for a kinetic term") {
    const Chart c = chart_xf();
    const Expression e = parse("0.5*xdot^2", c);
    CHECK(e.root().kind == NodeKind::Mul);
    CHECK(e.root().rhs->kind == NodeKind::Pow);
    CHECK(e.to_string() == "0.5*xdot^2");
}

TEST_CASE("unknown identifiers are reported by name") {
    const Chart c = chart_xf();
    try {
        parse("sin(f) + x*t", c);
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.name() == "t");
    }
}

TEST_CASE("syntax errors carry a position") {
    const Chart c = chart_xf();
    try {
        parse("x + * f", c);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.position() == 4);
    }
    CHECK_THROWS_AS(parse("(x + f", c), SyntaxError);
    CHECK_THROWS_AS(parse("sin x", c), SyntaxError);
    CHECK_THROWS_AS(parse("x f", c), SyntaxError);
    CHECK_THROWS_AS(parse("", c), SyntaxError);
}

TEST_CASE("evaluation of simple arithmetic") {
    const Chart c = chart_xf();
    CHECK(parse("0.5*(x^2 + f^2)", c).evaluate(sp(vec({3, 4, 0, 0}))) == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(parse("2^-1", c).evaluate(sp(vec({0, 0, 0, 0}))) == 0.5);
    CHECK(parse("-x^2", c).evaluate(sp(vec({3, 0, 0, 0}))) == -9.0);
    CHECK(parse("8/2/2", c).evaluate(sp(vec({0, 0, 0, 0}))) == 2.0);
    CHECK(parse("1.5e1 - 5", c).evaluate(sp(vec({0, 0, 0, 0}))) == 10.0);
}

TEST_CASE("gradients of the documented examples") {
    const Chart c = chart_xf();
    auto g1 = parse("x^2", c).eval_with_gradient(sp(vec({2, 0, 0, 0})));
    CHECK(g1.value == 4.0);
    CHECK(g1.gradient[0] == 4.0);
    CHECK(g1.gradient.tail(3).isZero());

    auto g2 = parse("0.5*xdot^2", c).eval_with_gradient(sp(vec({0, 0, 3, 0})));
    CHECK(g2.value == 4.5);
    CHECK(g2.gradient[2] == 3.0);
    CHECK(g2.gradient[0] == 0.0);
    CHECK(g2.gradient[1] == 0.0);
    CHECK(g2.gradient[3] == 0.0);

    const Expression e3 = parse("sin(f)*x", c);
    const Vector p3 = vec({2, 0, 0, 0});
    auto g3 = e3.eval_with_gradient(sp(p3));
    CHECK(g3.value == 0.0);
    CHECK(g3.gradient[0] == 0.0);
    CHECK(g3.gradient[1] == 2.0);
    const Vector fd = testing_support::fd_gradient(e3, p3, 1e-6);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(std::fabs(g3.gradient[i] - fd[i]) <= 1e-9 * std::max(1.0, std::fabs(fd[i])));
}

TEST_CASE("hessian blocks via nested duals") {
    const Chart c = chart_xf();
    const std::vector<std::size_t> vel = c.velocity();
    double asym = -1.0;
    Matrix h1 = parse("0.5*xdot^2", c).hessian_block(sp(vec({0, 0, 0.3, 0.2})), vel, vel, &asym);
    CHECK(h1(0, 0) == 1.0);
    CHECK(h1(0, 1) == 0.0);
    CHECK(h1(1, 1) == 0.0);
    CHECK(asym == 0.0);

    Matrix h2 = parse("xdot*fdot", c).hessian_block(sp(vec({0, 0, 0.3, 0.2})), vel, vel);
    CHECK(h2(0, 0) == 0.0);
    CHECK(h2(0, 1) == 1.0);
    CHECK(h2(1, 0) == 1.0);
    CHECK(h2(1, 1) == 0.0);

    // g = 1 + x^2 at x = 1; oracle: finite difference of the exact gradient
    const Expression e3 = parse("0.5*(1 + x^2)*xdot^2", c);
    const Vector p3 = vec({1, 0, 0.7, 0});
    Matrix h3 = e3.hessian_block(sp(p3), vel, vel);
    CHECK(h3(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    const double step = 1e-5;
    Vector pp = p3, pm = p3;
    pp[2] += step;
    pm[2] -= step;
    const double fd = (e3.eval_with_gradient(sp(pp)).gradient[2] - e3.eval_with_gradient(sp(pm)).gradient[2]) / (2 * step);
    CHECK(std::fabs(h3(0, 0) - fd) < 1e-8);

    // mixed block: rows velocities, columns all coordinates
    std::vector<std::size_t> all = {0, 1, 2, 3};
    Matrix h4 = e3.hessian_block(sp(p3), vel, all);
    CHECK(h4.rows() == 2);
    CHECK(h4.cols() == 4);
    CHECK(h4(0, 0) == doctest::Approx(2.0 * 1.0 * 0.7));  // d^2/dxdot dx = 2x xdot
}

TEST_CASE("domain errors name the offending subexpression") {
    const Chart c = chart_xf();
    try {
        parse("1 + log(x)", c).evaluate(sp(vec({0, 1, 0, 0})));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(e.subexpression() == "log(x)");
    }
    CHECK_THROWS_AS(parse("f/x", c).evaluate(sp(vec({0, 1, 0, 0}))), DomainError);
    CHECK_THROWS_AS(parse("x^0.5", c).eval_with_gradient(sp(vec({-1, 1, 0, 0}))), DomainError);
    CHECK_THROWS_AS(parse("x^-1", c).evaluate(sp(vec({0, 1, 0, 0}))), DomainError);
    CHECK(parse("x^0.5", c).evaluate(sp(vec({4, 0, 0, 0}))) == 2.0);
}

TEST_CASE("printer keeps structure and round-trips") {
    const Chart c = chart_xf();
    CHECK(parse("x - (f - xdot)", c).to_string() == "x - (f - xdot)");
    CHECK(parse("(x - f) - xdot", c).to_string() == "x - f - xdot");
    CHECK(parse("x/(f*xdot)", c).to_string() == "x/(f*xdot)");
    CHECK(parse("(-x)^2", c).to_string() == "(-x)^2");
    CHECK(parse("x^-2", c).to_string() == "x^-2");
    CHECK(parse("-(x + f)", c).to_string() == "-(x + f)");

    std::mt19937_64 rng(11);
    const std::vector<std::string> names = {"x", "f", "xdot", "fdot"};
    const auto points = testing_support::uniform_points(100, 4, -2.0, 2.0, 12);
    for (int trial = 0; trial < 25; ++trial) {
        std::string src = testing_support::random_polynomial(names, 4, rng);
        src = "sin(" + src + ")*exp(x/3) - cos(f)^2/(2 + xdot^2)";
        const Expression a = parse(src, c);
        const Expression b = parse(a.to_string(), c);
        CHECK(b.to_string() == a.to_string());
        for (const auto& p : points) CHECK(a.evaluate(sp(p)) == b.evaluate(sp(p)));
    }
}

TEST_CASE("builder folds neutral elements") {
    const Chart c = chart_xf();
    const Expression x = Expression::variable(c, "x");
    const Expression zero = Expression::constant(0.0);
    const Expression one = Expression::constant(1.0);
    CHECK((x + zero).to_string() == "x");
    CHECK((zero - x).to_string() == "-x");
    CHECK((x * zero).is_zero());
    CHECK((one * x).to_string() == "x");
    CHECK((Expression::constant(2.0) * Expression::constant(3.0)).constant_value() == 6.0);
    CHECK((x * (x + Expression::constant(1.0))).to_string() == "x*(x + 1)");
}

TEST_CASE("random polynomial gradients agree with finite differences") {
    const Chart c = chart_xf();
    const std::vector<std::string> names = {"x", "f", "xdot", "fdot"};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        const Expression e = parse(testing_support::random_polynomial(names, 4, rng), c);
        Vector p(4);
        for (auto& v : p) v = u(rng);
        const Vector g = e.eval_with_gradient(sp(p)).gradient;
        const Vector fd = testing_support::fd_gradient(e, p, 1e-5);
        CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("evaluation is bit-reproducible") {
    const Chart c = chart_xf();
    const Expression e = parse("exp(sin(x)*f) + log(2 + xdot^2)/3", c);
    const Vector p = vec({0.3, -1.2, 0.7, 0.1});
    const auto a = e.eval_with_gradient(sp(p));
    const auto b = e.eval_with_gradient(sp(p));
    CHECK(a.value == b.value);
    CHECK(a.gradient == b.gradient);
}
