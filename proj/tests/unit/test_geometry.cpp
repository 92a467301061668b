#include <doctest.h>

#include "lagreg/errors.hpp"
#include "lagreg/geometry.hpp"
#include "support/complement_instances.hpp"
#include "support/helpers.hpp"

using namespace lagreg;
using testing_support::chart_q;
using testing_support::chart_xf;
using testing_support::vec;

TEST_CASE("chart layout and thickening") {
    const Chart c = chart_xf(true);
    CHECK(c.names() == std::vector<std::string>{"x", "f", "xdot", "fdot", "t"});
    const Chart th = c.thickened(1);
    CHECK(th.dim() == 7);
    CHECK(th.name(5) == "mu_1");
    CHECK(th.name(6) == "mudot_1");
    CHECK(th.config() == std::vector<std::size_t>{0, 1, 5});
    CHECK(th.velocity() == std::vector<std::size_t>{2, 3, 6});
    for (std::size_t i = 0; i < c.dim(); ++i) CHECK(th.name(i) == c.name(i));
    CHECK(c.fiber_positions() == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(th.thickened(1), ChartMismatch);
    CHECK_THROWS_AS(Chart::tangent({{"x", Role::Leaf}, {"x", Role::Fiber}}), ConfigError);
}

TEST_CASE("vertical lift") {
    const Chart c = chart_q();
    CHECK(vertical_lift(c, vec({1}), vec({0.4, 2})) == vec({0, 1}));
    CHECK(vertical_lift(c, vec({0}), vec({0.4, 2})).isZero());
    // X = x d/dx evaluated at x = 2
    const Chart cx = Chart::tangent({{"x", Role::Leaf}});
    const Vector p = vec({2, 3});
    CHECK(vertical_lift(cx, vec({p[0]}), p) == vec({0, 2}));
    CHECK_THROWS_AS(vertical_lift(c, vec({1, 2}), vec({0, 0})), DimensionMismatch);
}

TEST_CASE("complete lift") {
    const Chart cq = chart_q();
    CHECK(complete_lift(cq, {Expression::constant(1.0)}, vec({0.3, -2})) == vec({1, 0}));
    const Chart cx = Chart::tangent({{"x", Role::Leaf}});
    CHECK(complete_lift(cx, {parse("x", cx)}, vec({2, 3})) == vec({2, 3}));
    const Chart jet = chart_q(true);
    CHECK(complete_lift(jet, {parse("t", jet)}, vec({0.5, 9, 4})) == vec({4, 1, 0}));
}

TEST_CASE("vertical endomorphism and Liouville field") {
    const Chart c = chart_q();
    Matrix s = vertical_endomorphism(c, vec({0.1, 0.2}));
    CHECK(s(1, 0) == 1.0);
    CHECK(s(0, 0) == 0.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 1) == 0.0);

    const Chart jet = chart_q(true);
    Matrix sj = vertical_endomorphism(jet, vec({0.0, 5.0, 1.0}));
    CHECK(sj.col(2) == vec({0, -5, 0}));

    for (const auto& p : testing_support::uniform_points(20, 5, -1, 1, 3)) {
        CHECK((vertical_endomorphism(chart_xf(true), p) * vertical_endomorphism(chart_xf(true), p)).isZero());
    }
    CHECK(liouville_field(c, vec({1, 0})).isZero());
    CHECK(liouville_field(chart_xf(), vec({0, 0, 2, -1})) == vec({0, 0, 2, -1}));
    for (const auto& p : testing_support::uniform_points(20, 4, -1, 1, 4))
        CHECK((vertical_endomorphism(chart_xf(), p) * liouville_field(chart_xf(), p)).isZero());
}

TEST_CASE("complete and vertical lifts are related by S") {
    const Chart c = chart_xf();
    const std::vector<Expression> field = {parse("sin(f)*x", c), parse("x^2 - f", c)};
    for (const auto& p : testing_support::uniform_points(20, 4, -1, 1, 5)) {
        const Vector xc = complete_lift(c, field, p);
        const Vector base = vec({field[0].evaluate(as_span(p)), field[1].evaluate(as_span(p))});
        CHECK((vertical_endomorphism(c, p) * xc - vertical_lift(c, base, p)).norm() < 1e-14);
    }
}

TEST_CASE("tangent structure axioms") {
    const Chart c = chart_xf();
    const auto samples = testing_support::uniform_points(10, 4, -1, 1, 6);
    const auto rep = verify_tangent_structure(c, samples);
    CHECK(rep.ok);
    CHECK(rep.nilpotency <= 1e-8);
    CHECK(rep.lie_residual <= 1e-8);
    CHECK(rep.nijenhuis <= 1e-8);
    CHECK(rep.liouville_image <= 1e-8);
    CHECK(rep.image_kernel <= 1e-8);
    CHECK_NOTHROW(rep.require());

    MatrixField perturbed = [&](const Vector& p) {
        Matrix s = vertical_endomorphism(c, p);
        s(0, 0) += 0.1;
        return s;
    };
    const auto bad = verify_tangent_structure(c, samples, perturbed);
    CHECK_FALSE(bad.ok);
    CHECK(bad.failing_axiom == "nilpotency");
    CHECK(bad.nilpotency == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(bad.require(), ToleranceExceeded);

    const Chart jet = chart_xf(true);
    const auto jet_samples = testing_support::uniform_points(10, 5, -1, 1, 7);
    const auto jrep = verify_tangent_structure(jet, jet_samples);
    CHECK(jrep.ok);
    CHECK(jrep.time_annihilation == 0.0);
    // dt(S v) = 0 for random v
    for (const auto& v : testing_support::uniform_points(20, 5, -3, 3, 8))
        CHECK((vertical_endomorphism(jet, jet_samples[0]) * v)[4] == 0.0);
}

TEST_CASE("Lagrangian complement: already Lagrangian complement is unchanged") {
    Matrix omega(4, 4);
    omega << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
    SubspaceBasis l{Matrix::Identity(4, 4).leftCols(2)};
    SubspaceBasis w{Matrix::Identity(4, 4).rightCols(2)};
    const auto rep = lagrangian_complement(omega, l, w, Matrix::Zero(4, 4));
    CHECK((rep.basis.vectors - w.vectors).norm() == 0.0);
}

TEST_CASE("Lagrangian complement: worked example") {
    // coordinates (q1, q2, p1, p2), omega = dq^i ^ dp_i
    Matrix omega(4, 4);
    omega << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
    SubspaceBasis l{Matrix::Identity(4, 4).leftCols(2)};
    Matrix w(4, 2);
    w << 0, 1, 0, 0, 1, 0, 0, 1;  // dp1, dp2 + dq1
    const auto rep = lagrangian_complement(omega, l, SubspaceBasis{w}, Matrix::Zero(4, 4));
    Matrix expected(4, 2);
    expected << 0, 0.5, 0.5, 0, 1, 0, 0, 1;  // dp1 + dq2/2, dp2 + dq1/2
    CHECK((rep.basis.vectors - expected).norm() < 1e-15);
    CHECK((rep.basis.vectors.transpose() * omega * rep.basis.vectors).norm() < 1e-15);
}

TEST_CASE("Lagrangian complement: preconditions") {
    Matrix omega(4, 4);
    omega << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
    Matrix nonisotropic(4, 2);
    nonisotropic << 1, 0, 0, 0, 0, 1, 0, 0;  // dq1, dp1
    Matrix w(4, 2);
    w << 0, 0, 1, 0, 0, 0, 0, 1;  // dq2, dp2
    CHECK_THROWS_AS(lagrangian_complement(omega, SubspaceBasis{nonisotropic}, SubspaceBasis{w}, Matrix::Zero(4, 4)),
                    PreconditionViolated);
    Matrix j = Matrix::Identity(4, 4);
    CHECK_THROWS_AS(lagrangian_complement(omega, SubspaceBasis{Matrix::Identity(4, 4).leftCols(2)},
                                          SubspaceBasis{Matrix::Identity(4, 4).rightCols(2)}, j),
                    PreconditionViolated);
    CHECK_THROWS_AS(lagrangian_complement(Matrix::Zero(4, 4), SubspaceBasis{Matrix::Identity(4, 4).leftCols(2)},
                                          SubspaceBasis{Matrix::Identity(4, 4).rightCols(2)}, Matrix::Zero(4, 4)),
                    PreconditionViolated);
}

TEST_CASE("Lagrangian complement: random symplectic instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = testing_support::random_complement_instance(seed);
        const auto rep = lagrangian_complement(inst.omega, inst.lagrangian, inst.complement, inst.j);
        CHECK(rep.isotropy <= 1e-10);
        CHECK(rep.invariance <= 1e-10);
        CHECK(rep.complementarity > 1e-10);
        CHECK(inst.j.norm() > 0.0);
    }
}
