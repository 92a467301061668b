#include <doctest.h>

#include "lagreg/errors.hpp"
#include "lagreg/lagrangian.hpp"
#include "support/helpers.hpp"

using namespace lagreg;
using testing_support::chart_q;
using testing_support::chart_xf;
using testing_support::vec;

namespace {
LagrangianSystem make(const Chart& c, const std::string& src) { return LagrangianSystem(c, parse(src, c)); }

// e_a ^ e_b as a matrix with omega(u, v) = u^T M v
Matrix wedge(Eigen::Index n, Eigen::Index a, Eigen::Index b) {
    Matrix m = Matrix::Zero(n, n);
    m(a, b) = 1.0;
    m(b, a) = -1.0;
    return m;
}
}  // namespace

TEST_CASE("Poincare-Cartan form") {
    const Chart cx = Chart::tangent({{"x", Role::Leaf}});
    CHECK(poincare_cartan(make(cx, "0.5*xdot^2"), vec({1, 2})) == vec({2, 0}));
    const Chart jet = chart_q(true);
    CHECK(poincare_cartan(make(jet, "0.5*qdot^2"), vec({0.3, 2, 1.5})) == vec({2, 0, -2}));
    CHECK(poincare_cartan(make(chart_xf(), "0"), vec({1, 2, 3, 4})).isZero());
}

TEST_CASE("Lagrangian 2-form") {
    const Chart cx = Chart::tangent({{"x", Role::Leaf}});
    CHECK(lagrangian_2form(make(cx, "0.5*xdot^2"), vec({0.4, 1.1})) == wedge(2, 0, 1));

    const Chart c = chart_xf();
    const Matrix w = lagrangian_2form(make(c, "0.5*xdot^2"), vec({0.1, 0.2, 0.3, 0.4}));
    CHECK(numerical_rank(w) == 2);
    CHECK((w * vec({0, 1, 0, 0})).isZero());
    CHECK((w * vec({0, 0, 0, 1})).isZero());

    // alpha = f dx: omega_L = -d alpha = dx ^ df
    CHECK(lagrangian_2form(make(c, "f*xdot"), vec({0.5, -0.3, 1, 2})) == wedge(4, 0, 1));

    // jet: L = 1/2 qdot^2 gives dq ^ dqdot + qdot dqdot ^ dt
    const Chart jet = chart_q(true);
    Matrix expected = wedge(3, 0, 1) + 2.0 * wedge(3, 1, 2);
    CHECK((lagrangian_2form(make(jet, "0.5*qdot^2"), vec({0, 2, 0})) - expected).norm() < 1e-15);
}

TEST_CASE("energy") {
    const Chart c = chart_xf();
    CHECK(energy(make(c, "0.5*xdot^2"), vec({0, 0, 2, 0})) == 2.0);
    // L = alpha(v) + V with V = x^2: E = -V
    CHECK(energy(make(c, "f*xdot + x^2"), vec({1.5, 0.2, 0.7, -0.4})) == doctest::Approx(-2.25));
    CHECK(energy(make(c, "0"), vec({1, 2, 3, 4})) == 0.0);
    CHECK_THROWS_AS(energy(make(chart_q(true), "0.5*qdot^2"), vec({0, 1, 0})), NotAutonomous);

    // differential against finite differences of the energy
    const auto sys = make(c, "0.5*(1 + x^2)*xdot^2 + f*xdot*fdot - cos(x)");
    const Vector p = vec({0.3, -0.5, 0.8, 1.2});
    const Vector de = energy_differential(sys, p);
    for (Eigen::Index i = 0; i < 4; ++i) {
        Vector a = p, b = p;
        a[i] += 1e-6;
        b[i] -= 1e-6;
        CHECK(de[i] == doctest::Approx((energy(sys, a) - energy(sys, b)) / 2e-6).epsilon(1e-7));
    }
}

TEST_CASE("Hessian rank") {
    const Chart c = chart_xf();
    const Vector p = vec({0.1, 0.2, 0.3, 0.4});
    CHECK(hessian_rank(make(c, "0.5*xdot^2"), p).rank == 1);
    CHECK(hessian_rank(make(c, "0.5*(xdot^2 + fdot^2)"), p).rank == 2);
    const auto h = hessian_rank(make(c, "xdot*fdot"), p);
    CHECK(h.rank == 2);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h.hessian);
    CHECK(eig.eigenvalues()[0] == doctest::Approx(-1.0));
    CHECK(eig.eigenvalues()[1] == doctest::Approx(1.0));
}

TEST_CASE("Helmholtz check") {
    const Chart c = chart_xf();
    const auto sys = make(c, "0.5*(1 + x^2)*xdot^2 + sin(f)*xdot*fdot - cos(x*f) + x*fdot");
    const auto samples = testing_support::uniform_points(50, 4, -1, 1, 21);
    const auto good = helmholtz_check([&](const Vector& p) { return lagrangian_2form(sys, p); }, c, samples);
    CHECK(good.ok);
    CHECK(good.closure_residual <= 1e-6);
    CHECK(good.symmetry_residual <= 1e-7);

    const Chart jet = chart_xf(true);
    const auto jsys = make(jet, "0.5*xdot^2*(1 + t^2) + t*x*fdot - x^2*exp(-t)");
    const auto jgood = helmholtz_check([&](const Vector& p) { return lagrangian_2form(jsys, p); }, jet,
                                       testing_support::uniform_points(50, 5, -1, 1, 22));
    CHECK(jgood.ok);

    // dxdot ^ dfdot is closed but not Lagrangian
    const auto bad = helmholtz_check([](const Vector&) { return wedge(4, 2, 3); }, c, samples);
    CHECK_FALSE(bad.ok);
    CHECK(bad.failing_condition == "symmetry");
    CHECK(bad.symmetry_residual == 1.0);
    CHECK_THROWS_AS(bad.require(), ToleranceExceeded);

    // non-closed form: x dx ^ dxdot... use f dx ^ dxdot
    const auto open = helmholtz_check([](const Vector& p) { return p[1] * wedge(4, 0, 2); }, c, samples);
    CHECK_FALSE(open.ok);
    CHECK(open.failing_condition == "closure");
    CHECK(open.closure_residual == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Hamiltonian-style thickening is never Lagrangian") {
    // (x, f, xdot, fdot, mu, mudot); omega_L of 1/2 xdot^2 plus dmudot ^ P + dmu ^ R with
    // P = df - 0.5 dx, R = dfdot - 0.5 dxdot
    const Chart th = chart_xf().thickened(1);
    const auto sys = make(th, "0.5*xdot^2");
    MatrixField hat = [&](const Vector& p) {
        Matrix m = lagrangian_2form(sys, p);
        m += wedge(6, 5, 1) - 0.5 * wedge(6, 5, 0);
        m += wedge(6, 4, 3) - 0.5 * wedge(6, 4, 2);
        return m;
    };
    const auto rep = helmholtz_check(hat, th, testing_support::uniform_points(5, 6, -1, 1, 23));
    CHECK_FALSE(rep.ok);
    CHECK(rep.failing_condition == "symmetry");
    CHECK(rep.symmetry_residual == 2.0);
    const std::size_t i = rep.worst_pair[0], j = rep.worst_pair[1];
    CHECK(((i == 4 && j == 1) || (i == 1 && j == 4)));
    CHECK(rep.worst_pair_values[0] == -rep.worst_pair_values[1]);
    CHECK(std::fabs(rep.worst_pair_values[0]) == 1.0);
}

TEST_CASE("Hamiltonian vector field") {
    const Matrix omega = wedge(2, 0, 1);  // dq ^ dp
    const auto rep = hamiltonian_field(omega, vec({1, 0}));  // dH at (1, 0) for H = (q^2 + p^2)/2
    REQUIRE(rep.ok());
    CHECK((rep.require() - vec({0, -1})).norm() < 1e-15);
    CHECK(rep.kernel_dim == 0);
    CHECK(rep.residual <= 1e-12);

    const auto inconsistent = hamiltonian_field(Matrix::Zero(2, 2), vec({1, 0}));
    CHECK_FALSE(inconsistent.ok());
    CHECK(inconsistent.residual == 1.0);
    CHECK_THROWS_AS(inconsistent.require(), Inconsistent);

    const auto trivial = hamiltonian_field(Matrix::Zero(3, 3), Vector::Zero(3));
    REQUIRE(trivial.ok());
    CHECK(trivial.require().isZero());
    CHECK(trivial.kernel_dim == 3);
}

TEST_CASE("Reeb evolution field") {
    // (q, p, t): dq ^ dp + dH ^ dt with dH = dq at (1, 0, 0)
    const Matrix omega = wedge(3, 0, 1) + wedge(3, 0, 2);
    const auto rep = reeb_evolution_field(omega, vec({0, 0, 1}));
    REQUIRE(rep.ok());
    CHECK((rep.require() - vec({0, -1, 1})).norm() < 1e-14);
    CHECK(rep.kernel_dim == 0);

    const auto free = reeb_evolution_field(Matrix::Zero(3, 3), vec({0, 0, 1}));
    REQUIRE(free.ok());
    CHECK((free.require() - vec({0, 0, 1})).norm() < 1e-15);
    CHECK(free.kernel_dim == 2);
    CHECK(free.kernel.row(2).isZero());

    CHECK_FALSE(reeb_evolution_field(Matrix::Zero(3, 3), Vector::Zero(3)).ok());
}

TEST_CASE("SODE residual") {
    const Chart cx = Chart::tangent({{"x", Role::Leaf}});
    const Vector p = vec({0.2, 1.0});
    CHECK(sode_residual(vec({p[1], -3.0}), cx, p) == 0.0);
    CHECK(sode_residual(vec({2 * p[1], 0.0}), cx, p) == 1.0);
    const Chart jet = chart_q(true);
    const Vector pj = vec({0.2, 1.7, 3.0});
    CHECK(sode_residual(vec({1.7, 4.0, 1.0}), jet, pj) == 0.0);
    CHECK(sode_residual(vec({1.7, 4.0, 2.0}), jet, pj) == doctest::Approx(1.0 + 1.7));
}
