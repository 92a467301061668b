#include "lagreg/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

using Idx = Eigen::Index;

void check_point(const Chart& chart, const Vector& point) {
    if (static_cast<std::size_t>(point.size()) != chart.dim())
        throw DimensionMismatch("point has " + std::to_string(point.size()) + " components, chart has " +
                                std::to_string(chart.dim()));
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

}  // namespace

LagrangianSystem::LagrangianSystem(Chart c, Expression l) : chart(std::move(c)), lagrangian(std::move(l)) {
    if (lagrangian.required_size() > chart.dim())
        throw ChartMismatch("Lagrangian references coordinates outside the chart");
}

Vector poincare_cartan(const LagrangianSystem& sys, const Vector& point) {
    check_point(sys.chart, point);
    const ValueGradient vg = sys.lagrangian.eval_with_gradient(as_span(point));
    Vector theta = vertical_endomorphism(sys.chart, point).transpose() * vg.gradient;
    if (sys.chart.has_time()) theta[static_cast<Idx>(sys.chart.time_index())] += vg.value;
    return theta;
}

Matrix lagrangian_2form(const LagrangianSystem& sys, const Vector& point, double* asymmetry) {
    const Chart& chart = sys.chart;
    check_point(chart, point);
    const auto n = static_cast<Idx>(chart.dim());
    const auto& vel = chart.velocity();
    const auto& cfg = chart.config();
    const Matrix h = sys.lagrangian.hessian_block(as_span(point), vel, all_indices(chart.dim()));

    // jac(c, d) = d theta_c / d x^d
    Matrix jac = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < cfg.size(); ++i) jac.row(static_cast<Idx>(cfg[i])) = h.row(static_cast<Idx>(i));
    if (chart.has_time()) {
        const ValueGradient vg = sys.lagrangian.eval_with_gradient(as_span(point));
        const auto t = static_cast<Idx>(chart.time_index());
        Vector row = vg.gradient;
        for (std::size_t j = 0; j < vel.size(); ++j) {
            const auto vj = static_cast<Idx>(vel[j]);
            row -= point[vj] * h.row(static_cast<Idx>(j)).transpose();
            row[vj] -= vg.gradient[vj];
        }
        jac.row(t) = row.transpose();
    }
    Matrix omega = jac - jac.transpose();
    if (asymmetry) *asymmetry = (omega + omega.transpose()).cwiseAbs().maxCoeff();
    return omega;
}

double energy(const LagrangianSystem& sys, const Vector& point) {
    if (!sys.autonomous()) throw NotAutonomous("energy is defined only for autonomous systems");
    check_point(sys.chart, point);
    const ValueGradient vg = sys.lagrangian.eval_with_gradient(as_span(point));
    double e = -vg.value;
    for (auto v : sys.chart.velocity()) e += point[static_cast<Idx>(v)] * vg.gradient[static_cast<Idx>(v)];
    return e;
}

Vector energy_differential(const LagrangianSystem& sys, const Vector& point) {
    if (!sys.autonomous()) throw NotAutonomous("energy is defined only for autonomous systems");
    check_point(sys.chart, point);
    const auto& vel = sys.chart.velocity();
    const ValueGradient vg = sys.lagrangian.eval_with_gradient(as_span(point));
    const Matrix h = sys.lagrangian.hessian_block(as_span(point), vel, all_indices(sys.chart.dim()));
    Vector de = -vg.gradient;
    for (std::size_t j = 0; j < vel.size(); ++j) {
        const auto vj = static_cast<Idx>(vel[j]);
        de += point[vj] * h.row(static_cast<Idx>(j)).transpose();
        de[vj] += vg.gradient[vj];
    }
    return de;
}

HessianRank hessian_rank(const LagrangianSystem& sys, const Vector& point, RankTolerance tol) {
    check_point(sys.chart, point);
    HessianRank out;
    out.hessian = sys.lagrangian.hessian_block(as_span(point), sys.chart.velocity(), sys.chart.velocity());
    out.rank = numerical_rank(out.hessian, tol);
    return out;
}

void HelmholtzReport::require() const {
    if (ok) return;
    if (failing_condition == "closure")
        throw ToleranceExceeded("closure residual " + format_number(closure_residual) + " at sample " +
                                std::to_string(worst_sample) + ", triple (" + std::to_string(worst_triple[0]) + "," +
                                std::to_string(worst_triple[1]) + "," + std::to_string(worst_triple[2]) + ")");
    throw ToleranceExceeded("symmetry residual " + format_number(symmetry_residual) + " at sample " +
                            std::to_string(worst_sample) + ", pair (" + std::to_string(worst_pair[0]) + "," +
                            std::to_string(worst_pair[1]) + ")");
}

HelmholtzReport helmholtz_check(const MatrixField& omega_field, const Chart& chart, const std::vector<Vector>& samples,
                                double h, double closure_tol, double symmetry_tol) {
    HelmholtzReport rep;
    rep.closure_tolerance = closure_tol;
    rep.symmetry_tolerance = symmetry_tol;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Vector& x = samples[k];
        check_point(chart, x);
        const Idx n = x.size();
        const Matrix omega = omega_field(x);
        std::vector<Matrix> d;
        for (Idx a = 0; a < n; ++a)
            d.push_back(richardson_derivative(
                [&](double s) {
                    Vector p = x;
                    p[a] += s;
                    return omega_field(p);
                },
                h));
        for (Idx a = 0; a < n; ++a)
            for (Idx b = a + 1; b < n; ++b)
                for (Idx c = b + 1; c < n; ++c) {
                    const double r = std::fabs(d[a](b, c) - d[b](a, c) + d[c](a, b));
                    if (r > rep.closure_residual) {
                        rep.closure_residual = r;
                        if (r > closure_tol && rep.failing_condition.empty()) {
                            rep.worst_sample = k;
                            rep.worst_triple[0] = a;
                            rep.worst_triple[1] = b;
                            rep.worst_triple[2] = c;
                        }
                    }
                }
        const Matrix m = vertical_endomorphism(chart, x).transpose() * omega;
        for (Idx i = 0; i < n; ++i)
            for (Idx j = 0; j < n; ++j) {
                const double r = std::fabs(m(i, j) - m(j, i));
                if (r > rep.symmetry_residual) {
                    rep.symmetry_residual = r;
                    rep.worst_pair[0] = static_cast<std::size_t>(i);
                    rep.worst_pair[1] = static_cast<std::size_t>(j);
                    rep.worst_pair_values[0] = m(i, j);
                    rep.worst_pair_values[1] = m(j, i);
                    if (rep.failing_condition.empty() && rep.closure_residual <= closure_tol) rep.worst_sample = k;
                }
            }
        if (rep.failing_condition.empty()) {
            if (rep.closure_residual > closure_tol) rep.failing_condition = "closure";
            else if (rep.symmetry_residual > symmetry_tol) rep.failing_condition = "symmetry";
        }
    }
    rep.ok = rep.failing_condition.empty();
    return rep;
}

const Vector& LinearSolveReport::require() const {
    if (!solution) throw Inconsistent("no solution, residual " + format_number(residual));
    return *solution;
}

namespace {

LinearSolveReport solve(const Matrix& a, const Vector& b) {
    const MinNormSolution s = min_norm_solve(a, b);
    LinearSolveReport rep;
    rep.tolerance = 1e-9 * std::max({1.0, a.norm(), b.norm()});
    rep.residual = s.residual;
    rep.kernel_dim = s.kernel_dim;
    rep.kernel = s.kernel;
    if (s.residual <= rep.tolerance) rep.solution = s.solution;
    return rep;
}

}  // namespace

LinearSolveReport hamiltonian_field(const Matrix& omega, const Vector& dh) {
    if (omega.rows() != omega.cols() || omega.rows() != dh.size())
        throw DimensionMismatch("hamiltonian_field: omega and dH sizes differ");
    return solve(omega.transpose(), dh);
}

LinearSolveReport reeb_evolution_field(const Matrix& omega, const Vector& time_form) {
    const Idx n = omega.rows();
    if (omega.cols() != n || time_form.size() != n) throw DimensionMismatch("reeb_evolution_field: sizes differ");
    Matrix a(n + 1, n);
    a << omega.transpose(), time_form.transpose();
    Vector b = Vector::Zero(n + 1);
    b[n] = 1.0;
    return solve(a, b);
}

double sode_residual(const Vector& field, const Chart& chart, const Vector& point) {
    check_point(chart, point);
    if (field.size() != point.size()) throw DimensionMismatch("sode_residual: field size differs from chart");
    const Vector sx = vertical_endomorphism(chart, point) * field;
    if (chart.has_time()) return std::fabs(field[static_cast<Idx>(chart.time_index())] - 1.0) + sx.norm();
    return (sx - liouville_field(chart, point)).norm();
}

}  // namespace lagreg
