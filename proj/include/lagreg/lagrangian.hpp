#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagreg/chart.hpp"
#include "lagreg/expression.hpp"
#include "lagreg/geometry.hpp"
#include "lagreg/linalg.hpp"

namespace lagreg {

struct LagrangianSystem {
    Chart chart;
    Expression lagrangian;

    LagrangianSystem() = default;
    LagrangianSystem(Chart c, Expression l);

    bool autonomous() const { return !chart.has_time(); }
};

/// Poincare-Cartan 1-form: dL o S, plus L dt on jet charts.
Vector poincare_cartan(const LagrangianSystem& sys, const Vector& point);

/// Skew matrix of omega_L = -d theta_L with omega(u, v) = u^T M v.
Matrix lagrangian_2form(const LagrangianSystem& sys, const Vector& point, double* asymmetry = nullptr);

/// v^j dL/dv^j - L. Throws NotAutonomous on jet charts.
double energy(const LagrangianSystem& sys, const Vector& point);
Vector energy_differential(const LagrangianSystem& sys, const Vector& point);

struct HessianRank {
    Matrix hessian;  // d^2 L / dv^i dv^j
    std::size_t rank = 0;
};

HessianRank hessian_rank(const LagrangianSystem& sys, const Vector& point, RankTolerance tol = {});

struct HelmholtzReport {
    bool ok = true;
    double closure_tolerance = 1e-6;
    double symmetry_tolerance = 1e-7;
    double closure_residual = 0.0;   // max |d omega| over coordinate triples
    double symmetry_residual = 0.0;  // max |omega(S e_i, e_j) - omega(S e_j, e_i)|
    std::size_t worst_sample = 0;
    std::size_t worst_triple[3] = {0, 0, 0};
    std::size_t worst_pair[2] = {0, 0};
    double worst_pair_values[2] = {0.0, 0.0};  // omega(S e_i, e_j), omega(S e_j, e_i)
    std::string failing_condition;           // "closure" or "symmetry"

    void require() const;
};

/// Closedness by finite differences (step h, one Richardson step) and the
/// symmetry condition i_S omega = 0 by exact algebra.
HelmholtzReport helmholtz_check(const MatrixField& omega_field, const Chart& chart, const std::vector<Vector>& samples,
                                double h = 1e-4, double closure_tol = 1e-6, double symmetry_tol = 1e-7);

struct LinearSolveReport {
    std::optional<Vector> solution;
    double residual = 0.0;
    double tolerance = 0.0;
    std::size_t kernel_dim = 0;
    Matrix kernel;  // gauge directions

    bool ok() const { return solution.has_value(); }
    /// Throws Inconsistent.
    const Vector& require() const;
};

/// Solves i_X omega = dH; minimal-norm representative when omega is degenerate.
LinearSolveReport hamiltonian_field(const Matrix& omega, const Vector& dh);

/// Solves i_X omega = 0, time_form(X) = 1; kernel is ker omega ∩ ker time_form.
LinearSolveReport reeb_evolution_field(const Matrix& omega, const Vector& time_form);

/// Autonomous: |S X - Delta|. Jet: |dt(X) - 1| + |S X|.
double sode_residual(const Vector& field, const Chart& chart, const Vector& point);

}  // namespace lagreg
