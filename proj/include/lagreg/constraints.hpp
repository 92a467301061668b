#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagreg/geometry.hpp"
#include "lagreg/lagrangian.hpp"

namespace lagreg {

/// Orthonormal basis of ker omega, intersected with ker time_form when given.
SubspaceBasis kernel_basis(const Matrix& omega, const std::optional<Vector>& time_form = std::nullopt,
                           RankTolerance tol = {});

/// Characteristic distribution of a Lagrangian system at a point:
/// ker omega_L, or ker omega_L ∩ ker dt on jet charts.
SubspaceBasis characteristic_distribution(const LagrangianSystem& sys, const Vector& point, RankTolerance tol = {});

struct KernelReport {
    SubspaceBasis basis;         // characteristic distribution at the first sample
    Matrix base_distribution;    // orthonormal, in base coordinates, at the first sample
    std::size_t fiber_rank = 0;  // r
    std::vector<std::size_t> kernel_dims;
    bool is_complete_lift = false;
    std::string failed_check;  // empty, or one of even_rank, vertical_part, velocity_independence,
                               // involutivity, lift_in_kernel

    // evidence, maxima over samples
    double vertical_mismatch = 0.0;
    double velocity_dependence = 0.0;
    double involutivity_residual = 0.0;
    double lift_residual = 0.0;

    /// Base positions spanning the base distribution when it is coordinate-aligned.
    std::optional<std::vector<std::size_t>> aligned_fibers(double tol = 1e-8) const;
};

/// Decides whether the characteristic distribution is the complete lift of a
/// distribution on the base. Finite-difference checks use step h and tolerance tol.
/// Throws RankNotConstant when kernel dimensions differ across samples.
KernelReport detect_complete_lift(const LagrangianSystem& sys, const std::vector<Vector>& samples, double tol = 1e-6,
                                  double h = 1e-3);

/// Contractions of the Euler-Lagrange expression with ker W. Empty when regular.
Vector primary_constraints(const LagrangianSystem& sys, const Vector& point);

struct ConstraintSet {
    std::vector<Expression> declared;
    std::vector<VectorField> derived;
    std::size_t generation = 0;
    // values of the newest derived constraint at the on-surface samples of the last step
    std::vector<std::size_t> tabulated_samples;
    std::vector<Vector> tabulated_values;
    std::size_t jacobian_rank = 0;

    std::size_t count() const { return declared.size() + derived.size(); }
    /// All constraint components, declared first.
    Vector evaluate(const Vector& point) const;
    bool satisfied(const Vector& point, double tol) const;
};

/// One step of the constraint algorithm: appends m -> P_U(m) dH(m), where U is
/// the omega-orthogonal of the tangent space of the current constraint surface.
/// Throws EmptySurface or RankNotConstant.
ConstraintSet pca_step(const MatrixField& omega_field, const VectorField& dh_field, const ConstraintSet& constraints,
                       const std::vector<Vector>& samples, double tol);

struct PcaResult {
    std::vector<std::vector<std::size_t>> history;  // survivor indices; history[0] is every sample
    bool stabilized = false;
    bool inconsistent = false;  // survivor set became empty
    std::size_t iterations = 0;
    ConstraintSet constraints;

    const std::vector<std::size_t>& survivors() const { return history.back(); }
};

PcaResult run_pca(const MatrixField& omega_field, const VectorField& dh_field, const std::vector<Vector>& samples,
                  std::size_t max_iter, double tol);

struct SodeProjection {
    Vector point;
    double defect = 0.0;  // |S(X) - Delta| for the SODE candidate at the returned point
};

/// Limit of the defect flow: velocities replaced by the base components of Y.
SodeProjection sode_projection(const LagrangianSystem& sys, const Vector& point, const Vector& field);

struct MetricData {
    std::vector<std::vector<Expression>> g;  // n x n, symmetric
    std::vector<Expression> a;               // n
    Expression v;
};

struct ConsistencyReport {
    double residuals[3] = {0.0, 0.0, 0.0};
    std::size_t worst_sample[3] = {0, 0, 0};
    double tolerance = 1e-9;
    bool consistent = true;
    int failing_condition = 0;  // 1-based, 0 when consistent

    void require() const;
};

/// Residuals of the three metric consistency conditions for kernel fields W.
/// Throws NotInKernel when |g W| > 1e-9 at a sample.
ConsistencyReport degenerate_metric_consistency(const Chart& chart, const MetricData& metric,
                                                const VectorField& kernel_field, const std::vector<Vector>& samples,
                                                double tol = 1e-9);

/// Lagrangian 1/2 g(v, v) + A(v) - V of the metric data.
Expression metric_lagrangian(const Chart& chart, const MetricData& metric);

}  // namespace lagreg
