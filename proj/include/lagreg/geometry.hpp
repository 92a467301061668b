#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lagreg/chart.hpp"
#include "lagreg/expression.hpp"
#include "lagreg/linalg.hpp"

namespace lagreg {

/// Columns are vectors at a common base point.
struct SubspaceBasis {
    Matrix vectors;

    std::size_t rank() const { return static_cast<std::size_t>(vectors.cols()); }
    /// Smallest singular value of the column-normalized basis.
    double margin() const { return independence_margin(vectors); }
};

/// A (1,1)-tensor or 2-form field given pointwise.
using MatrixField = std::function<Matrix(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vector vertical_lift(const Chart& chart, const Vector& base_vector, const Vector& point);

/// Components (X^i, v^k dX^i/dq^k [+ dX^i/dt]) of the complete lift of a base
/// field given by one expression per base coordinate.
Vector complete_lift(const Chart& chart, const std::vector<Expression>& base_field, const Vector& point);

/// Matrix of S in the chart basis: column j is S(e_j). Jet charts carry the
/// -qdot^i dt column.
Matrix vertical_endomorphism(const Chart& chart, const Vector& point);

Vector liouville_field(const Chart& chart, const Vector& point);

struct TangentStructureReport {
    bool ok = true;
    double tolerance = 1e-8;
    std::size_t samples = 0;
    double rank_defect = 0.0;       // max |rank S - dim Q|
    double nilpotency = 0.0;        // max |S^2|
    double liouville_image = 0.0;   // distance of the Liouville field from Im S
    double image_kernel = 0.0;      // distance between Im S and ker S
    double lie_residual = 0.0;      // max |(L_Delta S + S)(e_j)|
    double nijenhuis = 0.0;         // max |N_S(e_j, e_k)|
    double time_annihilation = 0.0; // jet charts: max |dt(S e_j)|
    std::string failing_axiom;
    std::size_t worst_sample = 0;

    void require() const;
};

/// Pointwise tangent-structure axioms. `endomorphism` defaults to the
/// canonical S of the chart; `h` is the finite-difference step.
TangentStructureReport verify_tangent_structure(const Chart& chart, const std::vector<Vector>& samples,
                                                const MatrixField& endomorphism = {}, double h = 1e-4,
                                                double tol = 1e-8);

struct ComplementReport {
    SubspaceBasis basis;
    double isotropy = 0.0;       // max |omega(b_i, b_j)| / (|omega| |b_i| |b_j|)
    double invariance = 0.0;     // distance of J b_i from span(b)
    double complementarity = 0.0; // independence margin of [L | b]
};

/// New complement A(W) with columns w + l_w, l_w = -1/2 phi^{-1}(i_w omega|_W),
/// where phi(l) = (i_l omega)|_W. The result is isotropic, J-invariant and
/// complementary to L. Throws PreconditionViolated or SingularPairing.
ComplementReport lagrangian_complement(const Matrix& omega, const SubspaceBasis& lagrangian,
                                       const SubspaceBasis& complement, const Matrix& j, double tol = 1e-10);

}  // namespace lagreg
