#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagreg/constraints.hpp"
#include "lagreg/lagrangian.hpp"

namespace lagreg {

// Coordinate arrays for the foliated Tulczyjew isomorphism, with l leaf and r
// fiber coordinates. Tangent of the dual distribution bundle:
// (x, f, mu, xdot, fdot, mudot). Its image: (x, xdot, f, fdot, mu_f, mu_fdot).
Vector tulczyjew_map(const Vector& point, std::size_t leaves, std::size_t fibers);
Vector tulczyjew_inverse(const Vector& point, std::size_t leaves, std::size_t fibers);

/// Canonical involution restricted to the lifted distribution:
/// (x, xdot, f, fdot, v_f, v_fdot) -> (x, f, k = v_f, xdot, v_k = fdot, v_fdot).
Vector delta_foliated(const Vector& xi, std::size_t leaves, std::size_t fibers);

/// mu_f . v_f + mu_fdot . v_fdot for rho in image coordinates and xi as above.
double cotangent_pairing(const Vector& rho, const Vector& xi, std::size_t leaves, std::size_t fibers);

/// mudot . k + mu . v_k for eta = (x, f, mu, xdot, fdot, mudot) and psi = (x, f, k, xdot, v_f, v_k).
double tangent_pairing(const Vector& eta, const Vector& psi, std::size_t leaves, std::size_t fibers);

/// Splitting d f^A - Q^A dt - P^A_a dx^a. p[A][a]; q[A] only on jet charts.
struct AlmostProductSpec {
    std::vector<std::vector<Expression>> p;
    std::vector<Expression> q;

    static AlmostProductSpec zero(std::size_t leaves, std::size_t fibers, bool timed);
};

enum class ConnectionMode { Zero, Linear };

/// Linear connection on the multiplier bundle: Gamma_{.A} = gamma^B_{.A} mu_B.
struct ConnectionSpec {
    ConnectionMode mode = ConnectionMode::Zero;
    std::vector<std::vector<std::vector<Expression>>> leaf;   // [a][A][B]
    std::vector<std::vector<std::vector<Expression>>> fiber;  // [C][A][B]
    std::vector<std::vector<Expression>> time;                // [A][B]
};

/// Correction term on a thickened chart whose base roles give the leaf/fiber split.
/// Throws ShapeMismatch.
Expression build_F(const AlmostProductSpec& product, const ConnectionSpec& connection, const Chart& thickened);

struct Regularization {
    LagrangianSystem system;  // on the thickened chart
    Expression correction;
    std::size_t fiber_rank = 0;
    std::vector<std::size_t> fibers;  // base positions
    bool hypothesis_holds = true;
};

/// L + F on the thickened chart. The split comes from `fibers` when given, else
/// from the aligned kernel evidence. Throws HypothesisViolated when the evidence
/// rejects the complete-lift hypothesis and `force` is false, or when no split is known.
Regularization build_regularized_lagrangian(const LagrangianSystem& sys, const AlmostProductSpec& product,
                                            const ConnectionSpec& connection, const KernelReport& evidence,
                                            bool force = false,
                                            const std::optional<std::vector<std::size_t>>& fibers = std::nullopt);

struct RestrictionReport {
    double value_deviation = 0.0;  // max |L~ - L|
    double theta_deviation = 0.0;  // max over original components of |theta_L~ - theta_L|
    std::size_t worst_sample = 0;
    bool ok = true;

    void require() const;
};

RestrictionReport restriction_check(const LagrangianSystem& regularized, const LagrangianSystem& original,
                                    const std::vector<Vector>& samples, double value_tol = 1e-12,
                                    double theta_tol = 1e-9);

struct RegularityReport {
    bool ok = true;
    double min_singular_value = 0.0;  // smallest over samples
    std::size_t worst_sample = 0;
    std::size_t samples = 0;
    double verified_radius = 0.0;  // largest mu-shell radius passing at every sample
    std::vector<double> shell_min_singular;

    void require() const;
};

/// Autonomous: omega_L~ nondegenerate. Jet: [omega; dt] has full rank and the
/// Reeb system is solvable. Shells move (mu, mudot) off the zero section.
RegularityReport verify_regularity(const LagrangianSystem& regularized, const std::vector<Vector>& samples,
                                   double tol = 1e-8, const std::vector<double>& shell_radii = {});

struct CoisotropyReport {
    bool ok = true;
    std::size_t expected_dim = 0;
    std::size_t orthogonal_dim = 0;
    double containment = 0.0;  // largest multiplier component of the orthogonal basis
    std::size_t worst_sample = 0;

    void require() const;
};

CoisotropyReport coisotropy_check(const LagrangianSystem& regularized, const std::vector<Vector>& samples,
                                  double tol = 1e-9);

struct ProductTorsionReport {
    bool ok = true;
    double residual = 0.0;  // max |[H_i, H_j]| over horizontal pairs and samples
    double tolerance = 1e-9;
    std::size_t worst_sample = 0;
};

/// Integrability of the horizontal distribution spanned by d/dx^a + P^A_a d/df^A
/// (and d/dt + Q^A d/df^A on jet charts). The vertical distribution is always
/// integrable, so this is the vanishing of the Nijenhuis torsion of the splitting.
/// `chart` carries the leaf/fiber roles.
ProductTorsionReport product_torsion(const AlmostProductSpec& product, const Chart& chart,
                                     const std::vector<Vector>& samples, double tol = 1e-9);

/// Points of the thickened chart with the original components taken from `points`
/// and multipliers set to zero.
std::vector<Vector> zero_section(const Chart& thickened, const std::vector<Vector>& points);

}  // namespace lagreg
