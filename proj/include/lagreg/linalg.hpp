#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>

namespace lagreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values below max(relative * sigma_max, absolute) count as zero.
struct RankTolerance {
    double relative = 1e-9;
    double absolute = 1e-12;
};

std::size_t numerical_rank(const Matrix& m, RankTolerance tol = {});

/// Orthonormal basis of ker m, columns in singular-vector order with the
/// largest-magnitude entry of each column made positive.
Matrix null_space(const Matrix& m, RankTolerance tol = {});

/// Orthonormal basis of the column space of m.
Matrix column_space(const Matrix& m, RankTolerance tol = {});

/// Largest distance of a column of `vectors` from span(orthonormal_basis).
double distance_from_span(const Matrix& orthonormal_basis, const Vector& v);
double distance_from_span(const Matrix& orthonormal_basis, const Matrix& vectors);

/// Smallest singular value of the column-normalized matrix.
double independence_margin(const Matrix& columns);

struct MinNormSolution {
    Vector solution;
    double residual = 0.0;  // ||A x - b||
    std::size_t kernel_dim = 0;
    Matrix kernel;  // orthonormal basis of ker A
};

MinNormSolution min_norm_solve(const Matrix& a, const Vector& b, RankTolerance tol = {});

/// Central difference with one Richardson step: (4 D(h/2) - D(h)) / 3.
Matrix richardson_derivative(const std::function<Matrix(double)>& f, double h);

}  // namespace lagreg
