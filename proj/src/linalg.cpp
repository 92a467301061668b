#include "lagreg/linalg.hpp"

#include <algorithm>

namespace lagreg {

namespace {

double threshold(const Vector& sv, RankTolerance tol) {
    const double smax = sv.size() ? sv.maxCoeff() : 0.0;
    return std::max(tol.relative * smax, tol.absolute);
}

void normalize_signs(Matrix& basis) {
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
        Eigen::Index imax = 0;
        basis.col(c).cwiseAbs().maxCoeff(&imax);
        if (basis(imax, c) < 0.0) basis.col(c) *= -1.0;
    }
}

}  // namespace

std::size_t numerical_rank(const Matrix& m, RankTolerance tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    const double th = threshold(sv, tol);
    return static_cast<std::size_t>((sv.array() > th).count());
}

Matrix null_space(const Matrix& m, RankTolerance tol) {
    const Eigen::Index n = m.cols();
    if (m.rows() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double th = threshold(sv, tol);
    Eigen::Index rank = (sv.array() > th).count();
    Matrix basis = svd.matrixV().rightCols(n - rank);
    normalize_signs(basis);
    return basis;
}

Matrix column_space(const Matrix& m, RankTolerance tol) {
    if (m.cols() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double th = threshold(sv, tol);
    Eigen::Index rank = (sv.array() > th).count();
    Matrix basis = svd.matrixU().leftCols(rank);
    normalize_signs(basis);
    return basis;
}

double distance_from_span(const Matrix& basis, const Vector& v) {
    if (basis.cols() == 0) return v.norm();
    return (v - basis * (basis.transpose() * v)).norm();
}

double distance_from_span(const Matrix& basis, const Matrix& vectors) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < vectors.cols(); ++c)
        worst = std::max(worst, distance_from_span(basis, Vector(vectors.col(c))));
    return worst;
}

double independence_margin(const Matrix& columns) {
    if (columns.cols() == 0) return 1.0;
    Matrix normalized = columns;
    for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
        const double n = normalized.col(c).norm();
        if (n == 0.0) return 0.0;
        normalized.col(c) /= n;
    }
    Eigen::JacobiSVD<Matrix> svd(normalized);
    return svd.singularValues().minCoeff();
}

MinNormSolution min_norm_solve(const Matrix& a, const Vector& b, RankTolerance tol) {
    MinNormSolution out;
    const Eigen::Index n = a.cols();
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double th = threshold(sv, tol);
    const Eigen::Index rank = (sv.array() > th).count();
    Vector x = Vector::Zero(n);
    const Matrix& U = svd.matrixU();
    const Matrix& V = svd.matrixV();
    for (Eigen::Index i = 0; i < rank; ++i) x += V.col(i) * (U.col(i).dot(b) / sv[i]);
    out.solution = x;
    out.residual = (a * x - b).norm();
    out.kernel = V.rightCols(n - rank);
    normalize_signs(out.kernel);
    out.kernel_dim = static_cast<std::size_t>(n - rank);
    return out;
}

Matrix richardson_derivative(const std::function<Matrix(double)>& f, double h) {
    auto central = [&](double step) -> Matrix { return (f(step) - f(-step)) / (2.0 * step); };
    const Matrix coarse = central(h);
    const Matrix fine = central(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace lagreg
