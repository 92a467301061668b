#include "lagreg/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

void check_point(const Chart& chart, const Vector& point) {
    if (static_cast<std::size_t>(point.size()) != chart.dim())
        throw DimensionMismatch("point has " + std::to_string(point.size()) + " components, chart has " +
                                std::to_string(chart.dim()));
}

std::vector<Matrix> coordinate_derivatives(const MatrixField& field, const Vector& x, double h) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index m = 0; m < x.size(); ++m) {
        out.push_back(richardson_derivative(
            [&](double s) {
                Vector p = x;
                p[m] += s;
                return field(p);
            },
            h));
    }
    return out;
}

}  // namespace

Vector vertical_lift(const Chart& chart, const Vector& base_vector, const Vector& point) {
    check_point(chart, point);
    if (static_cast<std::size_t>(base_vector.size()) != chart.base_dim())
        throw DimensionMismatch("base vector has " + std::to_string(base_vector.size()) + " components, expected " +
                                std::to_string(chart.base_dim()));
    Vector out = Vector::Zero(point.size());
    for (std::size_t i = 0; i < chart.base_dim(); ++i)
        out[static_cast<Eigen::Index>(chart.velocity()[i])] = base_vector[static_cast<Eigen::Index>(i)];
    return out;
}

Vector complete_lift(const Chart& chart, const std::vector<Expression>& base_field, const Vector& point) {
    check_point(chart, point);
    if (base_field.size() != chart.base_dim())
        throw DimensionMismatch("base field has " + std::to_string(base_field.size()) + " components, expected " +
                                std::to_string(chart.base_dim()));
    Vector out = Vector::Zero(point.size());
    for (std::size_t i = 0; i < chart.base_dim(); ++i) {
        const ValueGradient vg = base_field[i].eval_with_gradient(as_span(point));
        double lifted = 0.0;
        for (std::size_t k = 0; k < chart.base_dim(); ++k)
            lifted += point[static_cast<Eigen::Index>(chart.velocity()[k])] *
                      vg.gradient[static_cast<Eigen::Index>(chart.config()[k])];
        if (chart.has_time()) lifted += vg.gradient[static_cast<Eigen::Index>(chart.time_index())];
        out[static_cast<Eigen::Index>(chart.config()[i])] = vg.value;
        out[static_cast<Eigen::Index>(chart.velocity()[i])] = lifted;
    }
    return out;
}

Matrix vertical_endomorphism(const Chart& chart, const Vector& point) {
    check_point(chart, point);
    const auto n = static_cast<Eigen::Index>(chart.dim());
    Matrix s = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < chart.base_dim(); ++i) {
        const auto v = static_cast<Eigen::Index>(chart.velocity()[i]);
        s(v, static_cast<Eigen::Index>(chart.config()[i])) = 1.0;
        if (chart.has_time()) s(v, static_cast<Eigen::Index>(chart.time_index())) = -point[v];
    }
    return s;
}

Vector liouville_field(const Chart& chart, const Vector& point) {
    check_point(chart, point);
    Vector out = Vector::Zero(point.size());
    for (auto v : chart.velocity()) out[static_cast<Eigen::Index>(v)] = point[static_cast<Eigen::Index>(v)];
    return out;
}

void TangentStructureReport::require() const {
    if (!ok) {
        double residual = 0.0;
        if (failing_axiom == "rank") residual = rank_defect;
        else if (failing_axiom == "nilpotency") residual = nilpotency;
        else if (failing_axiom == "liouville_in_image") residual = liouville_image;
        else if (failing_axiom == "image_equals_kernel") residual = image_kernel;
        else if (failing_axiom == "homogeneity") residual = lie_residual;
        else if (failing_axiom == "nijenhuis") residual = nijenhuis;
        else if (failing_axiom == "time_annihilation") residual = time_annihilation;
        throw ToleranceExceeded(failing_axiom + " residual " + format_number(residual) + " at sample " +
                                std::to_string(worst_sample));
    }
}

TangentStructureReport verify_tangent_structure(const Chart& chart, const std::vector<Vector>& samples,
                                                const MatrixField& endomorphism, double h, double tol) {
    MatrixField s_field = endomorphism;
    if (!s_field) s_field = [&chart](const Vector& p) { return vertical_endomorphism(chart, p); };
    MatrixField delta_field = [&chart](const Vector& p) -> Matrix { return liouville_field(chart, p); };

    TangentStructureReport rep;
    rep.tolerance = tol;
    rep.samples = samples.size();
    const std::size_t half = chart.base_dim();

    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Vector& x = samples[k];
        check_point(chart, x);
        const Matrix s = s_field(x);
        const Eigen::Index n = s.rows();
        double local[7] = {0, 0, 0, 0, 0, 0, 0};

        local[0] = std::fabs(static_cast<double>(numerical_rank(s)) - static_cast<double>(half));
        local[1] = (s * s).cwiseAbs().maxCoeff();

        const std::vector<Matrix> ds = coordinate_derivatives(s_field, x, h);
        // Frolicher-Nijenhuis torsion on coordinate pairs
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index l = 0; l < n; ++l) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    double v = 0.0;
                    for (Eigen::Index m = 0; m < n; ++m) {
                        v += s(m, j) * ds[static_cast<std::size_t>(m)](i, l) -
                             s(m, l) * ds[static_cast<std::size_t>(m)](i, j) +
                             s(i, m) * ds[static_cast<std::size_t>(l)](m, j) -
                             s(i, m) * ds[static_cast<std::size_t>(j)](m, l);
                    }
                    local[5] = std::max(local[5], std::fabs(v));
                }
            }
        }

        if (chart.has_time()) {
            local[6] = s.row(static_cast<Eigen::Index>(chart.time_index())).cwiseAbs().maxCoeff();
        } else {
            const Matrix image = column_space(s);
            const Matrix kernel = null_space(s);
            local[2] = distance_from_span(image, liouville_field(chart, x));
            local[3] = std::max(distance_from_span(image, kernel), distance_from_span(kernel, image));

            // (L_Delta S + S)^i_j = Delta^k d_k S^i_j - S^k_j d_k Delta^i + S^i_k d_j Delta^k + S^i_j
            const Vector delta = liouville_field(chart, x);
            const std::vector<Matrix> dd = coordinate_derivatives(delta_field, x, h);
            Matrix grad_delta(n, n);  // (i, k) = d_k Delta^i
            for (Eigen::Index kk = 0; kk < n; ++kk) grad_delta.col(kk) = dd[static_cast<std::size_t>(kk)].col(0);
            Matrix lie = Matrix::Zero(n, n);
            for (Eigen::Index kk = 0; kk < n; ++kk) lie += delta[kk] * ds[static_cast<std::size_t>(kk)];
            lie += -grad_delta * s + s * grad_delta + s;
            local[4] = lie.cwiseAbs().maxCoeff();
        }

        rep.rank_defect = std::max(rep.rank_defect, local[0]);
        rep.nilpotency = std::max(rep.nilpotency, local[1]);
        rep.liouville_image = std::max(rep.liouville_image, local[2]);
        rep.image_kernel = std::max(rep.image_kernel, local[3]);
        rep.lie_residual = std::max(rep.lie_residual, local[4]);
        rep.nijenhuis = std::max(rep.nijenhuis, local[5]);
        rep.time_annihilation = std::max(rep.time_annihilation, local[6]);

        if (rep.ok) {
            static const char* axioms[] = {"rank",       "nilpotency", "liouville_in_image", "image_equals_kernel",
                                           "homogeneity", "nijenhuis",  "time_annihilation"};
            for (int a = 0; a < 7; ++a) {
                // the jet endomorphism has non-vanishing torsion; it is reported, not checked
                if (a == 5 && chart.has_time()) continue;
                if (local[a] > tol) {
                    rep.ok = false;
                    rep.failing_axiom = axioms[a];
                    rep.worst_sample = k;
                    break;
                }
            }
        }
    }
    return rep;
}

ComplementReport lagrangian_complement(const Matrix& omega, const SubspaceBasis& lagrangian,
                                       const SubspaceBasis& complement, const Matrix& j, double tol) {
    const Eigen::Index n = omega.rows();
    const Matrix& L = lagrangian.vectors;
    const Matrix& W = complement.vectors;
    if (omega.cols() != n || L.rows() != n || W.rows() != n || j.rows() != n || j.cols() != n)
        throw DimensionMismatch("lagrangian_complement: inconsistent ambient dimensions");

    auto fail = [](const std::string& what, double residual) {
        throw PreconditionViolated(what + " (residual " + format_number(residual) + ")");
    };

    const double scale = std::max(1.0, omega.norm());
    if (numerical_rank(omega) != static_cast<std::size_t>(n)) fail("omega is degenerate", 0.0);
    if (L.cols() != W.cols()) fail("L and W have different dimensions", std::fabs(double(L.cols() - W.cols())));
    Matrix both(n, L.cols() + W.cols());
    both << L, W;
    if (numerical_rank(both) != static_cast<std::size_t>(both.cols())) fail("L and W are not complementary", 0.0);

    const Matrix lo = column_space(L);
    const Matrix wo = column_space(W);
    const double iso = (lo.transpose() * omega * lo).cwiseAbs().maxCoeff() / scale;
    if (iso > tol) fail("L is not isotropic", iso);
    const double jj = (j * j).cwiseAbs().maxCoeff();
    if (jj > tol) fail("J^2 != 0", jj);
    const double jl = distance_from_span(lo, Matrix(j * lo));
    if (jl > tol) fail("J(L) not contained in L", jl);
    const double jw = distance_from_span(wo, Matrix(j * wo));
    if (jw > tol) fail("J(W) not contained in W", jw);

    // pairing(a, b) = omega(l_a, w_b); correction coefficients solve C^T pairing = -1/2 omega|_W
    const Matrix pairing = L.transpose() * omega * W;
    const Matrix gram = W.transpose() * omega * W;
    Eigen::FullPivLU<Matrix> lu(pairing);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw SingularPairing("phi: L -> W* is not invertible");
    const Matrix ct = -0.5 * gram * lu.inverse();
    const Matrix b = W + L * ct.transpose();

    ComplementReport rep;
    rep.basis.vectors = b;
    const double onorm = omega.norm();
    for (Eigen::Index p = 0; p < b.cols(); ++p)
        for (Eigen::Index q = 0; q < b.cols(); ++q)
            rep.isotropy = std::max(rep.isotropy, std::fabs(b.col(p).dot(omega * b.col(q))) /
                                                      (onorm * b.col(p).norm() * b.col(q).norm()));
    const Matrix bo = column_space(b);
    const double jscale = std::max(1.0, j.norm());
    for (Eigen::Index p = 0; p < b.cols(); ++p)
        rep.invariance = std::max(rep.invariance, distance_from_span(bo, Vector(j * b.col(p))) /
                                                      (jscale * b.col(p).norm()));
    Matrix lb(n, L.cols() + b.cols());
    lb << L, b;
    rep.complementarity = independence_margin(lb);

    if (rep.isotropy > tol) throw ToleranceExceeded("complement not isotropic: " + format_number(rep.isotropy));
    if (rep.invariance > tol) throw ToleranceExceeded("complement not J-invariant: " + format_number(rep.invariance));
    if (rep.complementarity <= tol)
        throw ToleranceExceeded("complement not transverse to L: " + format_number(rep.complementarity));
    return rep;
}

}  // namespace lagreg
