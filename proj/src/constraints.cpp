#include "lagreg/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

Vector time_covector(const Chart& chart) {
    Vector time_form = Vector::Zero(ix(chart.dim()));
    time_form[ix(chart.time_index())] = 1.0;
    return time_form;
}

struct LocalKernel {
    Matrix kernel;    // chart coordinates
    Matrix base;      // orthonormal, base coordinates
    Matrix vertical;  // orthonormal span of the velocity parts of vertical kernel vectors
};

LocalKernel local_kernel(const LagrangianSystem& sys, const Vector& p) {
    const Chart& chart = sys.chart;
    const auto n = ix(chart.base_dim());
    LocalKernel out;
    out.kernel = characteristic_distribution(sys, p).vectors;
    const Idx k = out.kernel.cols();
    if (k == 0) {
        out.base = Matrix::Zero(n, 0);
        out.vertical = Matrix::Zero(n, 0);
        return out;
    }
    Matrix proj(n, k), vel(n, k);
    for (Idx i = 0; i < n; ++i) {
        proj.row(i) = out.kernel.row(ix(chart.config()[static_cast<std::size_t>(i)]));
        vel.row(i) = out.kernel.row(ix(chart.velocity()[static_cast<std::size_t>(i)]));
    }
    out.base = column_space(proj);
    const Matrix coeffs = null_space(proj);
    out.vertical = coeffs.cols() == 0 ? Matrix::Zero(n, 0) : column_space(Matrix(vel * coeffs));
    return out;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) return 1.0;
    if (a.cols() == 0) return 0.0;
    return std::max(distance_from_span(a, b), distance_from_span(b, a));
}

// Base generators normalized to the identity on the pivot rows.
Matrix normalized_generators(const Matrix& base, const std::vector<Idx>& pivots) {
    Matrix block(ix(pivots.size()), base.cols());
    for (std::size_t i = 0; i < pivots.size(); ++i) block.row(ix(i)) = base.row(pivots[i]);
    return base * block.inverse();
}

Matrix fd_jacobian(const VectorField& f, const Vector& x, double h) {
    const Vector f0 = f(x);
    Matrix jac(f0.size(), x.size());
    for (Idx m = 0; m < x.size(); ++m) {
        jac.col(m) = richardson_derivative(
            [&](double s) -> Matrix {
                Vector p = x;
                p[m] += s;
                return f(p);
            },
            h);
    }
    return jac;
}

constexpr double kJacobianStep = 1e-5;
constexpr RankTolerance kJacobianRank{1e-6, 1e-9};

// Orthonormal basis of the tangent space of the zero set, with a fixed codimension.
Matrix surface_tangent(const ConstraintSet& set, const Vector& p, std::size_t rank) {
    const auto dim = p.size();
    if (set.count() == 0 || rank == 0) return Matrix::Identity(dim, dim);
    const Matrix jac = fd_jacobian([&](const Vector& x) { return set.evaluate(x); }, p, kJacobianStep);
    Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(dim - ix(rank));
}

}  // namespace

SubspaceBasis kernel_basis(const Matrix& omega, const std::optional<Vector>& time_form, RankTolerance tol) {
    if (omega.rows() != omega.cols()) throw ShapeMismatch("omega must be square");
    if (!time_form) return SubspaceBasis{null_space(omega, tol)};
    if (time_form->size() != omega.rows()) throw DimensionMismatch("time_form does not match omega");
    Matrix stacked(omega.rows() + 1, omega.cols());
    // scale the covector row so the threshold treats both blocks alike
    const double scale = std::max(1.0, omega.norm());
    stacked << omega, scale * time_form->transpose();
    return SubspaceBasis{null_space(stacked, tol)};
}

SubspaceBasis characteristic_distribution(const LagrangianSystem& sys, const Vector& point, RankTolerance tol) {
    const Matrix omega = lagrangian_2form(sys, point);
    if (sys.chart.has_time()) return kernel_basis(omega, time_covector(sys.chart), tol);
    return kernel_basis(omega, std::nullopt, tol);
}

std::optional<std::vector<std::size_t>> KernelReport::aligned_fibers(double tol) const {
    const Idx n = base_distribution.rows();
    const Idx r = base_distribution.cols();
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return base_distribution.row(ix(a)).norm() > base_distribution.row(ix(b)).norm();
    });
    std::vector<std::size_t> chosen(order.begin(), order.begin() + r);
    std::sort(chosen.begin(), chosen.end());
    Matrix unit = Matrix::Zero(n, r);
    for (Idx c = 0; c < r; ++c) unit(ix(chosen[static_cast<std::size_t>(c)]), c) = 1.0;
    if (subspace_distance(unit, base_distribution) > tol) return std::nullopt;
    return chosen;
}

KernelReport detect_complete_lift(const LagrangianSystem& sys, const std::vector<Vector>& samples, double tol,
                                  double h) {
    const Chart& chart = sys.chart;
    KernelReport rep;
    if (samples.empty()) {
        rep.is_complete_lift = true;
        return rep;
    }
    const auto& cfg = chart.config();
    const auto& vel = chart.velocity();
    auto fail = [&rep](const char* check) {
        if (rep.failed_check.empty()) rep.failed_check = check;
    };

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vector& p = samples[s];
        const LocalKernel lk = local_kernel(sys, p);
        const auto k = static_cast<std::size_t>(lk.kernel.cols());
        if (!rep.kernel_dims.empty() && k != rep.kernel_dims.front())
            throw RankNotConstant("kernel dimension " + std::to_string(k) + " at sample " + std::to_string(s) +
                                  ", " + std::to_string(rep.kernel_dims.front()) + " at sample 0");
        rep.kernel_dims.push_back(k);
        if (s == 0) {
            rep.basis.vectors = lk.kernel;
            rep.base_distribution = lk.base;
            rep.fiber_rank = k / 2;
        }
        const std::size_t r = rep.fiber_rank;
        if (k == 0) continue;

        // (a) even dimension
        if (k % 2 != 0) {
            fail("even_rank");
            continue;
        }
        // (b) vertical part has rank r and the same span as the base projection
        const double vm = (static_cast<std::size_t>(lk.base.cols()) != r || static_cast<std::size_t>(lk.vertical.cols()) != r)
                              ? 1.0
                              : subspace_distance(lk.base, lk.vertical);
        rep.vertical_mismatch = std::max(rep.vertical_mismatch, vm);
        if (vm > tol) {
            fail("vertical_part");
            continue;
        }
        // (c) the base distribution does not move with the velocities
        for (double factor : {-1.0, 2.0, 0.5}) {
            Vector q = p;
            for (auto v : vel) q[ix(v)] = factor * p[ix(v)] + 0.37 * (1.0 - factor);
            const LocalKernel other = local_kernel(sys, q);
            const double d = subspace_distance(lk.base, other.base);
            rep.velocity_dependence = std::max(rep.velocity_dependence, d);
        }
        if (rep.velocity_dependence > tol) fail("velocity_independence");

        // (d), (e) with generators normalized on pivot rows chosen here
        Eigen::ColPivHouseholderQR<Matrix> qr(Matrix(lk.base.transpose()));
        std::vector<Idx> pivots;
        for (std::size_t a = 0; a < r; ++a) pivots.push_back(qr.colsPermutation().indices()[ix(a)]);
        auto generators = [&](const Vector& x) -> Matrix {
            return normalized_generators(local_kernel(sys, x).base, pivots);
        };
        const Matrix gens = generators(p);
        std::vector<Matrix> dgen;  // per base coordinate
        for (std::size_t c = 0; c < cfg.size(); ++c) {
            dgen.push_back(richardson_derivative(
                [&](double step) {
                    Vector x = p;
                    x[ix(cfg[c])] += step;
                    return generators(x);
                },
                h));
        }
        for (std::size_t a = 0; a < r; ++a) {
            for (std::size_t b = a + 1; b < r; ++b) {
                Vector bracket = Vector::Zero(gens.rows());
                for (std::size_t c = 0; c < cfg.size(); ++c) {
                    bracket += gens(ix(c), ix(a)) * dgen[c].col(ix(b)) - gens(ix(c), ix(b)) * dgen[c].col(ix(a));
                }
                rep.involutivity_residual = std::max(rep.involutivity_residual, distance_from_span(lk.base, bracket));
            }
        }
        if (rep.involutivity_residual > tol) fail("involutivity");

        Matrix dtime;
        if (chart.has_time()) {
            dtime = richardson_derivative(
                [&](double step) {
                    Vector x = p;
                    x[ix(chart.time_index())] += step;
                    return generators(x);
                },
                h);
        }
        const Matrix omega = lagrangian_2form(sys, p);
        const double scale = std::max(1.0, omega.norm());
        for (std::size_t a = 0; a < r; ++a) {
            Vector lift = Vector::Zero(p.size());
            for (std::size_t i = 0; i < cfg.size(); ++i) {
                double dv = chart.has_time() ? dtime(ix(i), ix(a)) : 0.0;
                for (std::size_t c = 0; c < cfg.size(); ++c) dv += p[ix(vel[c])] * dgen[c](ix(i), ix(a));
                lift[ix(cfg[i])] = gens(ix(i), ix(a));
                lift[ix(vel[i])] = dv;
            }
            const double res = (omega.transpose() * lift).norm() / (scale * lift.norm());
            rep.lift_residual = std::max(rep.lift_residual, res);
        }
        if (rep.lift_residual > tol) fail("lift_in_kernel");
    }
    rep.is_complete_lift = rep.failed_check.empty();
    return rep;
}

Vector primary_constraints(const LagrangianSystem& sys, const Vector& point) {
    if (!sys.autonomous()) throw NotAutonomous("primary constraints are computed for autonomous systems");
    const Chart& chart = sys.chart;
    const auto& vel = chart.velocity();
    const auto& cfg = chart.config();
    const Matrix w = sys.lagrangian.hessian_block(as_span(point), vel, vel);
    const Matrix y = null_space(w);
    if (y.cols() == 0) return Vector::Zero(0);
    const Matrix lvq = sys.lagrangian.hessian_block(as_span(point), vel, cfg);
    const Vector grad = sys.lagrangian.eval_with_gradient(as_span(point)).gradient;
    Vector v(ix(vel.size())), lq(ix(cfg.size()));
    for (std::size_t i = 0; i < vel.size(); ++i) {
        v[ix(i)] = point[ix(vel[i])];
        lq[ix(i)] = grad[ix(cfg[i])];
    }
    return y.transpose() * (lvq * v - lq);
}

Vector ConstraintSet::evaluate(const Vector& point) const {
    std::vector<Vector> parts;
    Idx total = 0;
    for (const auto& f : derived) {
        parts.push_back(f(point));
        total += parts.back().size();
    }
    Vector out(ix(declared.size()) + total);
    for (std::size_t i = 0; i < declared.size(); ++i) out[ix(i)] = declared[i].evaluate(as_span(point));
    Idx at = ix(declared.size());
    for (const auto& part : parts) {
        out.segment(at, part.size()) = part;
        at += part.size();
    }
    return out;
}

bool ConstraintSet::satisfied(const Vector& point, double tol) const {
    if (count() == 0) return true;
    const Vector values = evaluate(point);
    return values.size() == 0 || values.cwiseAbs().maxCoeff() <= tol;
}

ConstraintSet pca_step(const MatrixField& omega_field, const VectorField& dh_field, const ConstraintSet& constraints,
                       const std::vector<Vector>& samples, double tol) {
    std::vector<std::size_t> on;
    for (std::size_t s = 0; s < samples.size(); ++s)
        if (constraints.satisfied(samples[s], tol)) on.push_back(s);
    if (on.empty()) throw EmptySurface("no sample satisfies the current constraints");

    std::size_t rank = 0;
    if (constraints.count() > 0) {
        for (std::size_t k = 0; k < on.size(); ++k) {
            const Vector& p = samples[on[k]];
            const Matrix jac = fd_jacobian([&](const Vector& x) { return constraints.evaluate(x); }, p, kJacobianStep);
            const std::size_t rk = numerical_rank(jac, kJacobianRank);
            if (k == 0) rank = rk;
            else if (rk != rank)
                throw RankNotConstant("constraint Jacobian rank " + std::to_string(rk) + " at sample " +
                                      std::to_string(on[k]) + ", " + std::to_string(rank) + " at sample " +
                                      std::to_string(on[0]));
        }
    }

    const ConstraintSet previous = constraints;
    VectorField next = [previous, rank, omega_field, dh_field](const Vector& p) -> Vector {
        const Matrix tangent = surface_tangent(previous, p, rank);
        const Matrix omega = omega_field(p);
        // U = {u : omega(u, t) = 0 for t tangent}
        const Matrix orth = null_space(Matrix((omega * tangent).transpose()));
        const Vector dh = dh_field(p);
        if (orth.cols() == 0) return Vector::Zero(dh.size());
        return orth * (orth.transpose() * dh);
    };

    ConstraintSet out = constraints;
    out.derived.push_back(next);
    out.generation = constraints.generation + 1;
    out.jacobian_rank = rank;
    out.tabulated_samples = on;
    out.tabulated_values.clear();
    for (auto s : on) out.tabulated_values.push_back(next(samples[s]));
    return out;
}

PcaResult run_pca(const MatrixField& omega_field, const VectorField& dh_field, const std::vector<Vector>& samples,
                  std::size_t max_iter, double tol) {
    if (max_iter < 1) throw PreconditionViolated("max_iter must be at least 1");
    PcaResult res;
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    res.history.push_back(all);
    if (samples.empty()) {
        res.inconsistent = true;
        return res;
    }

    for (std::size_t it = 1; it <= max_iter; ++it) {
        const auto& current = res.history.back();
        std::vector<Vector> subset;
        for (auto s : current) subset.push_back(samples[s]);
        res.constraints = pca_step(omega_field, dh_field, res.constraints, subset, tol);
        std::vector<std::size_t> survivors;
        for (std::size_t k = 0; k < res.constraints.tabulated_samples.size(); ++k) {
            const Vector& values = res.constraints.tabulated_values[k];
            if (values.size() == 0 || values.cwiseAbs().maxCoeff() <= tol)
                survivors.push_back(current[res.constraints.tabulated_samples[k]]);
        }
        // tabulated indices refer to the subset; rewrite them to the original numbering
        for (auto& s : res.constraints.tabulated_samples) s = current[s];
        res.iterations = it;
        const bool unchanged = survivors == current;
        res.history.push_back(std::move(survivors));
        if (unchanged) {
            res.stabilized = true;
            break;
        }
        if (res.history.back().empty()) {
            res.inconsistent = true;
            break;
        }
    }
    return res;
}

SodeProjection sode_projection(const LagrangianSystem& sys, const Vector& point, const Vector& field) {
    const Chart& chart = sys.chart;
    if (point.size() != ix(chart.dim()) || field.size() != ix(chart.dim()))
        throw DimensionMismatch("sode_projection: point and field must match the chart");
    SodeProjection out{point, 0.0};
    const auto& cfg = chart.config();
    const auto& vel = chart.velocity();
    for (std::size_t i = 0; i < cfg.size(); ++i) out.point[ix(vel[i])] = field[ix(cfg[i])];

    Vector candidate = Vector::Zero(point.size());
    for (std::size_t i = 0; i < cfg.size(); ++i) candidate[ix(cfg[i])] = out.point[ix(vel[i])];
    if (chart.has_time()) candidate[ix(chart.time_index())] = 1.0;
    out.defect = sode_residual(candidate, chart, out.point);
    if (out.defect > 1e-12) throw Inconsistent("projected point is not a SODE point: " + format_number(out.defect));
    return out;
}

void ConsistencyReport::require() const {
    if (!consistent)
        throw HypothesisViolated("metric consistency condition " + std::to_string(failing_condition) +
                                 " residual " + format_number(residuals[failing_condition - 1]));
}

ConsistencyReport degenerate_metric_consistency(const Chart& chart, const MetricData& metric,
                                                const VectorField& kernel_field, const std::vector<Vector>& samples,
                                                double tol) {
    const std::size_t n = chart.base_dim();
    if (metric.g.size() != n || metric.a.size() != n)
        throw ShapeMismatch("metric tables must be " + std::to_string(n) + "x" + std::to_string(n) + " and " +
                            std::to_string(n));
    for (const auto& row : metric.g)
        if (row.size() != n) throw ShapeMismatch("metric rows must have " + std::to_string(n) + " entries");
    const auto& cfg = chart.config();
    const bool timed = chart.has_time();

    ConsistencyReport rep;
    rep.tolerance = tol;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vector& p = samples[s];
        const Vector w = kernel_field(p);
        if (w.size() != ix(n)) throw DimensionMismatch("kernel field must have one component per base coordinate");

        // dg[i][j] = gradient of g_ij over the chart
        std::vector<std::vector<ValueGradient>> g(n);
        std::vector<ValueGradient> a;
        Matrix gm(ix(n), ix(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g[i].push_back(metric.g[i][j].eval_with_gradient(as_span(p)));
                gm(ix(i), ix(j)) = g[i][j].value;
            }
            a.push_back(metric.a[i].eval_with_gradient(as_span(p)));
        }
        const double gw = (gm * w).norm();
        if (gw > 1e-9)
            throw NotInKernel("|g W| = " + format_number(gw) + " at sample " + std::to_string(s));
        const ValueGradient v = metric.v.eval_with_gradient(as_span(p));
        auto dq = [&](const ValueGradient& f, std::size_t k) { return f.gradient[ix(cfg[k])]; };
        auto dt = [&](const ValueGradient& f) { return timed ? f.gradient[ix(chart.time_index())] : 0.0; };

        double local[3] = {0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                double c1 = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    c1 += w[ix(i)] * (dq(g[i][j], k) + dq(g[k][j], i) - dq(g[k][i], j));
                local[0] = std::max(local[0], std::fabs(c1));
            }
            double c2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) c2 += w[ix(i)] * (dq(a[i], j) - dq(a[j], i) + dt(g[i][j]));
            local[1] = std::max(local[1], std::fabs(c2));
        }
        double c3 = 0.0;
        for (std::size_t i = 0; i < n; ++i) c3 += w[ix(i)] * (dq(v, i) + dt(a[i]));
        local[2] = std::fabs(c3);

        for (int c = 0; c < 3; ++c) {
            if (local[c] > rep.residuals[c]) {
                rep.residuals[c] = local[c];
                rep.worst_sample[c] = s;
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        if (rep.residuals[c] > tol) {
            rep.consistent = false;
            rep.failing_condition = c + 1;
            break;
        }
    }
    return rep;
}

Expression metric_lagrangian(const Chart& chart, const MetricData& metric) {
    const std::size_t n = chart.base_dim();
    if (metric.g.size() != n || metric.a.size() != n) throw ShapeMismatch("metric tables do not match the chart");
    std::vector<Expression> v;
    for (auto i : chart.velocity()) v.push_back(Expression::variable(i, chart.name(i)));
    Expression kinetic = Expression::constant(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!metric.g[i][i].is_zero()) kinetic = kinetic + metric.g[i][i] * pow(v[i], 2.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (metric.g[i][j].is_zero()) continue;
            kinetic = kinetic + Expression::constant(2.0) * metric.g[i][j] * v[i] * v[j];
        }
    }
    Expression out = Expression::constant(0.5) * kinetic;
    for (std::size_t i = 0; i < n; ++i)
        if (!metric.a[i].is_zero()) out = out + metric.a[i] * v[i];
    return out - metric.v;
}

}  // namespace lagreg
