#include "lagreg/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

void check_length(const Vector& v, std::size_t leaves, std::size_t fibers, const char* what) {
    const std::size_t expected = 2 * leaves + 4 * fibers;
    if (static_cast<std::size_t>(v.size()) != expected)
        throw DimensionMismatch(std::string(what) + " has " + std::to_string(v.size()) + " components, expected " +
                                std::to_string(expected));
}

// Copies `len` entries from src[from] to dst[to].
void move_block(const Vector& src, Vector& dst, std::size_t from, std::size_t to, std::size_t len) {
    dst.segment(ix(to), ix(len)) = src.segment(ix(from), ix(len));
}

Expression var(const Chart& chart, std::size_t index) { return Expression::variable(index, chart.name(index)); }

void require_shape(std::size_t got, std::size_t want, const std::string& what) {
    if (got != want)
        throw ShapeMismatch(what + " has " + std::to_string(got) + " entries, expected " + std::to_string(want));
}

}  // namespace

Vector tulczyjew_map(const Vector& point, std::size_t l, std::size_t r) {
    check_length(point, l, r, "tulczyjew_map input");
    Vector out(point.size());
    // in:  x[0,l) f[l,l+r) mu[l+r,l+2r) xdot[l+2r,2l+2r) fdot[2l+2r,2l+3r) mudot[2l+3r,2l+4r)
    // out: x xdot f fdot mu_f=mudot mu_fdot=mu
    move_block(point, out, 0, 0, l);
    move_block(point, out, l + 2 * r, l, l);
    move_block(point, out, l, 2 * l, r);
    move_block(point, out, 2 * l + 2 * r, 2 * l + r, r);
    move_block(point, out, 2 * l + 3 * r, 2 * l + 2 * r, r);
    move_block(point, out, l + r, 2 * l + 3 * r, r);
    return out;
}

Vector tulczyjew_inverse(const Vector& point, std::size_t l, std::size_t r) {
    check_length(point, l, r, "tulczyjew_inverse input");
    Vector out(point.size());
    move_block(point, out, 0, 0, l);
    move_block(point, out, l, l + 2 * r, l);
    move_block(point, out, 2 * l, l, r);
    move_block(point, out, 2 * l + r, 2 * l + 2 * r, r);
    move_block(point, out, 2 * l + 2 * r, 2 * l + 3 * r, r);
    move_block(point, out, 2 * l + 3 * r, l + r, r);
    return out;
}

Vector delta_foliated(const Vector& xi, std::size_t l, std::size_t r) {
    check_length(xi, l, r, "delta_foliated input");
    // in:  x xdot f fdot v_f v_fdot
    // out: x f k=v_f xdot v_k=fdot v_fdot
    Vector out(xi.size());
    move_block(xi, out, 0, 0, l);
    move_block(xi, out, 2 * l, l, r);
    move_block(xi, out, 2 * l + 2 * r, l + r, r);
    move_block(xi, out, l, l + 2 * r, l);
    move_block(xi, out, 2 * l + r, 2 * l + 2 * r, r);
    move_block(xi, out, 2 * l + 3 * r, 2 * l + 3 * r, r);
    return out;
}

double cotangent_pairing(const Vector& rho, const Vector& xi, std::size_t l, std::size_t r) {
    check_length(rho, l, r, "covector");
    check_length(xi, l, r, "vector");
    const Idx at = ix(2 * l + 2 * r);
    return rho.segment(at, ix(2 * r)).dot(xi.segment(at, ix(2 * r)));
}

double tangent_pairing(const Vector& eta, const Vector& psi, std::size_t l, std::size_t r) {
    check_length(eta, l, r, "covector");
    check_length(psi, l, r, "vector");
    const Vector mu = eta.segment(ix(l + r), ix(r));
    const Vector mudot = eta.segment(ix(2 * l + 3 * r), ix(r));
    return mudot.dot(psi.segment(ix(l + r), ix(r))) + mu.dot(psi.segment(ix(2 * l + 3 * r), ix(r)));
}

AlmostProductSpec AlmostProductSpec::zero(std::size_t leaves, std::size_t fibers, bool timed) {
    AlmostProductSpec spec;
    spec.p.assign(fibers, std::vector<Expression>(leaves, Expression::constant(0.0)));
    if (timed) spec.q.assign(fibers, Expression::constant(0.0));
    return spec;
}

Expression build_F(const AlmostProductSpec& product, const ConnectionSpec& connection, const Chart& chart) {
    const auto leaves = chart.leaf_positions();
    const auto fibers = chart.fiber_positions();
    const std::size_t l = leaves.size();
    const std::size_t r = chart.multiplier_count();
    require_shape(fibers.size(), r, "fiber list");
    require_shape(product.p.size(), r, "P");
    for (const auto& row : product.p) require_shape(row.size(), l, "P row");
    if (!product.q.empty()) {
        if (!chart.has_time()) throw ShapeMismatch("Q is only defined on jet charts");
        require_shape(product.q.size(), r, "Q");
    }
    const bool linear = connection.mode == ConnectionMode::Linear;
    if (linear) {
        require_shape(connection.leaf.size(), l, "leaf connection");
        for (const auto& a : connection.leaf) {
            require_shape(a.size(), r, "leaf connection block");
            for (const auto& b : a) require_shape(b.size(), r, "leaf connection row");
        }
        require_shape(connection.fiber.size(), r, "fiber connection");
        for (const auto& c : connection.fiber) {
            require_shape(c.size(), r, "fiber connection block");
            for (const auto& b : c) require_shape(b.size(), r, "fiber connection row");
        }
        if (!connection.time.empty()) {
            if (!chart.has_time()) throw ShapeMismatch("time connection is only defined on jet charts");
            require_shape(connection.time.size(), r, "time connection");
            for (const auto& b : connection.time) require_shape(b.size(), r, "time connection row");
        }
    }

    const auto& vel = chart.velocity();
    const auto mu = chart.multiplier_indices();
    const auto mudot = chart.multiplier_velocity_indices();
    // Gamma_{.A} = sum_B gamma^B_{.A} mu_B
    auto contract = [&](const std::vector<Expression>& gamma) {
        Expression out = Expression::constant(0.0);
        for (std::size_t b = 0; b < r; ++b)
            if (!gamma[b].is_zero()) out = out + gamma[b] * var(chart, mu[b]);
        return out;
    };

    Expression total = Expression::constant(0.0);
    for (std::size_t a_fib = 0; a_fib < r; ++a_fib) {
        Expression left = var(chart, mudot[a_fib]);
        if (linear) {
            if (!connection.time.empty()) left = left - contract(connection.time[a_fib]);
            for (std::size_t a = 0; a < l; ++a) {
                const Expression g = contract(connection.leaf[a][a_fib]);
                if (!g.is_zero()) left = left - var(chart, vel[leaves[a]]) * g;
            }
            for (std::size_t b = 0; b < r; ++b) {
                const Expression g = contract(connection.fiber[b][a_fib]);
                if (!g.is_zero()) left = left - var(chart, vel[fibers[b]]) * g;
            }
        }
        Expression right = var(chart, vel[fibers[a_fib]]);
        if (!product.q.empty()) right = right - product.q[a_fib];
        Expression slope = Expression::constant(0.0);
        for (std::size_t a = 0; a < l; ++a)
            if (!product.p[a_fib][a].is_zero()) slope = slope + product.p[a_fib][a] * var(chart, vel[leaves[a]]);
        right = right - slope;
        total = total + left * right;
    }
    return total;
}

Regularization build_regularized_lagrangian(const LagrangianSystem& sys, const AlmostProductSpec& product,
                                            const ConnectionSpec& connection, const KernelReport& evidence,
                                            bool force, const std::optional<std::vector<std::size_t>>& fibers) {
    Regularization out;
    out.hypothesis_holds = evidence.is_complete_lift;
    if (!evidence.is_complete_lift && !force)
        throw HypothesisViolated("characteristic distribution is not a complete lift (failed check: " +
                                 evidence.failed_check + ")");
    if (fibers) {
        out.fibers = *fibers;
    } else if (auto aligned = evidence.aligned_fibers()) {
        out.fibers = *aligned;
    } else {
        throw HypothesisViolated("base distribution is not coordinate-aligned; declare a fiber split");
    }
    std::sort(out.fibers.begin(), out.fibers.end());
    out.fiber_rank = out.fibers.size();
    if (out.fiber_rank != evidence.fiber_rank && !force)
        throw HypothesisViolated("declared fiber count " + std::to_string(out.fiber_rank) +
                                 " differs from the kernel rank " + std::to_string(evidence.fiber_rank));
    if (out.fiber_rank == 0) {
        out.system = sys;
        out.correction = Expression::constant(0.0);
        return out;
    }
    const Chart chart = sys.chart.with_fibers(out.fibers).thickened(out.fiber_rank);
    out.correction = build_F(product, connection, chart);
    out.system = LagrangianSystem(chart, sys.lagrangian + out.correction);
    return out;
}

void RestrictionReport::require() const {
    if (!ok)
        throw ToleranceExceeded("restriction deviation " + format_number(value_deviation) + " (theta " +
                                format_number(theta_deviation) + ") at sample " + std::to_string(worst_sample));
}

RestrictionReport restriction_check(const LagrangianSystem& regularized, const LagrangianSystem& original,
                                    const std::vector<Vector>& samples, double value_tol, double theta_tol) {
    const std::size_t n = original.chart.dim();
    if (regularized.chart.dim() < n) throw ChartMismatch("regularized chart is smaller than the original");
    for (std::size_t i = 0; i < n; ++i)
        if (regularized.chart.name(i) != original.chart.name(i))
            throw ChartMismatch("original chart is not a prefix of the regularized chart");
    RestrictionReport rep;
    double worst = -1.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vector& p = samples[s];
        const Vector base = p.head(ix(n));
        const double dv = std::fabs(regularized.lagrangian.evaluate(as_span(p)) - original.lagrangian.evaluate(as_span(base)));
        const Vector th = poincare_cartan(regularized, p).head(ix(n)) - poincare_cartan(original, base);
        const double dt = th.size() ? th.cwiseAbs().maxCoeff() : 0.0;
        rep.value_deviation = std::max(rep.value_deviation, dv);
        rep.theta_deviation = std::max(rep.theta_deviation, dt);
        const double score = std::max(dv / value_tol, dt / theta_tol);
        if (score > worst) {
            worst = score;
            rep.worst_sample = s;
        }
    }
    rep.ok = rep.value_deviation <= value_tol && rep.theta_deviation <= theta_tol;
    return rep;
}

void RegularityReport::require() const {
    if (!ok)
        throw DegenerateAtSample("smallest singular value " + format_number(min_singular_value) + " at sample " +
                                 std::to_string(worst_sample));
}

namespace {

// Smallest singular value of omega (stacked with dt on jet charts); negative when the Reeb solve fails.
double regularity_margin(const LagrangianSystem& sys, const Vector& p) {
    const Matrix omega = lagrangian_2form(sys, p);
    if (!sys.chart.has_time()) {
        Eigen::JacobiSVD<Matrix> svd(omega);
        return svd.singularValues().size() ? svd.singularValues().minCoeff() : 1.0;
    }
    Vector time_form = Vector::Zero(omega.rows());
    time_form[ix(sys.chart.time_index())] = 1.0;
    Matrix stacked(omega.rows() + 1, omega.cols());
    stacked << omega, time_form.transpose();
    Eigen::JacobiSVD<Matrix> svd(stacked);
    const double sigma = svd.singularValues().minCoeff();
    const auto reeb = reeb_evolution_field(omega, time_form);
    if (!reeb.ok() || reeb.kernel_dim != 0) return -sigma;
    return sigma;
}

}  // namespace

RegularityReport verify_regularity(const LagrangianSystem& regularized, const std::vector<Vector>& samples, double tol,
                                   const std::vector<double>& shell_radii) {
    RegularityReport rep;
    rep.samples = samples.size();
    rep.min_singular_value = samples.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const double m = regularity_margin(regularized, samples[s]);
        if (std::fabs(m) < rep.min_singular_value) {
            rep.min_singular_value = std::fabs(m);
            rep.worst_sample = s;
        }
        if (m <= tol && rep.ok) {
            rep.ok = false;
            rep.worst_sample = s;
        }
    }

    std::vector<double> radii = shell_radii;
    std::sort(radii.begin(), radii.end());
    const auto mu = regularized.chart.multiplier_indices();
    const auto mudot = regularized.chart.multiplier_velocity_indices();
    bool verified = rep.ok;
    for (double radius : radii) {
        double shell_min = std::numeric_limits<double>::infinity();
        bool pass = true;
        const double c = mu.empty() ? 0.0 : radius / std::sqrt(2.0 * static_cast<double>(mu.size()));
        for (const auto& p0 : samples) {
            Vector p = p0;
            for (auto i : mu) p[ix(i)] += c;
            for (auto i : mudot) p[ix(i)] += c;
            const double m = regularity_margin(regularized, p);
            shell_min = std::min(shell_min, std::fabs(m));
            if (m <= tol) pass = false;
        }
        rep.shell_min_singular.push_back(shell_min);
        if (verified && pass) rep.verified_radius = radius;
        else verified = false;
    }
    return rep;
}

void CoisotropyReport::require() const {
    if (!ok)
        throw NotCoisotropic("orthogonal dimension " + std::to_string(orthogonal_dim) + " (expected " +
                             std::to_string(expected_dim) + "), containment residual " + format_number(containment) +
                             " at sample " + std::to_string(worst_sample));
}

CoisotropyReport coisotropy_check(const LagrangianSystem& regularized, const std::vector<Vector>& samples, double tol) {
    const Chart& chart = regularized.chart;
    const std::size_t n = chart.original_dim();
    CoisotropyReport rep;
    rep.expected_dim = 2 * chart.multiplier_count();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Matrix omega = lagrangian_2form(regularized, samples[s]);
        // u is orthogonal to the embedded tangent space iff (omega^T u)_i = 0 for original i
        Matrix rows = omega.transpose().topRows(ix(n));
        if (chart.has_time()) {
            Matrix stacked(rows.rows() + 1, rows.cols());
            Vector time_form = Vector::Zero(rows.cols());
            time_form[ix(chart.time_index())] = 1.0;
            stacked << rows, time_form.transpose();
            rows = stacked;
        }
        const Matrix orth = null_space(rows);
        const double contained =
            orth.rows() > ix(n) && orth.cols() > 0 ? orth.bottomRows(orth.rows() - ix(n)).cwiseAbs().maxCoeff() : 0.0;
        const auto dim = static_cast<std::size_t>(orth.cols());
        if (contained > rep.containment) {
            rep.containment = contained;
            if (rep.ok) rep.worst_sample = s;
        }
        if (s == 0 || dim != rep.expected_dim) rep.orthogonal_dim = dim;
        if ((dim != rep.expected_dim || contained > tol) && rep.ok) {
            rep.ok = false;
            rep.worst_sample = s;
        }
    }
    return rep;
}

ProductTorsionReport product_torsion(const AlmostProductSpec& product, const Chart& chart,
                                     const std::vector<Vector>& samples, double tol) {
    const auto leaves = chart.leaf_positions();
    const auto fibers = chart.fiber_positions();
    require_shape(product.p.size(), fibers.size(), "P rows");
    for (const auto& row : product.p) require_shape(row.size(), leaves.size(), "P columns");
    if (chart.has_time()) require_shape(product.q.size(), fibers.size(), "Q entries");

    // horizontal directions: chart index of the coordinate and its fiber coefficients
    std::vector<std::pair<std::size_t, std::vector<const Expression*>>> dirs;
    for (std::size_t a = 0; a < leaves.size(); ++a) {
        std::vector<const Expression*> coef;
        for (std::size_t A = 0; A < fibers.size(); ++A) coef.push_back(&product.p[A][a]);
        dirs.emplace_back(chart.config()[leaves[a]], coef);
    }
    if (chart.has_time()) {
        std::vector<const Expression*> coef;
        for (std::size_t A = 0; A < fibers.size(); ++A) coef.push_back(&product.q[A]);
        dirs.emplace_back(chart.time_index(), coef);
    }

    ProductTorsionReport rep;
    rep.tolerance = tol;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto span = as_span(samples[k]);
        std::vector<std::vector<ValueGradient>> eval(dirs.size());
        for (std::size_t i = 0; i < dirs.size(); ++i)
            for (const Expression* e : dirs[i].second) eval[i].push_back(e->eval_with_gradient(span));
        // H_i(g) = dg/dy_i + sum_B coef_i^B dg/df^B
        auto apply = [&](std::size_t i, const Vector& grad) {
            double v = grad[ix(dirs[i].first)];
            for (std::size_t B = 0; B < fibers.size(); ++B) v += eval[i][B].value * grad[ix(chart.config()[fibers[B]])];
            return v;
        };
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            for (std::size_t j = i + 1; j < dirs.size(); ++j) {
                double norm = 0.0;
                for (std::size_t A = 0; A < fibers.size(); ++A) {
                    const double c = apply(i, eval[j][A].gradient) - apply(j, eval[i][A].gradient);
                    norm += c * c;
                }
                norm = std::sqrt(norm);
                if (norm > rep.residual) {
                    rep.residual = norm;
                    rep.worst_sample = k;
                }
            }
        }
    }
    rep.ok = rep.residual <= tol;
    return rep;
}

std::vector<Vector> zero_section(const Chart& thickened, const std::vector<Vector>& points) {
    std::vector<Vector> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (static_cast<std::size_t>(p.size()) != thickened.original_dim())
            throw DimensionMismatch("zero_section expects points of the original chart");
        Vector q = Vector::Zero(ix(thickened.dim()));
        q.head(p.size()) = p;
        out.push_back(q);
    }
    return out;
}

}  // namespace lagreg
