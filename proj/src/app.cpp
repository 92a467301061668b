#include "lagreg/app.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lagreg/errors.hpp"
#include "lagreg/parallel.hpp"

namespace lagreg::app {

namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

[[noreturn]] void config_error(const std::string& field, const std::string& reason) {
    throw ConfigError(field + ": " + reason);
}

void check_keys(const Json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) config_error(path, "expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) config_error(path.empty() ? key : path + "." + key, "unknown field");
}

std::string as_string(const Json& v, const std::string& field) {
    if (!v.is_string()) config_error(field, "expected a string");
    return v.get<std::string>();
}

double as_number(const Json& v, const std::string& field) {
    if (!v.is_number()) config_error(field, "expected a number");
    return v.get<double>();
}

std::size_t as_count(const Json& v, const std::string& field) {
    if (!v.is_number_unsigned()) config_error(field, "expected a non-negative integer");
    return v.get<std::size_t>();
}

bool as_bool(const Json& v, const std::string& field) {
    if (!v.is_boolean()) config_error(field, "expected true or false");
    return v.get<bool>();
}

const Json& array_of(const Json& v, const std::string& field, std::optional<std::size_t> size = std::nullopt) {
    if (!v.is_array()) config_error(field, "expected an array");
    if (size && v.size() != *size)
        config_error(field, "expected " + std::to_string(*size) + " entries, got " + std::to_string(v.size()));
    return v;
}

Expression expression(const Json& v, const std::string& field, const Chart& chart) {
    if (v.is_number()) return Expression::constant(v.get<double>());
    try {
        return parse(as_string(v, field), chart);
    } catch (const Error& e) {
        config_error(field, e.what());
    }
}

std::vector<Expression> expression_list(const Json& v, const std::string& field, const Chart& chart,
                                        std::optional<std::size_t> size = std::nullopt) {
    std::vector<Expression> out;
    const Json& arr = array_of(v, field, size);
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(expression(arr[i], field + "[" + std::to_string(i) + "]", chart));
    return out;
}

std::vector<std::vector<Expression>> expression_table(const Json& v, const std::string& field, const Chart& chart,
                                                      std::size_t rows, std::size_t cols) {
    std::vector<std::vector<Expression>> out;
    const Json& arr = array_of(v, field, rows);
    for (std::size_t i = 0; i < rows; ++i)
        out.push_back(expression_list(arr[i], field + "[" + std::to_string(i) + "]", chart, cols));
    return out;
}

Chart parse_chart(const Json& v) {
    check_keys(v, "chart", {"base", "time"});
    if (!v.contains("base")) config_error("chart.base", "missing");
    std::vector<BaseCoordinate> base;
    const Json& arr = array_of(v["base"], "chart.base");
    if (arr.empty()) config_error("chart.base", "at least one coordinate is required");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string field = "chart.base[" + std::to_string(i) + "]";
        check_keys(arr[i], field, {"name", "role"});
        if (!arr[i].contains("name")) config_error(field + ".name", "missing");
        BaseCoordinate c;
        c.name = as_string(arr[i]["name"], field + ".name");
        const std::string role = arr[i].contains("role") ? as_string(arr[i]["role"], field + ".role") : "leaf";
        if (role == "leaf") c.role = Role::Leaf;
        else if (role == "fiber") c.role = Role::Fiber;
        else config_error(field + ".role", "expected 'leaf' or 'fiber'");
        base.push_back(c);
    }
    const bool timed = v.contains("time") && as_bool(v["time"], "chart.time");
    try {
        return Chart::tangent(base, timed);
    } catch (const Error& e) {
        config_error("chart", e.what());
    }
}

MetricData parse_metric(const Json& v, const Chart& chart) {
    check_keys(v, "metric", {"g", "A", "V"});
    const std::size_t n = chart.base_dim();
    MetricData m;
    if (!v.contains("g")) config_error("metric.g", "missing");
    m.g = expression_table(v["g"], "metric.g", chart, n, n);
    m.a = v.contains("A") ? expression_list(v["A"], "metric.A", chart, n)
                          : std::vector<Expression>(n, Expression::constant(0.0));
    m.v = v.contains("V") ? expression(v["V"], "metric.V", chart) : Expression::constant(0.0);
    return m;
}

void parse_regularization(const Json& v, Scenario& s) {
    check_keys(v, "regularization", {"fibers", "P", "Q", "connection"});
    const Chart& chart = s.system.chart;
    if (v.contains("fibers")) {
        std::vector<std::size_t> positions;
        const Json& arr = array_of(v["fibers"], "regularization.fibers");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string field = "regularization.fibers[" + std::to_string(i) + "]";
            const std::string name = as_string(arr[i], field);
            std::optional<std::size_t> pos;
            for (std::size_t b = 0; b < chart.base().size(); ++b)
                if (chart.base()[b].name == name) pos = b;
            if (!pos) config_error(field, "'" + name + "' is not a base coordinate");
            positions.push_back(*pos);
        }
        s.fibers = positions;
    }
    const std::size_t r = s.fibers ? s.fibers->size() : chart.fiber_positions().size();
    const std::size_t l = chart.base_dim() - r;
    if (v.contains("P") || v.contains("Q")) {
        AlmostProductSpec spec = AlmostProductSpec::zero(l, r, chart.has_time());
        if (v.contains("P")) spec.p = expression_table(v["P"], "regularization.P", chart, r, l);
        if (v.contains("Q")) {
            if (!chart.has_time()) config_error("regularization.Q", "only allowed on time-dependent charts");
            spec.q = expression_list(v["Q"], "regularization.Q", chart, r);
        }
        s.product = spec;
    }
    if (v.contains("connection")) {
        const Json& c = v["connection"];
        check_keys(c, "regularization.connection", {"mode", "leaf", "fiber", "time"});
        ConnectionSpec conn;
        const std::string mode = c.contains("mode") ? as_string(c["mode"], "regularization.connection.mode") : "zero";
        if (mode == "zero") conn.mode = ConnectionMode::Zero;
        else if (mode == "linear") conn.mode = ConnectionMode::Linear;
        else config_error("regularization.connection.mode", "expected 'zero' or 'linear'");
        auto cube = [&](const char* key, std::size_t outer) {
            std::vector<std::vector<std::vector<Expression>>> out;
            const std::string field = std::string("regularization.connection.") + key;
            if (!c.contains(key)) {
                out.assign(outer, std::vector<std::vector<Expression>>(
                                      r, std::vector<Expression>(r, Expression::constant(0.0))));
                return out;
            }
            const Json& arr = array_of(c[key], field, outer);
            for (std::size_t i = 0; i < outer; ++i)
                out.push_back(expression_table(arr[i], field + "[" + std::to_string(i) + "]", chart, r, r));
            return out;
        };
        if (conn.mode == ConnectionMode::Linear) {
            conn.leaf = cube("leaf", l);
            conn.fiber = cube("fiber", r);
            if (chart.has_time()) {
                conn.time = c.contains("time") ? expression_table(c["time"], "regularization.connection.time", chart, r, r)
                                               : std::vector<std::vector<Expression>>(
                                                     r, std::vector<Expression>(r, Expression::constant(0.0)));
            }
        }
        s.connection = conn;
    }
}

void parse_sampling(const Json& v, SamplingSpec& s) {
    check_keys(v, "sampling", {"count", "lo", "hi", "seed", "shells"});
    if (v.contains("count")) s.count = as_count(v["count"], "sampling.count");
    if (s.count == 0) config_error("sampling.count", "must be positive");
    if (v.contains("lo")) s.lo = as_number(v["lo"], "sampling.lo");
    if (v.contains("hi")) s.hi = as_number(v["hi"], "sampling.hi");
    if (v.contains("seed")) s.seed = as_count(v["seed"], "sampling.seed");
    if (v.contains("shells")) {
        s.shells.clear();
        const Json& arr = array_of(v["shells"], "sampling.shells");
        for (std::size_t i = 0; i < arr.size(); ++i) s.shells.push_back(as_number(arr[i], "sampling.shells"));
    }
}

void parse_integration(const Json& v, IntegrationSpec& s, const Chart& chart) {
    check_keys(v, "integration", {"method", "step", "t0", "t1", "rtol", "atol", "initial", "monitor", "max_condition"});
    IntegrationOptions& o = s.options;
    if (v.contains("method")) {
        const std::string m = as_string(v["method"], "integration.method");
        if (m == "rk4") o.method = Method::Rk4;
        else if (m == "rk45") o.method = Method::Rk45;
        else config_error("integration.method", "expected 'rk4' or 'rk45'");
    }
    if (v.contains("step")) o.step = as_number(v["step"], "integration.step");
    if (v.contains("rtol")) o.rtol = as_number(v["rtol"], "integration.rtol");
    if (v.contains("atol")) o.atol = as_number(v["atol"], "integration.atol");
    if (v.contains("max_condition")) o.max_condition = as_number(v["max_condition"], "integration.max_condition");
    if (!(o.step > 0.0)) config_error("integration.step", "must be positive");
    if (!(o.rtol > 0.0) || !(o.atol > 0.0)) config_error("integration", "tolerances must be positive");
    if (v.contains("t0")) s.t0 = as_number(v["t0"], "integration.t0");
    if (v.contains("t1")) s.t1 = as_number(v["t1"], "integration.t1");
    if (s.t1 && *s.t1 < s.t0) config_error("integration.t1", "must not precede t0");
    if (v.contains("initial")) {
        const Json& arr = array_of(v["initial"], "integration.initial", chart.dim());
        Vector init(ix(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) init[ix(i)] = as_number(arr[i], "integration.initial");
        s.initial = init;
    }
    if (v.contains("monitor")) {
        if (!v["monitor"].is_object()) config_error("integration.monitor", "expected an object of name: expression");
        for (const auto& [name, expr] : v["monitor"].items())
            s.monitor.emplace_back(name, as_string(expr, "integration.monitor." + name));
    }
}

void parse_pca(const Json& v, PcaSpec& s) {
    check_keys(v, "pca", {"max_iter", "tol", "grid"});
    if (v.contains("max_iter")) s.max_iter = as_count(v["max_iter"], "pca.max_iter");
    if (v.contains("tol")) s.tol = as_number(v["tol"], "pca.tol");
    if (v.contains("grid")) s.grid = as_count(v["grid"], "pca.grid");
    if (s.grid < 2) config_error("pca.grid", "needs at least two points per side");
}

// ---------------------------------------------------------------------------

Json to_json(const Vector& v) {
    Json arr = Json::array();
    for (Idx i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Json named_state(const Chart& chart, const Vector& v) {
    Json obj = Json::object();
    for (std::size_t i = 0; i < chart.dim(); ++i) obj[chart.name(i)] = v[ix(i)];
    return obj;
}

Json error_entry(const std::string& operation, const Error& e) {
    return Json{{"operation", operation}, {"kind", e.kind()}, {"message", e.what()}};
}

std::vector<std::string> base_names(const Chart& chart, const std::vector<std::size_t>& positions) {
    std::vector<std::string> out;
    for (auto p : positions) out.push_back(chart.base()[p].name);
    return out;
}

struct Box {
    double lo, hi;
};

Box box(const RunConfig& c) {
    return {c.sampling.lo.value_or(c.problem.sample_lo), c.sampling.hi.value_or(c.problem.sample_hi)};
}

std::vector<Vector> samples(const RunConfig& c, const Chart& chart, std::uint64_t stream = 0) {
    const Box b = box(c);
    return draw_samples(chart, c.sampling.count, b.lo, b.hi, c.sampling.seed + stream);
}

VectorField kernel_field(const Scenario& s) {
    return [fields = s.kernel_field](const Vector& p) {
        Vector w(ix(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) w[ix(i)] = fields[i].evaluate(as_span(p));
        return w;
    };
}

MatrixField omega_field(const LagrangianSystem& sys) {
    return [sys](const Vector& p) { return lagrangian_2form(sys, p); };
}

Json helmholtz_json(const HelmholtzReport& h) {
    Json j{{"ok", h.ok},
           {"closure_residual", h.closure_residual},
           {"symmetry_residual", h.symmetry_residual},
           {"closure_tolerance", h.closure_tolerance},
           {"symmetry_tolerance", h.symmetry_tolerance}};
    if (!h.ok) {
        j["failing_condition"] = h.failing_condition;
        j["worst_sample"] = h.worst_sample;
    }
    return j;
}

Json evidence_json(const KernelReport& k, const Chart& chart) {
    Json j{{"fiber_rank", k.fiber_rank},
           {"failed_check", k.failed_check.empty() ? Json(nullptr) : Json(k.failed_check)},
           {"vertical_mismatch", k.vertical_mismatch},
           {"velocity_dependence", k.velocity_dependence},
           {"involutivity_residual", k.involutivity_residual},
           {"lift_residual", k.lift_residual}};
    const auto aligned = k.aligned_fibers();
    j["aligned_fibers"] = aligned ? Json(base_names(chart, *aligned)) : Json(nullptr);
    return j;
}

std::vector<Vector> pca_samples(const RunConfig& c) {
    const Chart& chart = c.problem.system.chart;
    const std::size_t n = chart.base_dim();
    if (n > 2) return samples(c, chart);
    const Box b = box(c);
    const std::size_t side = c.pca.grid;
    std::vector<Vector> out;
    std::size_t total = 1;
    for (std::size_t k = 0; k < n; ++k) total *= side;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector p = Vector::Zero(ix(chart.dim()));
        std::size_t rest = idx;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t step = rest % side;
            rest /= side;
            p[ix(chart.config()[n - 1 - k])] = b.lo + (b.hi - b.lo) * static_cast<double>(step) / (side - 1);
        }
        out.push_back(p);
    }
    return out;
}

struct Prepared {
    KernelReport evidence;
    std::vector<std::size_t> fibers;
    AlmostProductSpec product;
};

Prepared prepare_regularization(const RunConfig& c, const std::vector<Vector>& pts) {
    const Scenario& s = c.problem;
    Prepared p;
    p.evidence = detect_complete_lift(s.system, pts);
    if (s.fibers) p.fibers = *s.fibers;
    else if (auto aligned = p.evidence.aligned_fibers()) p.fibers = *aligned;
    p.product = s.product;
    if (p.product.p.empty() && !p.fibers.empty())
        p.product = AlmostProductSpec::zero(s.system.chart.base_dim() - p.fibers.size(), p.fibers.size(),
                                            s.system.chart.has_time());
    return p;
}

Regularization regularize(const RunConfig& c, const Prepared& p) {
    const Scenario& s = c.problem;
    std::optional<std::vector<std::size_t>> fibers;
    if (!p.fibers.empty() || s.fibers) fibers = p.fibers;
    return build_regularized_lagrangian(s.system, p.product, s.connection, p.evidence, c.force, fibers);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Vector> draw_samples(const Chart& chart, std::size_t count, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vector p(ix(chart.dim()));
        for (auto& x : p) x = lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        out.push_back(p);
    }
    return out;
}

RunConfig parse_config(const Json& doc) {
    check_keys(doc, "", {"scenario", "options", "chart", "lagrangian", "metric", "kernel_field", "regularization",
                         "sampling", "integration", "pca", "out", "force"});
    RunConfig c;
    if (doc.contains("scenario")) {
        for (const char* k : {"chart", "lagrangian", "metric"})
            if (doc.contains(k)) config_error(k, "cannot be combined with a catalog scenario");
        ScenarioOptions opts;
        if (doc.contains("options")) {
            if (!doc["options"].is_object()) config_error("options", "expected an object");
            for (const auto& [k, v] : doc["options"].items()) opts[k] = as_string(v, "options." + k);
        }
        try {
            c.problem = load_scenario(as_string(doc["scenario"], "scenario"), opts);
        } catch (const UnknownScenario& e) {
            config_error("scenario", e.what());
        } catch (const SyntaxError& e) {
            config_error("options", e.what());
        } catch (const UnknownIdentifier& e) {
            config_error("options", e.what());
        } catch (const ConfigError& e) {
            config_error("options", e.what());
        }
    } else {
        if (doc.contains("options")) config_error("options", "only allowed with a catalog scenario");
        if (!doc.contains("chart")) config_error("chart", "missing; give a chart or a scenario");
        Scenario s;
        s.name = "custom";
        s.description = "user configuration";
        const Chart chart = parse_chart(doc["chart"]);
        if (doc.contains("lagrangian") == doc.contains("metric"))
            config_error("lagrangian", "give exactly one of 'lagrangian' and 'metric'");
        if (doc.contains("metric")) {
            s.metric = parse_metric(doc["metric"], chart);
            s.system = LagrangianSystem(chart, metric_lagrangian(chart, *s.metric));
        } else {
            s.system = LagrangianSystem(chart, expression(doc["lagrangian"], "lagrangian", chart));
        }
        if (doc.contains("kernel_field"))
            s.kernel_field = expression_list(doc["kernel_field"], "kernel_field", chart, chart.base_dim());
        if (!chart.fiber_positions().empty()) s.fibers = chart.fiber_positions();
        s.initial = Vector::Zero(ix(chart.dim()));
        c.problem = s;
    }
    if (doc.contains("regularization")) parse_regularization(doc["regularization"], c.problem);
    if (doc.contains("sampling")) parse_sampling(doc["sampling"], c.sampling);
    if (doc.contains("integration")) parse_integration(doc["integration"], c.integration, c.problem.system.chart);
    if (doc.contains("pca")) parse_pca(doc["pca"], c.pca);
    if (doc.contains("out")) c.out_dir = as_string(doc["out"], "out");
    if (doc.contains("force")) c.force = as_bool(doc["force"], "force");
    const Box b = box(c);
    if (!(b.lo < b.hi)) config_error("sampling", "lo must be below hi");
    return c;
}

RunConfig scenario_config(const std::string& name) { return parse_config(Json{{"scenario", name}}); }

std::string dump(const Json& report) { return report.dump(2) + "\n"; }

Json list_scenarios() {
    Json arr = Json::array();
    for (const auto& name : scenario_names()) {
        const Scenario s = load_scenario(name);
        arr.push_back({{"name", name},
                       {"description", s.description},
                       {"lagrangian", s.system.lagrangian.to_string()},
                       {"time_dependent", s.system.chart.has_time()}});
    }
    return Json{{"scenarios", arr}};
}

CommandResult cmd_analyze(const RunConfig& c) {
    const Scenario& s = c.problem;
    const LagrangianSystem& sys = s.system;
    const Chart& chart = sys.chart;
    const auto pts = samples(c, chart);
    Json errors = Json::array();
    Json report{{"command", "analyze"},
                {"scenario", s.name},
                {"seed", c.sampling.seed},
                {"samples", pts.size()},
                {"chart", chart.names()},
                {"lagrangian", sys.lagrangian.to_string()}};

    struct PerSample {
        std::size_t kernel = 0;
        std::size_t hessian = 0;
        Vector primary;
    };
    const auto per = parallel_map(pts.size(), [&](std::size_t k) {
        PerSample out;
        out.kernel = characteristic_distribution(sys, pts[k]).rank();
        out.hessian = hessian_rank(sys, pts[k]).rank;
        if (sys.autonomous()) out.primary = primary_constraints(sys, pts[k]);
        return out;
    });

    Json kernel_ranks = Json::array(), hessian_ranks = Json::array();
    bool constant_rank = true, regular = true;
    for (const auto& p : per) {
        kernel_ranks.push_back(p.kernel);
        hessian_ranks.push_back(p.hessian);
        constant_rank = constant_rank && p.kernel == per.front().kernel;
        regular = regular && p.hessian == chart.base_dim();
    }
    report["kernel_ranks"] = kernel_ranks;
    report["kernel_rank"] = constant_rank ? Json(per.front().kernel) : Json(nullptr);
    report["hessian_ranks"] = hessian_ranks;
    report["regular"] = regular;

    std::optional<KernelReport> lift;
    try {
        lift = detect_complete_lift(sys, pts);
        report["complete_lift"] = lift->is_complete_lift;
        report["complete_lift_evidence"] = evidence_json(*lift, chart);
    } catch (const Error& e) {
        report["complete_lift"] = nullptr;
        errors.push_back(error_entry("detect_complete_lift", e));
    }

    if (sys.autonomous()) {
        Json values = Json::array();
        double worst = 0.0;
        for (const auto& p : per) {
            values.push_back(to_json(p.primary));
            if (p.primary.size()) worst = std::max(worst, p.primary.cwiseAbs().maxCoeff());
        }
        report["primary_constraints"] = Json{{"values", values}, {"max_abs", worst}};
    } else {
        report["primary_constraints"] = nullptr;
    }

    std::optional<bool> consistent;
    std::optional<std::size_t> survivors;
    Json consistency;
    if (s.metric && !s.kernel_field.empty()) {
        try {
            const auto rep = degenerate_metric_consistency(chart, *s.metric, kernel_field(s), pts);
            consistent = rep.consistent;
            consistency = Json{{"method", "metric"},
                               {"residuals", {rep.residuals[0], rep.residuals[1], rep.residuals[2]}},
                               {"tolerance", rep.tolerance}};
            report["failing_condition"] = rep.consistent ? Json(nullptr) : Json(rep.failing_condition);
        } catch (const Error& e) {
            errors.push_back(error_entry("degenerate_metric_consistency", e));
        }
    } else if (regular) {
        consistent = true;
        consistency = Json{{"method", "regular"}};
    } else if (sys.autonomous()) {
        const auto grid = pca_samples(c);
        try {
            const PcaResult pca = run_pca(
                omega_field(sys), [&sys](const Vector& p) { return energy_differential(sys, p); }, grid,
                c.pca.max_iter, c.pca.tol);
            survivors = pca.survivors().size();
            consistent = !pca.inconsistent && pca.survivors().size() == grid.size();
            Json history = Json::array();
            for (const auto& h : pca.history) history.push_back(h.size());
            Json points = Json::array();
            if (pca.survivors().size() <= 50)
                for (auto k : pca.survivors()) points.push_back(to_json(grid[k]));
            consistency = Json{{"method", "constraint_algorithm"}};
            report["pca"] = Json{{"points", grid.size()},        {"iterations", pca.iterations},
                                 {"stabilized", pca.stabilized}, {"inconsistent", pca.inconsistent},
                                 {"survivors", pca.survivors().size()}, {"survivor_history", history},
                                 {"survivor_points", points},    {"constraints", pca.constraints.count()},
                                 {"jacobian_rank", pca.constraints.jacobian_rank}};
        } catch (const Error& e) {
            errors.push_back(error_entry("run_pca", e));
        }
    } else {
        const Vector dt = Vector::Unit(ix(chart.dim()), ix(chart.time_index()));
        const auto solved = parallel_map(pts.size(), [&](std::size_t k) {
            return reeb_evolution_field(lagrangian_2form(sys, pts[k]), dt).ok();
        });
        std::size_t failures = 0;
        for (bool ok : solved) failures += ok ? 0 : 1;
        consistent = failures == 0;
        consistency = Json{{"method", "reeb"}, {"unsolvable_samples", failures}};
    }
    report["consistent"] = consistent ? Json(*consistent) : Json(nullptr);
    report["consistency"] = consistency;

    try {
        report["helmholtz"] = helmholtz_json(helmholtz_check(omega_field(sys), chart, pts));
    } catch (const Error& e) {
        errors.push_back(error_entry("helmholtz_check", e));
    }

    int code = errors.empty() ? Success : VerificationFailure;
    if (s.expected) {
        const ExpectedProperties& e = *s.expected;
        bool matches = constant_rank && per.front().kernel == e.kernel_rank;
        matches = matches && lift && lift->is_complete_lift == e.complete_lift;
        if (e.consistent) matches = matches && consistent == e.consistent;
        if (e.pca_survivors) matches = matches && survivors == e.pca_survivors;
        Json exp{{"kernel_rank", e.kernel_rank}, {"complete_lift", e.complete_lift}, {"matches", matches}};
        exp["consistent"] = e.consistent ? Json(*e.consistent) : Json(nullptr);
        exp["pca_survivors"] = e.pca_survivors ? Json(*e.pca_survivors) : Json(nullptr);
        report["expected"] = exp;
        if (!matches) code = VerificationFailure;
    }
    report["errors"] = errors;
    return {report, code, std::nullopt};
}

CommandResult cmd_regularize(const RunConfig& c) {
    const Scenario& s = c.problem;
    const auto pts = samples(c, s.system.chart);
    Json errors = Json::array();
    Json report{{"command", "regularize"}, {"scenario", s.name}, {"seed", c.sampling.seed}, {"forced", c.force}};

    Prepared prep;
    Regularization reg;
    try {
        prep = prepare_regularization(c, pts);
        report["complete_lift"] = prep.evidence.is_complete_lift;
        report["complete_lift_evidence"] = evidence_json(prep.evidence, s.system.chart);
        reg = regularize(c, prep);
    } catch (const Error& e) {
        errors.push_back(error_entry("build_regularized_lagrangian", e));
        report["errors"] = errors;
        report["ok"] = false;
        return {report, VerificationFailure, std::nullopt};
    }

    const Chart& th = reg.system.chart;
    report["hypothesis_holds"] = reg.hypothesis_holds;
    report["fiber_rank"] = reg.fiber_rank;
    report["fibers"] = base_names(s.system.chart, reg.fibers);
    report["chart"] = th.names();
    report["original_lagrangian"] = s.system.lagrangian.to_string();
    report["lagrangian"] = reg.system.lagrangian.to_string();
    report["correction"] = reg.fiber_rank ? Json(reg.correction.to_string()) : Json(nullptr);
    if (reg.fiber_rank == 0) report["note"] = "regular system, r = 0: the Lagrangian is unchanged";

    const auto section = zero_section(th, pts);
    bool ok = reg.hypothesis_holds;
    try {
        const auto r = restriction_check(reg.system, s.system, section);
        report["restriction"] = Json{{"ok", r.ok}, {"value_deviation", r.value_deviation},
                                     {"theta_deviation", r.theta_deviation}};
        ok = ok && r.ok;
    } catch (const Error& e) {
        errors.push_back(error_entry("restriction_check", e));
    }
    try {
        const auto r = verify_regularity(reg.system, section, 1e-8, c.sampling.shells);
        report["regularity"] = Json{{"ok", r.ok},
                                    {"min_singular_value", r.min_singular_value},
                                    {"samples", r.samples},
                                    {"verified_radius", r.verified_radius},
                                    {"shell_radii", c.sampling.shells},
                                    {"shell_min_singular", r.shell_min_singular}};
        ok = ok && r.ok;
    } catch (const Error& e) {
        errors.push_back(error_entry("verify_regularity", e));
    }
    try {
        const auto r = coisotropy_check(reg.system, section);
        report["coisotropy"] = Json{{"ok", r.ok}, {"expected_dim", r.expected_dim},
                                    {"orthogonal_dim", r.orthogonal_dim}, {"containment", r.containment}};
        ok = ok && r.ok;
    } catch (const Error& e) {
        errors.push_back(error_entry("coisotropy_check", e));
    }
    if (reg.fiber_rank) {
        try {
            const auto t = product_torsion(prep.product, th, section);
            report["product_torsion"] = Json{{"ok", t.ok}, {"residual", t.residual}, {"tolerance", t.tolerance}};
            ok = ok && t.ok;
        } catch (const Error& e) {
            errors.push_back(error_entry("product_torsion", e));
        }
    }
    try {
        const auto h = helmholtz_check(omega_field(reg.system), th, samples(c, th, 1));
        report["helmholtz"] = helmholtz_json(h);
        ok = ok && h.ok;
    } catch (const Error& e) {
        errors.push_back(error_entry("helmholtz_check", e));
    }
    ok = ok && errors.empty();
    report["ok"] = ok;
    report["errors"] = errors;
    return {report, ok ? Success : VerificationFailure, std::nullopt};
}

CommandResult cmd_simulate(const RunConfig& c) {
    const Scenario& s = c.problem;
    const IntegrationSpec& spec = c.integration;
    Json errors = Json::array();
    Json report{{"command", "simulate"}, {"scenario", s.name}, {"seed", c.sampling.seed}};

    const Vector initial = spec.initial.value_or(s.initial);
    if (initial.size() != ix(s.system.chart.dim()))
        config_error("integration.initial", "expected " + std::to_string(s.system.chart.dim()) + " entries");
    const double t1 = spec.t1.value_or(s.t_end);
    if (t1 < spec.t0) config_error("integration.t1", "must not precede t0");

    LagrangianSystem target = s.system;
    std::size_t fiber_rank = 0;
    if (hessian_rank(s.system, initial).rank < s.system.chart.base_dim()) {
        try {
            const Regularization reg = regularize(c, prepare_regularization(c, samples(c, s.system.chart)));
            if (!reg.hypothesis_holds) report["hypothesis_holds"] = false;
            target = reg.system;
            fiber_rank = reg.fiber_rank;
        } catch (const Error& e) {
            errors.push_back(error_entry("build_regularized_lagrangian", e));
            report["errors"] = errors;
            return {report, VerificationFailure, std::nullopt};
        }
    }
    report["fiber_rank"] = fiber_rank;
    report["lagrangian"] = target.lagrangian.to_string();
    report["chart"] = target.chart.names();

    IntegrationOptions options = spec.options;
    for (const auto& [name, src] : spec.monitor) {
        try {
            options.monitored.push_back(parse(src, target.chart));
        } catch (const Error& e) {
            config_error("integration.monitor." + name, e.what());
        }
        options.monitored_names.push_back(name);
    }

    const Vector start = zero_section(target.chart, {initial}).front();
    TrajectoryRecord traj;
    try {
        traj = integrate(target, start, spec.t0, t1, options);
    } catch (const Error& e) {
        errors.push_back(error_entry("integrate", e));
        report["errors"] = errors;
        return {report, IntegrationFailure, std::nullopt};
    }

    std::ostringstream csv;
    traj.write_csv(csv);
    const InvariantReport inv = monitor_invariants(target, traj, options.monitored);
    double max_mu = 0.0;
    for (double m : traj.mu_norm) max_mu = std::max(max_mu, m);
    Json summary{{"rows", traj.size()},
                 {"t0", spec.t0},
                 {"t1", t1},
                 {"max_mu_norm", max_mu},
                 {"energy_drift", target.autonomous() ? Json(inv.max_energy_drift) : Json(nullptr)},
                 {"max_sode_residual", inv.max_sode_residual},
                 {"final_state", traj.size() ? named_state(target.chart, traj.states.back()) : Json(nullptr)}};
    Json monitored = Json::object();
    for (std::size_t k = 0; k < inv.constraint_max.size(); ++k) monitored[options.monitored_names[k]] = inv.constraint_max[k];
    summary["monitored_max"] = monitored;
    if (s.reference && spec.t0 == 0.0) {
        const auto dev = compare_projection(traj, s.system.chart, [&](double t) { return s.reference(initial, t); });
        summary["deviation"] = Json{{"max", dev.max_deviation}, {"worst_time", dev.worst_time}};
    } else {
        summary["deviation"] = nullptr;
    }
    report["summary"] = summary;
    report["errors"] = errors;
    return {report, Success, csv.str()};
}

}  // namespace lagreg::app
