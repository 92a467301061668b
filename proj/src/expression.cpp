#include "lagreg/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "lagreg/dual.hpp"
#include "lagreg/errors.hpp"

namespace lagreg {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr make_variable(std::size_t index, std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->index = index;
    n->name = std::move(name);
    return n;
}

NodePtr make_node(NodeKind kind, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

// ---------------------------------------------------------------- printing

int precedence(const Node& n) {
    switch (n.kind) {
        case NodeKind::Constant: return (n.value < 0.0 || std::signbit(n.value)) ? 3 : 5;
        case NodeKind::Variable:
        case NodeKind::Sin:
        case NodeKind::Cos:
        case NodeKind::Exp:
        case NodeKind::Log: return 5;
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
    }
    return 5;
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, int required, std::string& out) {
    if (precedence(child) < required) {
        out += '(';
        print(child, out);
        out += ')';
    } else {
        print(child, out);
    }
}

void print(const Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Constant: out += format_number(n.value); return;
        case NodeKind::Variable: out += n.name; return;
        case NodeKind::Add:
            print_child(*n.lhs, 1, out);
            out += " + ";
            print_child(*n.rhs, 2, out);
            return;
        case NodeKind::Sub:
            print_child(*n.lhs, 1, out);
            out += " - ";
            print_child(*n.rhs, 2, out);
            return;
        case NodeKind::Mul:
            print_child(*n.lhs, 2, out);
            out += '*';
            print_child(*n.rhs, 3, out);
            return;
        case NodeKind::Div:
            print_child(*n.lhs, 2, out);
            out += '/';
            print_child(*n.rhs, 3, out);
            return;
        case NodeKind::Pow:
            print_child(*n.lhs, 5, out);
            out += '^';
            print_child(*n.rhs, 3, out);
            return;
        case NodeKind::Neg:
            out += '-';
            print_child(*n.lhs, 4, out);
            return;
        case NodeKind::Sin:
        case NodeKind::Cos:
        case NodeKind::Exp:
        case NodeKind::Log: {
            static const char* names[] = {"sin", "cos", "exp", "log"};
            out += names[static_cast<int>(n.kind) - static_cast<int>(NodeKind::Sin)];
            out += '(';
            print(*n.lhs, out);
            out += ')';
            return;
        }
    }
}

std::string node_string(const Node& n) {
    std::string s;
    print(n, s);
    return s;
}

// -------------------------------------------------------------- evaluation

template <typename T>
T real_pow(const T& base, double c) {
    using std::pow;
    return pow(base, c);
}

template <typename T>
T eval(const Node& n, const std::vector<T>& vars) {
    switch (n.kind) {
        case NodeKind::Constant: return T(n.value);
        case NodeKind::Variable: return vars[n.index];
        case NodeKind::Add: return eval(*n.lhs, vars) + eval(*n.rhs, vars);
        case NodeKind::Sub: return eval(*n.lhs, vars) - eval(*n.rhs, vars);
        case NodeKind::Mul: return eval(*n.lhs, vars) * eval(*n.rhs, vars);
        case NodeKind::Neg: return -eval(*n.lhs, vars);
        case NodeKind::Div: {
            T den = eval(*n.rhs, vars);
            if (primal(den) == 0.0) throw DomainError("division by zero", node_string(n));
            return eval(*n.lhs, vars) / den;
        }
        case NodeKind::Pow: {
            T base = eval(*n.lhs, vars);
            if (n.rhs->kind == NodeKind::Constant) {
                const double c = n.rhs->value;
                if (c == std::floor(c) && std::fabs(c) <= 1024.0) {
                    if (c < 0.0 && primal(base) == 0.0) throw DomainError("division by zero", node_string(n));
                    return ipow(base, static_cast<long>(c));
                }
                if (primal(base) <= 0.0)
                    throw DomainError("non-integer power of non-positive base", node_string(n));
                return real_pow(base, c);
            }
            if (primal(base) <= 0.0) throw DomainError("variable power of non-positive base", node_string(n));
            using std::exp;
            using std::log;
            return exp(eval(*n.rhs, vars) * log(base));
        }
        case NodeKind::Sin: {
            using std::sin;
            return sin(eval(*n.lhs, vars));
        }
        case NodeKind::Cos: {
            using std::cos;
            return cos(eval(*n.lhs, vars));
        }
        case NodeKind::Exp: {
            using std::exp;
            return exp(eval(*n.lhs, vars));
        }
        case NodeKind::Log: {
            T x = eval(*n.lhs, vars);
            if (primal(x) <= 0.0) throw DomainError("log of non-positive value", node_string(n));
            using std::log;
            return log(x);
        }
    }
    return T(0.0);
}

void collect_indices(const Node& n, std::set<std::size_t>& out) {
    if (n.kind == NodeKind::Variable) out.insert(n.index);
    if (n.lhs) collect_indices(*n.lhs, out);
    if (n.rhs) collect_indices(*n.rhs, out);
}

// ----------------------------------------------------------------- parsing

class Parser {
public:
    Parser(std::string_view src, const Chart& chart) : src_(src), chart_(chart) {}

    NodePtr parse_all() {
        NodePtr e = expr();
        skip();
        if (pos_ != src_.size()) throw SyntaxError(pos_, "operator or end of input");
        return e;
    }

private:
    std::string_view src_;
    const Chart& chart_;
    std::size_t pos_ = 0;

    void skip() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_node(NodeKind::Add, lhs, term());
            else if (accept('-'))
                lhs = make_node(NodeKind::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_node(NodeKind::Mul, lhs, unary());
            else if (accept('/'))
                lhs = make_node(NodeKind::Div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_node(NodeKind::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_node(NodeKind::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= src_.size()) throw SyntaxError(pos_, "number, identifier or '('");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!accept(')')) throw SyntaxError(pos_, "')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw SyntaxError(pos_, "number, identifier or '('");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw SyntaxError(start, "digits");
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw SyntaxError(pos_, "exponent digits");
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || ptr != src_.data() + pos_) throw SyntaxError(start, "number");
        return make_constant(value);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        static const std::pair<const char*, NodeKind> functions[] = {
            {"sin", NodeKind::Sin}, {"cos", NodeKind::Cos}, {"exp", NodeKind::Exp}, {"log", NodeKind::Log}};
        for (const auto& [fname, kind] : functions) {
            if (name != fname) continue;
            if (!accept('(')) throw SyntaxError(pos_, "'(' after " + name);
            NodePtr arg = expr();
            if (!accept(')')) throw SyntaxError(pos_, "')'");
            return make_node(kind, arg);
        }
        return make_variable(chart_.index(name), name);
    }
};

}  // namespace

// ------------------------------------------------------------------ public

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

Expression::Expression() : root_(make_constant(0.0)) {}

Expression Expression::constant(double value) { return Expression(make_constant(value)); }

Expression Expression::variable(std::size_t index, std::string name) {
    return Expression(make_variable(index, std::move(name)));
}

Expression Expression::variable(const Chart& chart, const std::string& name) {
    return variable(chart.index(name), name);
}

std::size_t Expression::required_size() const {
    std::set<std::size_t> idx;
    collect_indices(*root_, idx);
    return idx.empty() ? 0 : *idx.rbegin() + 1;
}

bool Expression::depends_only_on(const std::vector<std::size_t>& allowed) const {
    std::set<std::size_t> idx;
    collect_indices(*root_, idx);
    for (auto i : idx)
        if (std::find(allowed.begin(), allowed.end(), i) == allowed.end()) return false;
    return true;
}

double Expression::evaluate(std::span<const double> point) const {
    if (required_size() > point.size())
        throw DimensionMismatch("point has " + std::to_string(point.size()) + " coordinates, expression needs " +
                                std::to_string(required_size()));
    std::vector<double> vars(point.begin(), point.end());
    return eval(*root_, vars);
}

ValueGradient Expression::eval_with_gradient(std::span<const double> point) const {
    const std::size_t n = point.size();
    if (required_size() > n) throw DimensionMismatch("point too short for expression");
    std::vector<Dual<double>> vars;
    vars.reserve(n);
    for (std::size_t i = 0; i < n; ++i) vars.push_back(Dual<double>::variable(point[i], i, n));
    Dual<double> r = eval(*root_, vars);
    ValueGradient out;
    out.value = r.value;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < r.partials.size(); ++i) out.gradient[static_cast<Eigen::Index>(i)] = r.partials[i];
    return out;
}

Eigen::MatrixXd Expression::hessian_block(std::span<const double> point, const std::vector<std::size_t>& rows,
                                          const std::vector<std::size_t>& cols, double* asymmetry) const {
    using D1 = Dual<double>;
    using D2 = Dual<D1>;
    const std::size_t n = point.size();
    if (required_size() > n) throw DimensionMismatch("point too short for expression");
    for (auto i : rows)
        if (i >= n) throw DimensionMismatch("hessian row index out of range");
    for (auto j : cols)
        if (j >= n) throw DimensionMismatch("hessian column index out of range");

    std::vector<D2> vars;
    vars.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        D1 inner(point[k]);
        for (std::size_t j = 0; j < cols.size(); ++j)
            if (cols[j] == k) inner = D1::variable(point[k], j, cols.size());
        D2 v(inner, {});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] != k) continue;
            v.partials.assign(rows.size(), D1(0.0));
            v.partials[i] = D1(1.0);
        }
        vars.push_back(std::move(v));
    }
    D2 r = eval(*root_, vars);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const D1 row = r.partial(i);
        for (std::size_t j = 0; j < cols.size(); ++j)
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.partial(j);
    }
    double asym = 0.0;
    if (rows == cols) {
        asym = (H - H.transpose()).cwiseAbs().maxCoeff();
        H = 0.5 * (H + H.transpose()).eval();
    }
    if (asymmetry) *asymmetry = asym;
    return H;
}

std::string Expression::to_string() const { return node_string(*root_); }

Expression operator+(const Expression& a, const Expression& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value());
    return Expression(make_node(NodeKind::Add, a.root_, b.root_));
}

Expression operator-(const Expression& a, const Expression& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value());
    return Expression(make_node(NodeKind::Sub, a.root_, b.root_));
}

Expression operator*(const Expression& a, const Expression& b) {
    if (a.is_zero() || b.is_zero()) return Expression::constant(0.0);
    if (a.is_constant() && a.constant_value() == 1.0) return b;
    if (b.is_constant() && b.constant_value() == 1.0) return a;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value());
    return Expression(make_node(NodeKind::Mul, a.root_, b.root_));
}

Expression operator/(const Expression& a, const Expression& b) {
    if (b.is_constant() && b.constant_value() == 1.0) return a;
    return Expression(make_node(NodeKind::Div, a.root_, b.root_));
}

Expression operator-(const Expression& a) {
    if (a.is_constant()) return Expression::constant(-a.constant_value());
    if (a.root_->kind == NodeKind::Neg) return Expression(a.root_->lhs);
    return Expression(make_node(NodeKind::Neg, a.root_));
}

Expression pow(const Expression& base, double exponent) {
    if (exponent == 1.0) return base;
    return Expression(make_node(NodeKind::Pow, base.root_ptr(), make_constant(exponent)));
}

Expression sin(const Expression& e) { return Expression(make_node(NodeKind::Sin, e.root_ptr())); }
Expression cos(const Expression& e) { return Expression(make_node(NodeKind::Cos, e.root_ptr())); }
Expression exp(const Expression& e) { return Expression(make_node(NodeKind::Exp, e.root_ptr())); }
Expression log(const Expression& e) { return Expression(make_node(NodeKind::Log, e.root_ptr())); }

Expression parse(std::string_view source, const Chart& chart) {
    for (std::size_t i = 0; i < source.size(); ++i)
        if (static_cast<unsigned char>(source[i]) > 127) throw SyntaxError(i, "ASCII character");
    Parser p(source, chart);
    return Expression(p.parse_all());
}

}  // namespace lagreg
