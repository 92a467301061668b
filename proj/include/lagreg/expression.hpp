#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagreg/chart.hpp"

namespace lagreg {

enum class NodeKind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log };

struct Node {
    NodeKind kind;
    double value = 0.0;      // Constant
    std::size_t index = 0;   // Variable
    std::string name;        // Variable
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

struct ValueGradient {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

/// Immutable scalar field over chart coordinates.
///
/// Variables are stored as positional indices into a chart layout, so an
/// expression parsed on a chart keeps its meaning on any chart that has that
/// chart as a prefix.
class Expression {
public:
    Expression();  // the constant 0
    explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

    static Expression constant(double value);
    static Expression variable(std::size_t index, std::string name);
    static Expression variable(const Chart& chart, const std::string& name);

    double evaluate(std::span<const double> point) const;
    ValueGradient eval_with_gradient(std::span<const double> point) const;

    /// Second partials d^2 e / d rows_i d cols_j. When rows == cols the result is
    /// symmetrized and the removed asymmetry is written to `asymmetry`.
    Eigen::MatrixXd hessian_block(std::span<const double> point, const std::vector<std::size_t>& rows,
                                  const std::vector<std::size_t>& cols, double* asymmetry = nullptr) const;

    std::string to_string() const;

    bool is_constant() const { return root_->kind == NodeKind::Constant; }
    bool is_zero() const { return is_constant() && root_->value == 0.0; }
    double constant_value() const { return root_->value; }
    /// Largest variable index referenced plus one (0 when constant).
    std::size_t required_size() const;
    /// True when every referenced variable index is in `allowed`.
    bool depends_only_on(const std::vector<std::size_t>& allowed) const;

    const Node& root() const { return *root_; }
    const std::shared_ptr<const Node>& root_ptr() const { return root_; }

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);

private:
    std::shared_ptr<const Node> root_;
};

Expression pow(const Expression& base, double exponent);
Expression sin(const Expression& e);
Expression cos(const Expression& e);
Expression exp(const Expression& e);
Expression log(const Expression& e);

/// Parses standard infix syntax: + - * / ^, unary minus, parentheses,
/// sin/cos/exp/log calls, decimal literals and chart coordinate names.
Expression parse(std::string_view source, const Chart& chart);

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);

}  // namespace lagreg
