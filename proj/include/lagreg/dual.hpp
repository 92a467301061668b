#pragma once

// Forward-mode dual numbers with a dynamic number of partials.
//
// Dual<double> carries a value and first partials; Dual<Dual<double>> nests
// the construction so that the partials of the inner partials are second
// derivatives. Partials vectors may be empty, which stands for "all zero"
// and keeps constants cheap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace lagreg {

template <typename T>
struct Dual {
    T value{};
    std::vector<T> partials;

    Dual() = default;
    Dual(double v) : value(v) {}  // NOLINT: implicit promotion of constants
    Dual(T v, std::vector<T> d) : value(std::move(v)), partials(std::move(d)) {}

    /// Independent variable number `index` among `count` active directions.
    static Dual variable(T v, std::size_t index, std::size_t count) {
        Dual d(std::move(v), std::vector<T>(count, T(0.0)));
        d.partials[index] = T(1.0);
        return d;
    }

    T partial(std::size_t i) const { return i < partials.size() ? partials[i] : T(0.0); }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
    return primal(x.value);
}

namespace detail {

// result.partials = a*x.partials + b*y.partials (either side may be empty)
template <typename T>
std::vector<T> combine(const T& a, const std::vector<T>& x, const T& b, const std::vector<T>& y) {
    const std::size_t n = std::max(x.size(), y.size());
    std::vector<T> out;
    if (n == 0) return out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        T term = T(0.0);
        if (i < x.size()) term = a * x[i];
        if (i < y.size()) term = term + b * y[i];
        out.push_back(std::move(term));
    }
    return out;
}

template <typename T>
std::vector<T> scale(const T& a, const std::vector<T>& x) {
    std::vector<T> out;
    out.reserve(x.size());
    for (const auto& xi : x) out.push_back(a * xi);
    return out;
}

}  // namespace detail

template <typename T>
Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
    return {x.value + y.value, detail::combine(T(1.0), x.partials, T(1.0), y.partials)};
}

template <typename T>
Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
    return {x.value - y.value, detail::combine(T(1.0), x.partials, T(-1.0), y.partials)};
}

template <typename T>
Dual<T> operator-(const Dual<T>& x) {
    return {-x.value, detail::scale(T(-1.0), x.partials)};
}

template <typename T>
Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
    return {x.value * y.value, detail::combine(y.value, x.partials, x.value, y.partials)};
}

template <typename T>
Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
    const T inv = T(1.0) / y.value;
    const T q = x.value * inv;
    // d(x/y) = dx/y - x dy / y^2
    return {q, detail::combine(inv, x.partials, -(q * inv), y.partials)};
}

/// Chain rule for a unary primitive with value f and derivative df at x.value.
template <typename T>
Dual<T> apply_unary(const Dual<T>& x, T f, const T& df) {
    return {std::move(f), detail::scale(df, x.partials)};
}

template <typename T>
Dual<T> sin(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return apply_unary(x, sin(x.value), cos(x.value));
}

template <typename T>
Dual<T> cos(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return apply_unary(x, cos(x.value), -sin(x.value));
}

template <typename T>
Dual<T> exp(const Dual<T>& x) {
    using std::exp;
    T e = exp(x.value);
    return apply_unary(x, e, e);
}

template <typename T>
Dual<T> log(const Dual<T>& x) {
    using std::log;
    return apply_unary(x, log(x.value), T(1.0) / x.value);
}

/// x^c for a constant real exponent.
template <typename T>
Dual<T> pow(const Dual<T>& x, double c) {
    using std::pow;
    if (c == 0.0) return Dual<T>(T(1.0), {});
    if (c == 1.0) return x;
    return apply_unary(x, pow(x.value, c), T(c) * pow(x.value, c - 1.0));
}

/// x^n for an integer exponent via repeated multiplication (exact at x = 0).
template <typename T>
T ipow(const T& x, long n) {
    if (n < 0) return T(1.0) / ipow(x, -n);
    T result(1.0);
    T base = x;
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return result;
}

}  // namespace lagreg
