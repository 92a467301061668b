#pragma once

#include <random>
#include <string>
#include <vector>

#include "lagreg/chart.hpp"
#include "lagreg/expression.hpp"
#include "lagreg/linalg.hpp"

namespace testing_support {

inline lagreg::Chart chart_xf(bool time = false) {
    return lagreg::Chart::tangent({{"x", lagreg::Role::Leaf}, {"f", lagreg::Role::Fiber}}, time);
}

inline lagreg::Chart chart_q(bool time = false) { return lagreg::Chart::tangent({{"q", lagreg::Role::Leaf}}, time); }

inline lagreg::Vector vec(std::initializer_list<double> v) {
    lagreg::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline std::vector<lagreg::Vector> uniform_points(std::size_t count, std::size_t dim, double lo, double hi,
                                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<lagreg::Vector> out;
    for (std::size_t k = 0; k < count; ++k) {
        lagreg::Vector p(static_cast<Eigen::Index>(dim));
        for (auto& c : p) c = u(rng);
        out.push_back(p);
    }
    return out;
}

/// Central finite-difference gradient, used as an independent oracle.
inline lagreg::Vector fd_gradient(const lagreg::Expression& e, const lagreg::Vector& x, double h) {
    lagreg::Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        lagreg::Vector p = x, m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (e.evaluate({p.data(), static_cast<std::size_t>(p.size())}) -
                e.evaluate({m.data(), static_cast<std::size_t>(m.size())})) /
               (2 * h);
    }
    return g;
}

}  // namespace testing_support

namespace testing_support {

/// Random polynomial of total degree <= max_degree over the given names, as source text.
inline std::string random_polynomial(const std::vector<std::string>& names, int max_degree, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> terms_dist(1, 6);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    std::uniform_int_distribution<std::size_t> var(0, names.size() - 1);
    std::uniform_int_distribution<int> degree(0, max_degree);
    std::string out;
    const int terms = terms_dist(rng);
    for (int t = 0; t < terms; ++t) {
        if (t) out += " + ";
        out += "(" + lagreg::format_number(coeff(rng)) + ")";
        int remaining = degree(rng);
        while (remaining > 0) {
            std::uniform_int_distribution<int> power(1, remaining);
            const int p = power(rng);
            out += "*" + names[var(rng)];
            if (p > 1) out += "^" + std::to_string(p);
            remaining -= p;
        }
    }
    return out;
}

}  // namespace testing_support
