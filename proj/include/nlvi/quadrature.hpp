#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "nlvi/errors.hpp"

namespace nlvi {

/// Gauss-Legendre rule on [0, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f, double lo, double hi) const {
        const double len = hi - lo;
        double sum = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) sum += weights[q] * f(lo + len * nodes[q]);
        return sum * len;
    }
};

namespace detail {

inline GaussRule compute_gauss_rule(int order) {
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        // Newton on P_order starting from the Chebyshev-like guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Map [-1, 1] -> [0, 1], nodes increasing.
        rule.nodes[order - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[order - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace detail

/// Cached rule of the given order (thread-safe).
inline const GaussRule& gauss_rule(int order) {
    detail::require(order >= 1 && order <= 64, "Gauss order must lie in [1, 64]");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, detail::compute_gauss_rule(order)).first;
    return it->second;
}

/// Integrates f over [0, len] where f may be singular at 0: geometric
/// subdivision [len 2^{-j-1}, len 2^{-j}] until the innermost cell is
/// narrower than `min_width`, then one last Gauss cell on [0, min].
template <class F>
double graded_integral(F&& f, double len, const GaussRule& rule, double min_width) {
    double sum = 0.0;
    double hi = len;
    while (hi > min_width) {
        const double lo = 0.5 * hi;
        sum += rule.integrate(f, lo, hi);
        hi = lo;
    }
    return sum + rule.integrate(f, 0.0, hi);
}

}  // namespace nlvi
