#pragma once

// Test-only oracles, deliberately independent of the library's numerics: a
// plain adaptive Simpson integrator and mt19937-based Monte Carlo samplers.

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) * (f(a) + 4.0 * f(c) + f(b)) / 6.0;
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, double whole, int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    const double diff = left + right - whole;
    if (depth <= 0 || std::fabs(diff) < 15.0 * eps) return left + right + diff / 15.0;
    return adaptive_simpson(f, a, c, 0.5 * eps, left, depth - 1) +
           adaptive_simpson(f, c, b, 0.5 * eps, right, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-12) {
    return adaptive_simpson(f, a, b, eps, simpson(f, a, b), 60);
}

inline double exp_draw(std::mt19937_64& rng, double rate) {
    std::exponential_distribution<double> d(rate);
    return d(rng);
}

inline double erlang_draw(std::mt19937_64& rng, int shape, double rate) {
    double sum = 0.0;
    for (int i = 0; i < shape; ++i) sum += exp_draw(rng, rate);
    return sum;
}

}  // namespace oracle
